#include <cmath>
#include <limits>

#include "ptrack/tracker.hpp"

namespace ptrack {

Eigen::VectorXd canonicalize_action(const Eigen::VectorXd& policy_out,
                                    const Eigen::VectorXd& q_target_next,
                                    const Eigen::VectorXd& action_scale) {
  if (policy_out.size() != q_target_next.size() ||
      policy_out.size() != action_scale.size())
    throw ShapeError("canonicalize_action: vector lengths differ");
  return q_target_next.array() + action_scale.array() * policy_out.array().tanh();
}

const std::array<const char*, kNumRewardTerms> kRewardTermNames = {
    "upper_body_pos", "lower_body_pos", "torso_pitch",    "body_rot",
    "body_lin_vel",   "body_ang_vel",   "dof_pos",        "dof_vel",
    "root_lin_vel",   "root_ang_vel",   "root_height",    "feet_height",
    "action_rate",    "dof_vel_rate",   "torques",        "dof_pos_limits",
    "dof_vel_limits", "self_collision", "termination"};

RewardWeights::RewardWeights() {
  weight = {1.0, 0.5, 1.0,  0.5,   0.5,   0.5,    0.75,  0.5,   1.0,   1.0,
            1.0, 1.0, -0.5, -1e-6, -2e-5, -10.0, -5.0,  -10.0, -200.0};
  sigma.fill(1.0);
  sigma[kUpperBodyPos] = 0.3;
  sigma[kLowerBodyPos] = 0.3;
  sigma[kTorsoPitch] = 0.4;
  sigma[kBodyRot] = 0.4;
  sigma[kBodyLinVel] = 1.0;
  sigma[kBodyAngVel] = 3.0;
  sigma[kDofPos] = 0.35;
  sigma[kDofVel] = 6.0;
  sigma[kRootLinVel] = 1.0;
  sigma[kRootAngVel] = 3.0;
  sigma[kRootHeight] = 0.15;
  sigma[kFeetHeight] = 0.15;
}

void RewardWeights::validate() const {
  for (int t = kUpperBodyPos; t <= kFeetHeight; ++t) {
    if (weight[t] <= 0.0) throw ConfigError("reward weights: task terms must be positive");
    if (sigma[t] <= 0.0) throw ConfigError("reward weights: sigma must be positive");
  }
  for (int t = kActionRate; t < kNumRewardTerms; ++t)
    if (weight[t] > 0.0)
      throw ConfigError("reward weights: regularization/penalty terms must be <= 0");
  if (weight[kTermination] >= 0.0)
    throw ConfigError("reward weights: termination must be strictly negative");
}

double RewardWeights::task_weight_sum() const {
  double s = 0.0;
  for (int t = kUpperBodyPos; t <= kFeetHeight; ++t) s += weight[t];
  return s;
}

namespace {

// Soft limits used by the planar self-collision proxy.
constexpr double kSoftLimitMargin = 0.1;

inline double kernel(double err, double sigma) {
  return std::exp(-(err * err) / (sigma * sigma));
}

double height_above_ground(const Terrain& terrain, const SimState& state) {
  return state.base_pos.y() - terrain_height(terrain, state.base_pos.x());
}

}  // namespace

TrackingErrors tracking_errors(const RobotModel& model, const Terrain& terrain,
                               const SimState& state, const TrackingGoal& goal) {
  FkResult fk = forward_kinematics(model, state);
  double sum = 0.0;
  const int nl = model.num_links();
  for (int l = 0; l < nl; ++l)
    sum += (fk.link_com_local[l] - goal.link_pos_target[l]).norm();
  TrackingErrors e;
  e.mean_link_pos = sum / nl;
  e.root_height = height_above_ground(terrain, state) - goal.base_height_target;
  return e;
}

bool check_termination(const RobotModel& model, const Terrain& terrain,
                       const SimState& state, const TrackingGoal& goal) {
  const TrackingErrors err = tracking_errors(model, terrain, state, goal);
  if (err.mean_link_pos > 0.2) return true;
  if (std::abs(err.root_height) > 0.2) return true;
  if (std::abs(state.base_pitch) > 1.2) return true;
  return false;
}

RewardBreakdown compute_reward(const RobotModel& model, const Terrain& terrain,
                               const RewardWeights& w, const RewardInputs& in) {
  const SimState& s = *in.state;
  const TrackingGoal& g = *in.goal;
  const int nj = model.num_joints();
  const int nl = model.num_links();
  RewardBreakdown out;

  FkResult fk = forward_kinematics(model, s);

  // Reference link pitch/velocity from the goal's joint-space targets.
  std::vector<Vec2> ref_vel;
  std::vector<double> ref_pitch_rate;
  local_link_velocity(model, g.q_target, g.qdot_target, ref_vel, ref_pitch_rate);
  std::vector<Vec2> ref_pos_unused;
  std::vector<double> ref_pitch;
  local_link_pose(model, g.q_target, ref_pos_unused, ref_pitch);

  // Executed link velocities in the base-local sense (joint motion only).
  std::vector<Vec2> loc_vel;
  std::vector<double> loc_pitch_rate;
  local_link_velocity(model, s.q, s.qdot, loc_vel, loc_pitch_rate);

  // Upper body = torso link; its base-local CoM is rigid, so the position
  // error is identically zero and the term acts as a per-step alive bonus.
  out.term[kUpperBodyPos] = w.weight[kUpperBodyPos] * kernel(0.0, w.sigma[kUpperBodyPos]);
  out.term[kTorsoPitch] = w.weight[kTorsoPitch] * kernel(s.base_pitch, w.sigma[kTorsoPitch]);

  double pos_err = 0.0, rot_err = 0.0, lin_err = 0.0, ang_err = 0.0;
  for (int l = 0; l < nl; ++l) {
    pos_err += (fk.link_com_local[l] - g.link_pos_target[l]).squaredNorm();
    const double dp = (fk.link_pitch[l] - s.base_pitch) - ref_pitch[l];
    rot_err += dp * dp;
    lin_err += (loc_vel[l] - ref_vel[l]).squaredNorm();
    const double dr = loc_pitch_rate[l] - ref_pitch_rate[l];
    ang_err += dr * dr;
  }
  out.term[kLowerBodyPos] =
      w.weight[kLowerBodyPos] * kernel(std::sqrt(pos_err / nl), w.sigma[kLowerBodyPos]);
  out.term[kBodyRot] = w.weight[kBodyRot] * kernel(std::sqrt(rot_err / nl), w.sigma[kBodyRot]);
  out.term[kBodyLinVel] =
      w.weight[kBodyLinVel] * kernel(std::sqrt(lin_err / nl), w.sigma[kBodyLinVel]);
  out.term[kBodyAngVel] =
      w.weight[kBodyAngVel] * kernel(std::sqrt(ang_err / nl), w.sigma[kBodyAngVel]);

  const double dof_pos_err = std::sqrt((s.q - g.q_target).squaredNorm() / nj);
  const double dof_vel_err = std::sqrt((s.qdot - g.qdot_target).squaredNorm() / nj);
  out.term[kDofPos] = w.weight[kDofPos] * kernel(dof_pos_err, w.sigma[kDofPos]);
  out.term[kDofVel] = w.weight[kDofVel] * kernel(dof_vel_err, w.sigma[kDofVel]);

  out.term[kRootLinVel] = w.weight[kRootLinVel] *
                          kernel((s.base_vel - g.base_vel_target).norm(), w.sigma[kRootLinVel]);
  out.term[kRootAngVel] =
      w.weight[kRootAngVel] * kernel(s.base_pitch_rate, w.sigma[kRootAngVel]);

  const double h_err = height_above_ground(terrain, s) - g.base_height_target;
  out.term[kRootHeight] = w.weight[kRootHeight] * kernel(h_err, w.sigma[kRootHeight]);

  // Feet height above local ground vs reference.
  const int per_foot = static_cast<int>(model.foot_points.size());
  double feet_err = 0.0;
  for (int foot = 0; foot < 2; ++foot) {
    double lowest = std::numeric_limits<double>::infinity();
    for (int p = 0; p < per_foot; ++p) {
      const Vec2& pt = fk.foot_point_world[foot * per_foot + p];
      lowest = std::min(lowest, pt.y() - terrain_height(terrain, pt.x()));
    }
    const double d = lowest - g.feet_height_target[foot];
    feet_err += d * d;
  }
  out.term[kFeetHeight] =
      w.weight[kFeetHeight] * kernel(std::sqrt(feet_err / 2.0), w.sigma[kFeetHeight]);

  out.term[kActionRate] = w.weight[kActionRate] * (in.action - in.prev_action).squaredNorm();
  out.term[kDofVelRate] = w.weight[kDofVelRate] * (s.qdot - in.qdot_prev).squaredNorm();
  out.term[kTorques] = w.weight[kTorques] * in.torques.squaredNorm();

  double pos_limit = 0.0, vel_limit = 0.0, soft = 0.0;
  for (int j = 0; j < nj; ++j) {
    const JointParams& jp = model.joints[j];
    const double over_hi = std::max(0.0, s.q(j) - jp.limit_hi);
    const double under_lo = std::max(0.0, jp.limit_lo - s.q(j));
    pos_limit += over_hi * over_hi + under_lo * under_lo;
    const double over_v = std::max(0.0, std::abs(s.qdot(j)) - jp.vel_limit);
    vel_limit += over_v * over_v;
    const double soft_hi = std::max(0.0, s.q(j) - (jp.limit_hi - kSoftLimitMargin));
    const double soft_lo = std::max(0.0, (jp.limit_lo + kSoftLimitMargin) - s.q(j));
    soft += soft_hi * soft_hi + soft_lo * soft_lo;
  }
  out.term[kDofPosLimits] = w.weight[kDofPosLimits] * pos_limit;
  out.term[kDofVelLimits] = w.weight[kDofVelLimits] * vel_limit;
  out.term[kSelfCollision] = w.weight[kSelfCollision] * soft;

  out.term[kTermination] = in.terminated ? w.weight[kTermination] : 0.0;

  out.total = 0.0;
  for (double t : out.term) out.total += t;
  return out;
}

}  // namespace ptrack
