#include "ptrack/robot.hpp"

#include <cmath>

namespace ptrack {

namespace {

inline Vec2 rot(double a, const Vec2& v) {
  const double c = std::cos(a), s = std::sin(a);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

inline Vec2 perp(const Vec2& v) { return {-v.y(), v.x()}; }  // z-cross

}  // namespace

void RobotModel::validate() const {
  if (base.mass <= 0.0 || base.inertia <= 0.0)
    throw ConfigError("robot: base mass/inertia must be positive");
  for (const auto& l : links)
    if (l.mass <= 0.0 || l.inertia <= 0.0)
      throw ConfigError("robot: link '" + l.name + "' mass/inertia must be positive");
  for (int j = 0; j < num_joints(); ++j) {
    const auto& jp = joints[j];
    if (jp.limit_lo >= jp.limit_hi)
      throw ConfigError("robot: joint '" + jp.name + "' limit_lo must be < limit_hi");
    if (jp.torque_limit <= 0.0)
      throw ConfigError("robot: joint '" + jp.name + "' torque_limit must be positive");
    if (action_scale(j) <= 0.0)
      throw ConfigError("robot: joint '" + jp.name + "' action scale must be positive");
    if (default_pose(j) < jp.limit_lo || default_pose(j) > jp.limit_hi)
      throw ConfigError("robot: joint '" + jp.name + "' default pose outside limits");
  }
}

RobotModel default_biped() {
  RobotModel m;
  auto leg_links = [&](const std::string& side) {
    m.links.push_back({"thigh_" + side, 3.0, 0.30, 0.0225, 0.15});
    m.links.push_back({"shank_" + side, 2.0, 0.30, 0.0150, 0.15});
    m.links.push_back({"foot_" + side, 0.8, 0.16, 0.0030, 0.05});
  };
  auto leg_joints = [&](const std::string& side) {
    m.joints.push_back({"hip_" + side, -1.6, 1.6, 12.0, 60.0, 80.0, 2.5, 0.05, 0.01});
    m.joints.push_back({"knee_" + side, -2.4, 0.05, 12.0, 60.0, 80.0, 2.5, 0.05, 0.01});
    m.joints.push_back({"ankle_" + side, -1.0, 1.0, 12.0, 30.0, 40.0, 1.0, 0.02, 0.005});
  };
  leg_links("l");
  leg_joints("l");
  leg_links("r");
  leg_joints("r");

  m.default_pose.resize(6);
  m.default_pose << 0.25, -0.5, 0.25, 0.25, -0.5, 0.25;
  m.action_scale.resize(6);
  m.action_scale << 0.6, 0.6, 0.4, 0.6, 0.6, 0.4;
  m.base = {16.0, 0.35, Vec2(0.0, 0.20)};
  m.foot_points = {Vec2(-0.05, -0.03), Vec2(0.12, -0.03)};
  m.foot_sole_drop = 0.03;
  m.validate();
  return m;
}

SimState SimState::zero(int num_joints) {
  SimState s;
  s.q = Eigen::VectorXd::Zero(num_joints);
  s.qdot = Eigen::VectorXd::Zero(num_joints);
  s.last_action = Eigen::VectorXd::Zero(num_joints);
  return s;
}

bool SimState::finite() const {
  return base_pos.allFinite() && std::isfinite(base_pitch) && base_vel.allFinite() &&
         std::isfinite(base_pitch_rate) && q.allFinite() && qdot.allFinite();
}

FkResult forward_kinematics(const RobotModel& model, const SimState& state) {
  FkResult fk;
  const int nl = model.num_links();
  fk.link_com_world.resize(nl);
  fk.link_pitch.resize(nl);
  fk.link_com_local.resize(nl);
  fk.link_vel_world.resize(nl);
  fk.link_pitch_rate.resize(nl);

  const Vec2 base = state.base_pos;
  const double pb = state.base_pitch;
  const double wb = state.base_pitch_rate;

  for (int leg = 0; leg < 2; ++leg) {
    const int j0 = 3 * leg;
    Vec2 joint_pos = base;                  // hip at the base origin
    Vec2 joint_vel = state.base_vel;        // hip coincides with the base point
    double angle = pb;
    double omega = wb;
    for (int k = 0; k < 3; ++k) {
      const int li = j0 + k;
      const LinkParams& link = model.links[li];
      angle += state.q(j0 + k);
      omega += state.qdot(j0 + k);
      // Thigh and shank extend along -z at zero angle, the foot along +x.
      const Vec2 axis = (k < 2) ? Vec2(0.0, -1.0) : Vec2(1.0, 0.0);
      const Vec2 com_off = (k < 2) ? Vec2(0.0, -link.com_offset)
                                   : Vec2(link.com_offset, -model.foot_sole_drop * 0.5);
      const Vec2 r_com = rot(angle, com_off);
      fk.link_com_world[li] = joint_pos + r_com;
      fk.link_pitch[li] = angle;
      fk.link_vel_world[li] = joint_vel + omega * perp(r_com);
      fk.link_pitch_rate[li] = omega;
      fk.link_com_local[li] = rot(-pb, fk.link_com_world[li] - base);
      if (k == 2) {
        for (const Vec2& fp : model.foot_points) {
          const Vec2 r = rot(angle, fp);
          fk.foot_point_world.push_back(joint_pos + r);
          fk.foot_point_vel.push_back(joint_vel + omega * perp(r));
        }
      } else {
        const Vec2 r_end = rot(angle, axis * link.length);
        joint_vel = joint_vel + omega * perp(r_end);
        joint_pos = joint_pos + r_end;
      }
    }
  }
  return fk;
}

void local_link_pose(const RobotModel& model, const Eigen::VectorXd& q,
                     std::vector<Vec2>& com_local, std::vector<double>& pitch_local) {
  SimState s = SimState::zero(model.num_joints());
  s.q = q;
  FkResult fk = forward_kinematics(model, s);
  com_local = fk.link_com_local;
  pitch_local = fk.link_pitch;
}

void local_link_velocity(const RobotModel& model, const Eigen::VectorXd& q,
                         const Eigen::VectorXd& qdot, std::vector<Vec2>& vel_local,
                         std::vector<double>& pitch_rate_local) {
  SimState s = SimState::zero(model.num_joints());
  s.q = q;
  s.qdot = qdot;
  FkResult fk = forward_kinematics(model, s);
  vel_local = fk.link_vel_world;  // base at rest and zero pitch: world == local
  pitch_rate_local = fk.link_pitch_rate;
}

std::vector<double> foot_point_heights(const RobotModel& model,
                                       const Eigen::VectorXd& q, double base_height) {
  SimState s = SimState::zero(model.num_joints());
  s.q = q;
  s.base_pos = Vec2(0.0, base_height);
  FkResult fk = forward_kinematics(model, s);
  std::vector<double> out;
  out.reserve(fk.foot_point_world.size());
  for (const Vec2& p : fk.foot_point_world) out.push_back(p.y());
  return out;
}

double standing_base_height(const RobotModel& model, const Eigen::VectorXd& q) {
  std::vector<double> h = foot_point_heights(model, q, 0.0);
  double lowest = h.empty() ? 0.0 : h[0];
  for (double v : h) lowest = std::min(lowest, v);
  return -lowest;
}

}  // namespace ptrack
