#include <cmath>

#include "ptrack/tracker.hpp"

namespace ptrack {

TrackEnv::TrackEnv(const RobotModel& model, const MotionDataset& dataset,
                   std::vector<int> clip_pool, const EnvParams& params,
                   const RewardWeights& rewards, uint64_t seed)
    : model_(model),
      dataset_(dataset),
      clip_pool_(std::move(clip_pool)),
      params_(params),
      rewards_(rewards),
      rng_(seed) {
  if (clip_pool_.empty()) throw ConfigError("TrackEnv: empty clip pool");
  state_ = SimState::zero(model.num_joints());
  prev_action_ = Eigen::VectorXd::Zero(model.num_joints());
  reset();
}

const MotionClip& TrackEnv::clip() const { return dataset_.clips[clip_index_]; }

bool TrackEnv::config_is_nominal() const {
  const DynamicsConfig n = DynamicsConfig::nominal(model_.num_joints());
  return config_.floor_friction == n.floor_friction &&
         config_.terrain.max_height == 0.0 && config_.push.interval_s == 0.0 &&
         config_.dof_friction_scale == 1.0 && config_.armature_scale == 1.0 &&
         config_.torso_com_shift == 0.0 && config_.torso_mass_delta == 0.0 &&
         config_.default_pose_jitter.isZero();
}

void TrackEnv::sample_episode() {
  clip_index_ = clip_pool_[rng_.index(clip_pool_.size())];
  if (params_.disturbances) {
    config_ = sample_dynamics_config(rng_, params_.ranges, model_.num_joints());
  } else {
    config_ = DynamicsConfig::nominal(model_.num_joints());
  }
  if (config_.terrain.max_height > 0.0) {
    terrain_ = fractal_terrain(config_.terrain, config_.terrain.seed);
    terrain_.friction = config_.floor_friction;
  } else {
    terrain_ = flat_terrain(config_.floor_friction);
  }

  const MotionClip& c = dataset_.clips[clip_index_];
  const double phase = rng_.uniform(0.0, std::max(0.0, c.duration() - control_dt()));
  init_from_reference(phase);
}

void TrackEnv::init_from_reference(double phase) {
  const MotionClip& c = dataset_.clips[clip_index_];
  phase0_ = phase;
  episode_t_ = 0.0;
  episode_len_ = std::min(c.duration() - phase, params_.max_episode_s);

  const TrackingGoal g = clip_goal(c, phase);
  state_ = SimState::zero(model_.num_joints());
  state_.q = g.q_target;
  state_.qdot = g.qdot_target;
  state_.base_vel = g.base_vel_target;
  state_.base_pos = Vec2(0.0, g.base_height_target);

  // Drop onto the sampled terrain so the lowest contact point touches it.
  FkResult fk = forward_kinematics(model_, state_);
  double raise = -std::numeric_limits<double>::infinity();
  for (const Vec2& p : fk.foot_point_world)
    raise = std::max(raise, terrain_height(terrain_, p.x()) - p.y());
  state_.base_pos.y() += raise;

  prev_action_.setZero();
  state_.last_action.setZero();

  pushes_.clear();
  if (config_.push.interval_s > 0.0) {
    for (double t = config_.push.interval_s; t < episode_len_;
         t += config_.push.interval_s)
      pushes_.push_back({t, config_.push.magnitude * config_.push.direction});
  }
  refresh_io();
}

void TrackEnv::reset() { sample_episode(); }

void TrackEnv::reset_to(int clip_index, double phase, const DynamicsConfig& config) {
  clip_index_ = clip_index;
  config_ = config;
  if (config_.terrain.max_height > 0.0) {
    terrain_ = fractal_terrain(config_.terrain, config_.terrain.seed);
    terrain_.friction = config_.floor_friction;
  } else {
    terrain_ = flat_terrain(config_.floor_friction);
  }
  init_from_reference(phase);
}

void TrackEnv::refresh_io() {
  const MotionClip& c = dataset_.clips[clip_index_];
  goal_struct_ = clip_goal(c, phase0_ + episode_t_ + control_dt());
  goal_ = goal_struct_.flatten();
  obs_ = observe(state_, model_);
  priv_ = privileged_observe(state_, model_, config_, terrain_);
}

EnvStepResult TrackEnv::step(const Eigen::VectorXd& raw_action) {
  EnvStepResult out;
  const Eigen::VectorXd action = raw_action.array().tanh();
  const Eigen::VectorXd pd_targets =
      canonicalize_action(raw_action, goal_struct_.q_target, model_.action_scale);

  const Eigen::VectorXd qdot_prev = state_.qdot;
  Eigen::VectorXd torque_sq = Eigen::VectorXd::Zero(model_.num_joints());
  bool diverged = false;

  StepInfo info;
  for (int k = 0; k < params_.decimation; ++k) {
    try {
      state_ = ptrack::step(state_, pd_targets, model_, terrain_, config_,
                            params_.sim_dt, pushes_, &info);
      torque_sq += info.applied_torque.cwiseAbs2();
    } catch (const SimDivergedError&) {
      diverged = true;
      break;
    }
  }
  state_.last_action = action;
  out.final_state = state_;

  if (diverged) {
    out.diverged = true;
    out.terminated = true;
    out.done = true;
    out.reward = rewards_.weight[kTermination];
    out.breakdown.term[kTermination] = rewards_.weight[kTermination];
    out.breakdown.total = out.reward;
    reset();
    return out;
  }

  episode_t_ += control_dt();

  out.errors = tracking_errors(model_, terrain_, state_, goal_struct_);
  {
    FkResult fk = forward_kinematics(model_, state_);
    out.link_pos_local = fk.link_com_local;
  }
  const bool terminated = out.errors.mean_link_pos > 0.2 ||
                          std::abs(out.errors.root_height) > 0.2 ||
                          std::abs(state_.base_pitch) > 1.2;
  const bool timeout = episode_t_ >= episode_len_ - 1e-9;

  RewardInputs rin;
  rin.state = &state_;
  rin.goal = &goal_struct_;
  rin.action = action;
  rin.prev_action = prev_action_;
  rin.qdot_prev = qdot_prev;
  rin.torques = (torque_sq / params_.decimation).cwiseSqrt();
  rin.terminated = terminated;
  out.breakdown = compute_reward(model_, terrain_, rewards_, rin);
  out.reward = out.breakdown.total;
  out.terminated = terminated;
  out.done = terminated || timeout;

  prev_action_ = action;

  if (out.done) {
    // Keep the pre-reset observations for value bootstrapping on timeouts.
    const MotionClip& c = dataset_.clips[clip_index_];
    TrackingGoal final_goal = clip_goal(c, phase0_ + episode_t_ + control_dt());
    out.final_priv = privileged_observe(state_, model_, config_, terrain_);
    out.final_goal = final_goal.flatten();
    reset();
  } else {
    refresh_io();
  }
  return out;
}

}  // namespace ptrack
