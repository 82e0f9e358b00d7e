#include "ptrack/dynamics.hpp"

#include <cmath>

#include "ptrack/errors.hpp"

namespace ptrack {

namespace {
constexpr double kGravity = 9.81;
}

double gravity() { return kGravity; }

void DisturbanceRanges::validate() const {
  auto check = [](const Range& r, const char* name) {
    if (!r.well_formed())
      throw ConfigError(std::string("disturbance range '") + name + "': lo > hi");
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi))
      throw ConfigError(std::string("disturbance range '") + name + "': non-finite");
  };
  check(floor_friction, "floor_friction");
  check(noise_scale, "noise_scale");
  check(noise_octaves, "noise_octaves");
  check(noise_persistence, "noise_persistence");
  check(noise_lacunarity, "noise_lacunarity");
  check(push_interval, "push_interval");
  check(push_magnitude, "push_magnitude");
  check(dof_friction_scale, "dof_friction_scale");
  check(armature_scale, "armature_scale");
  check(torso_com_shift, "torso_com_shift");
  check(torso_mass_delta, "torso_mass_delta");
  check(default_pose_jitter, "default_pose_jitter");
}

DisturbanceRanges DisturbanceRanges::all_enabled() {
  DisturbanceRanges r;
  r.terrain_enabled = true;
  r.push_enabled = true;
  r.physical_enabled = true;
  return r;
}

DisturbanceRanges DisturbanceRanges::family(const std::string& name) {
  DisturbanceRanges r;
  if (name == "terrains" || name == "terrain")
    r.terrain_enabled = true;
  else if (name == "external_forces" || name == "push")
    r.push_enabled = true;
  else if (name == "physical_property_changes" || name == "physical")
    r.physical_enabled = true;
  else if (name != "no_disturbance" && name != "none")
    throw ConfigError("unknown disturbance family '" + name + "'");
  return r;
}

DynamicsConfig DynamicsConfig::nominal(int num_joints) {
  DynamicsConfig c;
  c.terrain.max_height = 0.0;
  c.default_pose_jitter = Eigen::VectorXd::Zero(num_joints);
  return c;
}

int DynamicsConfig::flat_size(int num_joints) { return 14 + num_joints; }

Eigen::VectorXd DynamicsConfig::flatten() const {
  const int nj = static_cast<int>(default_pose_jitter.size());
  Eigen::VectorXd v(flat_size(nj));
  v << floor_friction, terrain.max_height, terrain.scale, terrain.octaves,
      terrain.persistence, terrain.lacunarity, push.interval_s, push.magnitude,
      push.direction.x(), push.direction.y(), dof_friction_scale, armature_scale,
      torso_com_shift, torso_mass_delta, default_pose_jitter;
  return v;
}

DynamicsConfig sample_dynamics_config(Rng& rng, const DisturbanceRanges& ranges,
                                      int num_joints) {
  ranges.validate();
  DynamicsConfig c = DynamicsConfig::nominal(num_joints);
  if (ranges.terrain_enabled) {
    c.floor_friction = rng.uniform(ranges.floor_friction.lo, ranges.floor_friction.hi);
    c.terrain.max_height = ranges.max_terrain_height;
    c.terrain.scale = rng.uniform(ranges.noise_scale.lo, ranges.noise_scale.hi);
    c.terrain.octaves = rng.uniform(ranges.noise_octaves.lo, ranges.noise_octaves.hi);
    c.terrain.persistence =
        rng.uniform(ranges.noise_persistence.lo, ranges.noise_persistence.hi);
    c.terrain.lacunarity =
        rng.uniform(ranges.noise_lacunarity.lo, ranges.noise_lacunarity.hi);
    c.terrain.seed = rng.raw();
  }
  if (ranges.push_enabled) {
    c.push.interval_s = rng.uniform(ranges.push_interval.lo, ranges.push_interval.hi);
    c.push.magnitude = rng.uniform(ranges.push_magnitude.lo, ranges.push_magnitude.hi);
    const double angle = rng.uniform(0.0, 2.0 * M_PI);
    c.push.direction = Vec2(std::cos(angle), std::sin(angle));
  }
  if (ranges.physical_enabled) {
    c.dof_friction_scale =
        rng.uniform(ranges.dof_friction_scale.lo, ranges.dof_friction_scale.hi);
    c.armature_scale = rng.uniform(ranges.armature_scale.lo, ranges.armature_scale.hi);
    c.torso_com_shift = rng.uniform(ranges.torso_com_shift.lo, ranges.torso_com_shift.hi);
    c.torso_mass_delta =
        rng.uniform(ranges.torso_mass_delta.lo, ranges.torso_mass_delta.hi);
    for (int j = 0; j < num_joints; ++j)
      c.default_pose_jitter(j) =
          rng.uniform(ranges.default_pose_jitter.lo, ranges.default_pose_jitter.hi);
  }
  return c;
}

Eigen::VectorXd pd_torque(const Eigen::VectorXd& q_desired, const Eigen::VectorXd& q,
                          const Eigen::VectorXd& qdot, const RobotModel& model,
                          double dof_friction_scale) {
  const int nj = model.num_joints();
  if (q_desired.size() != nj || q.size() != nj || qdot.size() != nj)
    throw ShapeError("pd_torque: vector length does not match joint count");
  Eigen::VectorXd tau(nj);
  for (int j = 0; j < nj; ++j) {
    const JointParams& jp = model.joints[j];
    double t = jp.kp * (q_desired(j) - q(j)) - jp.kd * qdot(j);
    t = std::clamp(t, -jp.torque_limit, jp.torque_limit);
    const double fric = jp.friction_coeff * dof_friction_scale;
    const double drag = std::min(fric, std::abs(t)) *
                        (qdot(j) > 0.0 ? 1.0 : (qdot(j) < 0.0 ? -1.0 : 0.0));
    tau(j) = t - drag;
  }
  return tau;
}

namespace {
const ContactParams kContact{};
}

const ContactParams& contact_params() { return kContact; }

Vec2 contact_force(const Vec2& point_pos, const Vec2& point_vel, const Terrain& terrain,
                   double mu) {
  const double ground = terrain_height(terrain, point_pos.x());
  const double depth = ground - point_pos.y();
  if (depth <= 0.0) return Vec2::Zero();
  double normal = kContact.k_normal * depth - kContact.c_normal * point_vel.y();
  if (normal < 0.0) normal = 0.0;
  const double cap = mu * normal;
  double tangent = -kContact.k_tangent * point_vel.x();
  tangent = std::clamp(tangent, -cap, cap);
  return {tangent, normal};
}

SimState apply_push(const SimState& state, const Push& push) {
  SimState s = state;
  s.base_vel += push.delta_base_vel;
  return s;
}

int observation_size(const RobotModel& model) { return 3 + 3 * model.num_joints(); }

Eigen::VectorXd observe(const SimState& state, const RobotModel& model) {
  const int nj = model.num_joints();
  Eigen::VectorXd obs(observation_size(model));
  obs(0) = state.base_pitch_rate;
  obs(1) = std::sin(state.base_pitch);
  obs(2) = -std::cos(state.base_pitch);
  obs.segment(3, nj) = state.q - model.default_pose;
  obs.segment(3 + nj, nj) = state.qdot;
  obs.segment(3 + 2 * nj, nj) = state.last_action;
  return obs;
}

int privileged_observation_size(const RobotModel& model) {
  return observation_size(model) + DynamicsConfig::flat_size(model.num_joints()) +
         2 * kTerrainSamplesPerFoot + 2;
}

Eigen::VectorXd privileged_observe(const SimState& state, const RobotModel& model,
                                   const DynamicsConfig& config, const Terrain& terrain) {
  const Eigen::VectorXd obs = observe(state, model);
  const Eigen::VectorXd cfg = config.flatten();
  FkResult fk = forward_kinematics(model, state);

  Eigen::VectorXd priv(privileged_observation_size(model));
  priv.head(obs.size()) = obs;
  priv.segment(obs.size(), cfg.size()) = cfg;

  // Terrain relief sampled around each foot, relative to the ground height
  // under the base.
  const double base_ground = terrain_height(terrain, state.base_pos.x());
  static const double offsets[kTerrainSamplesPerFoot] = {-0.15, 0.0, 0.15};
  int idx = static_cast<int>(obs.size() + cfg.size());
  for (int foot = 0; foot < 2; ++foot) {
    // Sample around the foot's first contact point (heel).
    const Vec2 heel = fk.foot_point_world[foot * model.foot_points.size()];
    for (double off : offsets)
      priv(idx++) = terrain_height(terrain, heel.x() + off) - base_ground;
  }
  priv(idx++) = state.base_vel.x();
  priv(idx++) = state.base_vel.y();
  return priv;
}

}  // namespace ptrack
