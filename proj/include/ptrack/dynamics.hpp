#pragma once

#include <Eigen/Core>
#include <vector>

#include "ptrack/rng.hpp"
#include "ptrack/robot.hpp"
#include "ptrack/terrain.hpp"

namespace ptrack {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool well_formed() const { return lo <= hi; }
};

// Per-family randomization ranges; defaults carry the published values.
struct DisturbanceRanges {
  bool terrain_enabled = false;
  bool push_enabled = false;
  bool physical_enabled = false;

  // Terrains
  Range floor_friction{0.3, 2.0};
  double max_terrain_height = 0.3;
  Range noise_scale{10.0, 16.0};
  Range noise_octaves{5.0, 8.0};
  Range noise_persistence{0.3, 0.5};
  Range noise_lacunarity{2.0, 4.0};
  // External forces
  Range push_interval{5.0, 10.0};
  Range push_magnitude{0.1, 1.0};
  // Physical property changes
  Range dof_friction_scale{0.5, 2.0};
  Range armature_scale{1.0, 1.05};
  Range torso_com_shift{-0.15, 0.15};
  Range torso_mass_delta{-3.0, 6.0};
  Range default_pose_jitter{-0.05, 0.05};

  void validate() const;

  static DisturbanceRanges all_enabled();
  static DisturbanceRanges family(const std::string& name);  // terrain/push/physical/none
};

struct PushSchedule {
  double interval_s = 0.0;   // 0 disables pushes
  double magnitude = 0.0;    // m/s
  Vec2 direction = Vec2::Zero();
};

// One sampled realization of the dynamics randomization.
struct DynamicsConfig {
  double floor_friction = 1.0;
  TerrainParams terrain;  // max_height == 0 means flat ground
  PushSchedule push;
  double dof_friction_scale = 1.0;
  double armature_scale = 1.0;
  double torso_com_shift = 0.0;   // m along the body x axis
  double torso_mass_delta = 0.0;  // kg
  Eigen::VectorXd default_pose_jitter;  // rad, per joint

  static DynamicsConfig nominal(int num_joints);
  // Fixed flattening used by the privileged observation (20 + joints - 6 entries).
  Eigen::VectorXd flatten() const;
  static int flat_size(int num_joints);
};

struct Push {
  double trigger_time = 0.0;       // s
  Vec2 delta_base_vel = Vec2::Zero();
};

DynamicsConfig sample_dynamics_config(Rng& rng, const DisturbanceRanges& ranges,
                                      int num_joints);

// PD torque with saturation and dry friction (per joint).
Eigen::VectorXd pd_torque(const Eigen::VectorXd& q_desired, const Eigen::VectorXd& q,
                          const Eigen::VectorXd& qdot, const RobotModel& model,
                          double dof_friction_scale = 1.0);

// Penalty contact: returns (tangential, normal) force on the point.
Vec2 contact_force(const Vec2& point_pos, const Vec2& point_vel,
                   const Terrain& terrain, double mu);

struct ContactParams {
  double k_normal = 1e4;    // N/m
  double c_normal = 100.0;  // N s/m
  double k_tangent = 500.0; // N s/m (viscous, Coulomb-capped)
};

const ContactParams& contact_params();

struct StepInfo {
  Eigen::VectorXd applied_torque;  // after saturation and joint friction
  double contact_normal_sum = 0.0;
  int pushes_applied = 0;
};

// One semi-implicit Euler step of the articulated dynamics. `pd_targets` are
// desired joint positions; torques, contacts, gravity, scheduled pushes and
// the sampled physical-property changes are all applied here. Throws
// SimDivergedError if the state leaves the finite range.
SimState step(const SimState& state, const Eigen::VectorXd& pd_targets,
              const RobotModel& model, const Terrain& terrain,
              const DynamicsConfig& config, double dt,
              const std::vector<Push>& pushes = {}, StepInfo* info = nullptr,
              bool fixed_base = false);

SimState apply_push(const SimState& state, const Push& push);

// Proprioceptive observation:
// [pitch_rate, sin(pitch), -cos(pitch), q - default_pose, qdot, last_action].
Eigen::VectorXd observe(const SimState& state, const RobotModel& model);
int observation_size(const RobotModel& model);

// Observation extended with the flattened config, terrain relief sampled
// around each foot, and the true base velocity (asymmetric critic input).
Eigen::VectorXd privileged_observe(const SimState& state, const RobotModel& model,
                                   const DynamicsConfig& config, const Terrain& terrain);
int privileged_observation_size(const RobotModel& model);
constexpr int kTerrainSamplesPerFoot = 3;

double gravity();

}  // namespace ptrack
