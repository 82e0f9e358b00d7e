#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "ptrack/errors.hpp"

namespace ptrack {

using Vec2 = Eigen::Vector2d;

struct LinkParams {
  std::string name;
  double mass = 0.0;       // kg
  double length = 0.0;     // m, joint-to-joint (or joint-to-tip) extent
  double inertia = 0.0;    // kg m^2 about the CoM
  double com_offset = 0.0; // m along the link axis from the inboard joint
};

struct JointParams {
  std::string name;
  double limit_lo = 0.0;      // rad
  double limit_hi = 0.0;      // rad
  double vel_limit = 0.0;     // rad/s, soft bound used by the velocity penalty
  double torque_limit = 0.0;  // N m
  double kp = 0.0;            // PD gains
  double kd = 0.0;
  double friction_coeff = 0.0;  // N m, dry joint friction
  double armature = 0.0;        // kg m^2 added to the joint-space inertia
};

struct BaseParams {
  double mass = 0.0;
  double inertia = 0.0;
  Vec2 com = Vec2::Zero();  // CoM in the base frame (origin at the hips)
};

// Planar biped: floating base (x, z, pitch) plus hip/knee/ankle per leg.
// Link chains: base -> thigh -> shank -> foot, one chain per leg, both hips
// at the base origin. Thigh and shank hang along -z at zero joint angle; the
// foot extends along +x with its sole below the ankle.
struct RobotModel {
  std::vector<LinkParams> links;    // [thigh_l, shank_l, foot_l, thigh_r, shank_r, foot_r]
  std::vector<JointParams> joints;  // [hip_l, knee_l, ankle_l, hip_r, knee_r, ankle_r]
  Eigen::VectorXd default_pose;     // rad, per joint
  Eigen::VectorXd action_scale;     // rad, per joint (residual PD target bound)
  BaseParams base;
  std::vector<Vec2> foot_points;  // contact offsets in the foot frame [heel, toe]
  double foot_sole_drop = 0.0;    // m, sole height below the ankle

  int num_joints() const { return static_cast<int>(joints.size()); }
  int num_links() const { return static_cast<int>(links.size()); }
  int joints_per_leg() const { return 3; }

  void validate() const;
};

// The default desk-scale biped used across the project.
RobotModel default_biped();

struct SimState {
  Vec2 base_pos = Vec2::Zero();  // (x, z) of the hip point, world frame
  double base_pitch = 0.0;       // rad, CCW
  Vec2 base_vel = Vec2::Zero();  // m/s
  double base_pitch_rate = 0.0;  // rad/s
  Eigen::VectorXd q;             // per-joint position, rad
  Eigen::VectorXd qdot;          // per-joint velocity, rad/s
  double time = 0.0;             // s
  Eigen::VectorXd last_action;   // per-joint, dimensionless (tanh-squashed)

  static SimState zero(int num_joints);
  bool finite() const;
};

// Forward kinematics results for one instant.
struct FkResult {
  std::vector<Vec2> link_com_world;    // per link
  std::vector<double> link_pitch;      // world pitch per link
  std::vector<Vec2> link_com_local;    // base frame
  std::vector<Vec2> link_vel_world;    // CoM velocities
  std::vector<double> link_pitch_rate;
  std::vector<Vec2> foot_point_world;  // contact points, heel/toe x both feet
  std::vector<Vec2> foot_point_vel;
};

FkResult forward_kinematics(const RobotModel& model, const SimState& state);

// Link CoM positions and pitch angles in the base frame from joint angles
// alone (used for reference motions, where the base pitch is zero).
void local_link_pose(const RobotModel& model, const Eigen::VectorXd& q,
                     std::vector<Vec2>& com_local, std::vector<double>& pitch_local);

// Base-local link CoM velocities induced by joint rates (base motion excluded).
void local_link_velocity(const RobotModel& model, const Eigen::VectorXd& q,
                         const Eigen::VectorXd& qdot, std::vector<Vec2>& vel_local,
                         std::vector<double>& pitch_rate_local);

// Heights of every foot contact point above z=0 when the base sits at the
// given joint configuration with zero pitch and base height h.
std::vector<double> foot_point_heights(const RobotModel& model,
                                       const Eigen::VectorXd& q, double base_height);

// Base height that places the lowest foot contact point exactly at z=0.
double standing_base_height(const RobotModel& model, const Eigen::VectorXd& q);

}  // namespace ptrack
