#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>

#include "ptrack/dynamics.hpp"
#include "ptrack/errors.hpp"

namespace ptrack {

namespace {

using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;

inline Vec2 rot(double a, const Vec2& v) {
  const double c = std::cos(a), s = std::sin(a);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

inline Vec2 perp(const Vec2& v) { return {-v.y(), v.x()}; }

// Joint-limit penalty spring/damper; keeps positions physically near the
// configured limits in addition to the reward-side penalty.
constexpr double kLimitStiffness = 800.0;
constexpr double kLimitDamping = 5.0;

struct Body {
  double m = 0.0;
  double inertia = 0.0;
  Vec2 com = Vec2::Zero();
  Vec2 a_bias = Vec2::Zero();
  // Rotational DOFs acting on this body: DOF index and world pivot point.
  int nrot = 0;
  int rot_dof[4];
  Vec2 rot_pivot[4];
};

}  // namespace

SimState step(const SimState& state, const Eigen::VectorXd& pd_targets,
              const RobotModel& model, const Terrain& terrain,
              const DynamicsConfig& config, double dt, const std::vector<Push>& pushes,
              StepInfo* info, bool fixed_base) {
  const int nj = model.num_joints();
  if (dt <= 0.0) throw DomainError("step: dt must be positive");
  if (pd_targets.size() != nj)
    throw ShapeError("step: pd_targets length does not match joint count");

  // Actuation: PD around the (possibly jittered) targets.
  Eigen::VectorXd targets = pd_targets;
  if (config.default_pose_jitter.size() == nj) targets += config.default_pose_jitter;
  Eigen::VectorXd tau = pd_torque(targets, state.q, state.qdot, model,
                                  config.dof_friction_scale);

  const double pitch = state.base_pitch;
  const double wb = state.base_pitch_rate;
  const Vec2 base = state.base_pos;

  Body bodies[7];
  int nbodies = 0;

  // Base body with the sampled payload change applied.
  {
    Body& b = bodies[nbodies++];
    b.m = model.base.mass + config.torso_mass_delta;
    b.inertia = model.base.inertia;
    const Vec2 com_local = model.base.com + Vec2(config.torso_com_shift, 0.0);
    const Vec2 r = rot(pitch, com_local);
    b.com = base + r;
    b.a_bias = -wb * wb * r;
    b.nrot = 1;
    b.rot_dof[0] = 2;
    b.rot_pivot[0] = base;
  }

  Vec2 foot_pts[4];
  Vec2 foot_vels[4];
  int nfp = 0;

  for (int leg = 0; leg < 2; ++leg) {
    const int j0 = 3 * leg;
    Vec2 pivot = base;
    Vec2 pivot_vel = state.base_vel;
    Vec2 a_piv = Vec2::Zero();
    double angle = pitch;
    double omega = wb;
    int chain_dofs[4] = {2, 0, 0, 0};
    Vec2 chain_pivots[4] = {base, Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};
    int nchain = 1;

    for (int k = 0; k < 3; ++k) {
      const int j = j0 + k;
      const LinkParams& link = model.links[j];
      angle += state.q(j);
      omega += state.qdot(j);
      chain_dofs[nchain] = 3 + j;
      chain_pivots[nchain] = pivot;
      ++nchain;

      const Vec2 com_off = (k < 2) ? Vec2(0.0, -link.com_offset)
                                   : Vec2(link.com_offset, -model.foot_sole_drop * 0.5);
      const Vec2 r_com = rot(angle, com_off);

      Body& b = bodies[nbodies++];
      b.m = link.mass;
      b.inertia = link.inertia;
      b.com = pivot + r_com;
      b.a_bias = a_piv - omega * omega * r_com;
      b.nrot = nchain;
      for (int c = 0; c < nchain; ++c) {
        b.rot_dof[c] = chain_dofs[c];
        b.rot_pivot[c] = chain_pivots[c];
      }

      if (k == 2) {
        for (const Vec2& fp : model.foot_points) {
          const Vec2 r = rot(angle, fp);
          foot_pts[nfp] = pivot + r;
          foot_vels[nfp] = pivot_vel + omega * perp(r);
          ++nfp;
        }
      } else {
        const Vec2 r_end = rot(angle, Vec2(0.0, -link.length));
        a_piv = a_piv - omega * omega * r_end;
        pivot_vel = pivot_vel + omega * perp(r_end);
        pivot = pivot + r_end;
      }
    }
  }

  // Assemble M and the bias vector (Coriolis/centripetal + gravity).
  Mat9 M = Mat9::Zero();
  Vec9 rhs = Vec9::Zero();
  const double g = gravity();

  for (int bi = 0; bi < nbodies; ++bi) {
    const Body& b = bodies[bi];
    // Linear Jacobian columns: x -> (1,0), z -> (0,1), rot k -> perp(com - pivot_k).
    Vec2 lin[6];
    int dof[6];
    lin[0] = Vec2(1.0, 0.0);
    dof[0] = 0;
    lin[1] = Vec2(0.0, 1.0);
    dof[1] = 1;
    int nc = 2;
    for (int c = 0; c < b.nrot; ++c) {
      lin[nc] = perp(b.com - b.rot_pivot[c]);
      dof[nc] = b.rot_dof[c];
      ++nc;
    }
    for (int i = 0; i < nc; ++i) {
      for (int j = i; j < nc; ++j) {
        double v = b.m * lin[i].dot(lin[j]);
        if (i >= 2 && j >= 2) v += b.inertia;  // both columns carry unit angular rate
        M(dof[i], dof[j]) += v;
        if (dof[i] != dof[j]) M(dof[j], dof[i]) += v;
      }
    }
    // Generalized bias: J^T (m a_bias + m g e_z); planar angular bias is zero.
    const Vec2 f = b.m * b.a_bias + Vec2(0.0, b.m * g);
    for (int i = 0; i < nc; ++i) rhs(dof[i]) -= lin[i].dot(f);
  }

  // Reflected rotor inertia on the joint diagonal.
  for (int j = 0; j < nj; ++j)
    M(3 + j, 3 + j) += model.joints[j].armature * config.armature_scale;

  // Joint torques: PD plus limit penalties.
  for (int j = 0; j < nj; ++j) {
    const JointParams& jp = model.joints[j];
    double t = tau(j);
    if (state.q(j) > jp.limit_hi)
      t += -kLimitStiffness * (state.q(j) - jp.limit_hi) - kLimitDamping * state.qdot(j);
    else if (state.q(j) < jp.limit_lo)
      t += -kLimitStiffness * (state.q(j) - jp.limit_lo) - kLimitDamping * state.qdot(j);
    rhs(3 + j) += t;
  }

  // Contacts at the foot points.
  double normal_sum = 0.0;
  for (int p = 0; p < nfp; ++p) {
    const Vec2 f = contact_force(foot_pts[p], foot_vels[p], terrain, config.floor_friction);
    if (f.isZero()) continue;
    normal_sum += f.y();
    rhs(0) += f.x();
    rhs(1) += f.y();
    // The point belongs to the foot body of its leg: bodies[3] / bodies[6].
    const Body& fb = bodies[3 + 3 * (p / 2)];
    for (int c = 0; c < fb.nrot; ++c)
      rhs(fb.rot_dof[c]) += perp(foot_pts[p] - fb.rot_pivot[c]).dot(f);
  }

  Vec9 accel = Vec9::Zero();
  if (fixed_base) {
    Eigen::MatrixXd Mj = M.block(3, 3, nj, nj);
    Eigen::VectorXd rj = rhs.segment(3, nj);
    accel.segment(3, nj) = Mj.ldlt().solve(rj);
  } else {
    accel = M.ldlt().solve(rhs);
  }

  SimState next = state;
  if (!fixed_base) {
    next.base_vel += dt * accel.head<2>();
    next.base_pitch_rate += dt * accel(2);
  }
  next.qdot += dt * accel.segment(3, nj);

  int pushes_applied = 0;
  for (const Push& push : pushes) {
    if (push.trigger_time > state.time && push.trigger_time <= state.time + dt) {
      next.base_vel += push.delta_base_vel;
      ++pushes_applied;
    }
  }

  next.base_pos += dt * next.base_vel;
  next.base_pitch += dt * next.base_pitch_rate;
  next.q += dt * next.qdot;
  next.time = state.time + dt;

  if (info) {
    info->applied_torque = tau;
    info->contact_normal_sum = normal_sum;
    info->pushes_applied = pushes_applied;
  }

  if (!next.finite()) throw SimDivergedError("step: non-finite state");
  return next;
}

}  // namespace ptrack
