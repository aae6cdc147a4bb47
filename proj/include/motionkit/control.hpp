#pragma once

// Tracking-control building blocks: PD torque law, residual assist force
// with its curriculum-annealed scale, the policy state-feature layout, and a
// decoupled single-joint integrator for verifying the PD contract.

#include "motionkit/retarget.hpp"
#include "motionkit/skeleton.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace motionkit {

using VecX = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// PD torque.

struct PDGains {
  VecX kp;  // stiffness, > 0 componentwise
  VecX kd;  // damping, >= 0 componentwise

  void validate() const {
    if (kp.size() != kd.size()) {
      throw std::invalid_argument("pd gains: kp and kd must have the same length");
    }
    if ((kp.array() <= 0.0).any()) {
      throw std::invalid_argument("pd gains: kp must be positive");
    }
    if ((kd.array() < 0.0).any()) {
      throw std::invalid_argument("pd gains: kd must be non-negative");
    }
  }
};

/// Damped-spring torque toward the target angles: kp*(u - q) - kd*qdot,
/// elementwise.
inline VecX pd_torque(const PDGains& gains, const VecX& u, const VecX& q, const VecX& qdot) {
  gains.validate();
  if (u.size() != gains.kp.size() || q.size() != u.size() || qdot.size() != u.size()) {
    throw std::invalid_argument("pd_torque: all vectors must have the gain length");
  }
  return gains.kp.cwiseProduct(u - q) - gains.kd.cwiseProduct(qdot);
}

// ---------------------------------------------------------------------------
// Residual force and its curriculum.

/// Assist force eta = kr * s_r with per-component weights in [0, 1], so the
/// force magnitude never exceeds the scale.
inline VecX residual_force(const VecX& kr, double s_r) {
  if ((kr.array() < 0.0).any() || (kr.array() > 1.0).any()) {
    throw std::invalid_argument("residual_force: weights must lie in [0, 1]");
  }
  if (s_r < 0.0) {
    throw std::invalid_argument("residual_force: scale must be non-negative");
  }
  return kr * s_r;
}

struct CurriculumParams {
  double s_init = 220.0;  // starting force scale
  long i_start = 100;     // iteration where the decay begins
  long i_end = 1300;      // iteration where the decay stops
  double rate = 0.1;      // scale decrement per iteration

  void validate() const {
    if (i_start > i_end) {
      throw std::invalid_argument("curriculum: i_start must not exceed i_end");
    }
    if (rate < 0.0) {
      throw std::invalid_argument("curriculum: rate must be non-negative");
    }
    if (s_init - rate * static_cast<double>(i_end - i_start) < 0.0) {
      throw std::invalid_argument("curriculum: scale would decay below zero");
    }
  }
};

/// Piecewise-linear decay of the residual-force scale: constant at s_init
/// until i_start, dropping by rate per iteration until i_end, constant after.
inline double curriculum_scale(long i, const CurriculumParams& params = {}) {
  params.validate();
  if (i < 0) {
    throw std::invalid_argument("curriculum_scale: iteration must be non-negative");
  }
  if (i <= params.i_start) {
    return params.s_init;
  }
  if (i <= params.i_end) {
    return params.s_init - params.rate * static_cast<double>(i - params.i_start);
  }
  return params.s_init - params.rate * static_cast<double>(params.i_end - params.i_start);
}

// ---------------------------------------------------------------------------
// State features.

/// One pose reduced to the four blocks the policy state is built from:
/// joint angles, their velocities, head-anchored local positions, and global
/// positions.
struct PoseFeatureBlocks {
  VecX q;              // root euler + driven-joint eulers, z-y-x per joint
  VecX v;              // per-channel angle velocity
  std::vector<Vec3> j; // joint positions in the yaw-free head frame
  std::vector<Vec3> g; // joint positions in world coordinates
};

namespace detail {

inline void append(VecX& out, Eigen::Index& at, const VecX& block) {
  out.segment(at, block.size()) = block;
  at += block.size();
}

inline void append(VecX& out, Eigen::Index& at, const std::vector<Vec3>& block) {
  for (const Vec3& p : block) {
    out.segment(at, 3) = p;
    at += 3;
  }
}

inline void append_diff(VecX& out, Eigen::Index& at, const std::vector<Vec3>& a,
                        const std::vector<Vec3>& b) {
  for (size_t i = 0; i < a.size(); ++i) {
    out.segment(at, 3) = a[i] - b[i];
    at += 3;
  }
}

inline void check_consistent(const PoseFeatureBlocks& a, const PoseFeatureBlocks& b) {
  if (a.q.size() != b.q.size() || a.v.size() != b.v.size() || a.j.size() != b.j.size() ||
      a.g.size() != b.g.size()) {
    throw std::invalid_argument("extract_features: pose blocks have mismatched shapes");
  }
}

}  // namespace detail

/// Concatenates the policy state: the current pose blocks, then the two
/// reference lookaheads as differences against the current pose, in the
/// fixed order q, v, j, g, then per lookahead dq, dj, dg, dv.
inline VecX extract_features(const PoseFeatureBlocks& current, const PoseFeatureBlocks& ref1,
                             const PoseFeatureBlocks& ref2) {
  if (current.q.size() != current.v.size()) {
    throw std::invalid_argument("extract_features: q and v must have the same length");
  }
  if (current.j.size() != current.g.size()) {
    throw std::invalid_argument("extract_features: j and g must have the same joint count");
  }
  detail::check_consistent(current, ref1);
  detail::check_consistent(current, ref2);

  const Eigen::Index angles = current.q.size();
  const Eigen::Index points = static_cast<Eigen::Index>(current.j.size());
  // Three blocks of (q, v, j, g)-shaped data: the pose and two lookaheads.
  VecX out(3 * (2 * angles + 6 * points));
  Eigen::Index at = 0;
  detail::append(out, at, current.q);
  detail::append(out, at, current.v);
  detail::append(out, at, current.j);
  detail::append(out, at, current.g);
  for (const PoseFeatureBlocks* ref : {&ref1, &ref2}) {
    detail::append(out, at, VecX(ref->q - current.q));
    detail::append_diff(out, at, ref->j, current.j);
    detail::append_diff(out, at, ref->g, current.g);
    detail::append(out, at, VecX(ref->v - current.v));
  }
  return out;
}

/// Positions re-expressed in the local head frame: anchored at the lower
/// neck with the root yaw rotated away.
inline std::vector<Vec3> head_local_positions(const std::vector<Vec3>& global, double root_yaw) {
  if (global.size() != static_cast<size_t>(kCanonicalJointCount)) {
    throw std::invalid_argument("head_local_positions expects the 20 canonical joints");
  }
  const Mat3 unyaw = euler_to_matrix(EulerZYX{-root_yaw, 0.0, 0.0});
  const Vec3 anchor = global[kLowerNeck];
  std::vector<Vec3> local;
  local.reserve(global.size());
  for (const Vec3& p : global) {
    local.push_back(unyaw * (p - anchor));
  }
  return local;
}

/// Angle channels of one humanoid frame: root euler first, then the driven
/// joints, z-y-x per joint.
inline VecX humanoid_angles(const HumanoidFrame& frame) {
  VecX q(3 * (1 + kDrivenCount));
  q[0] = frame.root_euler.ez;
  q[1] = frame.root_euler.ey;
  q[2] = frame.root_euler.ex;
  for (int i = 0; i < kDrivenCount; ++i) {
    q[3 + 3 * i + 0] = frame.eulers[i].ez;
    q[3 + 3 * i + 1] = frame.eulers[i].ey;
    q[3 + 3 * i + 2] = frame.eulers[i].ex;
  }
  return q;
}

/// Per-frame feature blocks for a whole humanoid motion.  Velocities are
/// forward differences scaled by fps; the last frame repeats the previous
/// velocity (zero for single-frame motions).
inline std::vector<PoseFeatureBlocks> motion_feature_blocks(const HumanoidMotion& motion) {
  if (motion.frames.empty()) {
    throw std::invalid_argument("motion_feature_blocks: motion has no frames");
  }
  const auto positions = humanoid_fk(motion);
  const int n = motion.frame_count();

  std::vector<VecX> angles;
  angles.reserve(n);
  for (const HumanoidFrame& f : motion.frames) angles.push_back(humanoid_angles(f));

  std::vector<PoseFeatureBlocks> blocks(n);
  for (int t = 0; t < n; ++t) {
    blocks[t].q = angles[t];
    if (t + 1 < n) {
      blocks[t].v = (angles[t + 1] - angles[t]) * motion.fps;
    } else {
      blocks[t].v = n > 1 ? blocks[t - 1].v : VecX(VecX::Zero(angles[t].size()));
    }
    blocks[t].g = positions[t];
    blocks[t].j = head_local_positions(positions[t], motion.frames[t].root_euler.ez);
  }
  return blocks;
}

/// The policy state at frame t, using the motion's own next two frames as
/// the reference lookahead.  Requires t + 2 to be a valid frame.
inline VecX features_at(const HumanoidMotion& motion, int t) {
  if (t < 0 || t + 2 >= motion.frame_count()) {
    throw std::invalid_argument("features_at: need frames t, t+1, t+2 inside the motion");
  }
  const auto blocks = motion_feature_blocks(motion);
  return extract_features(blocks[t], blocks[t + 1], blocks[t + 2]);
}

// ---------------------------------------------------------------------------
// Decoupled-joint PD simulation.

struct PDJointTrajectory {
  std::vector<double> q;     // length steps + 1, starting at q0
  std::vector<double> qdot;  // matching velocities
};

/// Integrates inertia * qddot = kp*(u - q) - kd*qdot with semi-implicit
/// Euler: the velocity update uses the current state, the position update
/// the new velocity.
inline PDJointTrajectory simulate_pd_joint(double kp, double kd, double u, double q0, double qdot0,
                                           double inertia, double dt, int steps) {
  if (kp <= 0.0 || kd < 0.0) {
    throw std::invalid_argument("simulate_pd_joint: need kp > 0 and kd >= 0");
  }
  if (inertia <= 0.0 || dt <= 0.0) {
    throw std::invalid_argument("simulate_pd_joint: need inertia > 0 and dt > 0");
  }
  if (steps < 0) {
    throw std::invalid_argument("simulate_pd_joint: steps must be non-negative");
  }
  PDJointTrajectory traj;
  traj.q.reserve(steps + 1);
  traj.qdot.reserve(steps + 1);
  double q = q0;
  double v = qdot0;
  traj.q.push_back(q);
  traj.qdot.push_back(v);
  for (int s = 0; s < steps; ++s) {
    const double torque = kp * (u - q) - kd * v;
    v += dt * torque / inertia;
    q += dt * v;
    traj.q.push_back(q);
    traj.qdot.push_back(v);
  }
  return traj;
}

}  // namespace motionkit
