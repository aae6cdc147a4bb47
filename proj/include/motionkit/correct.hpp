#pragma once

// Test-time motion correction: minimizes the contact-consistency +
// smoothness objective directly over the trajectory.  Variables are the
// interior root translations and, optionally, per-frame offsets of the four
// foot joints; the first and last frame are hard constraints and never move.
//
// The optimizer is subgradient descent with a backtracking line search
// (halving on any loss increase, regrowth after accepted steps), which makes
// the recorded loss trace monotone non-increasing by construction.

#include "motionkit/metrics.hpp"
#include "motionkit/skeleton.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace motionkit {

enum class CorrectionTargets { kRootOnly, kRootAndFeet };

struct CorrectionConfig {
  CorrectionTargets targets = CorrectionTargets::kRootAndFeet;
  double beta = 0.1;        // smoothness weight in the objective
  int steps = 200;          // maximum accepted descent steps
  double step_size = 0.1;   // initial (and maximum) step length
  double min_step = 1e-14;  // line search gives up below this
  double tolerance = 0.0;   // stop when the relative loss decrease falls below

  void validate() const {
    if (beta < 0.0) throw std::invalid_argument("correction: beta must be non-negative");
    if (steps < 1) throw std::invalid_argument("correction: steps must be at least 1");
    if (step_size <= 0.0) throw std::invalid_argument("correction: step_size must be positive");
    if (min_step <= 0.0) throw std::invalid_argument("correction: min_step must be positive");
    if (tolerance < 0.0) throw std::invalid_argument("correction: tolerance must be non-negative");
  }
};

using FootOffsetTrack = std::vector<std::array<Vec3, 4>>;  // per frame, kFootJoints column order

/// The optimization state: full-length tracks whose endpoint entries stay at
/// their initial values (roots at the input trajectory, offsets at zero).
struct CorrectionVariables {
  std::vector<Vec3> roots;
  FootOffsetTrack foot_offsets;
};

/// Gradient blocks matching CorrectionVariables; endpoint rows are zero, and
/// the foot block is zero when only the root is optimized.
struct CorrectionGradient {
  std::vector<Vec3> roots;
  FootOffsetTrack foot_offsets;
};

namespace detail {

inline Vec3 unit_or_zero(const Vec3& v) {
  const double n = v.norm();
  return n < 1e-12 ? Vec3(Vec3::Zero()) : Vec3(v / n);
}

/// Everything frozen about one correction run: base foot world positions,
/// base roots, contacts, and weights.  Loss and gradient are evaluated at
/// candidate variable values against this base.
struct CorrectionProblem {
  std::vector<std::array<Vec3, 4>> base_feet;  // original foot positions per frame
  std::vector<Vec3> base_roots;
  const ContactPrediction* contacts = nullptr;
  std::array<int, 4> foot_joints{};
  double beta = 0.0;
  bool feet_active = false;

  int frame_count() const { return static_cast<int>(base_roots.size()); }

  Vec3 foot_position(const CorrectionVariables& v, int t, int f) const {
    return base_feet[t][f] + (v.roots[t] - base_roots[t]) + v.foot_offsets[t][f];
  }

  double contact_term(const CorrectionVariables& v) const {
    double sum = 0.0;
    for (int t = 0; t + 1 < frame_count(); ++t) {
      for (int f = 0; f < 4; ++f) {
        sum += (foot_position(v, t + 1, f) - foot_position(v, t, f)).norm() *
               (*contacts)[t + 1][f];
      }
    }
    return sum;
  }

  double loss(const CorrectionVariables& v) const {
    double smooth = 0.0;
    for (int t = 0; t + 1 < frame_count(); ++t) {
      smooth += (v.roots[t + 1] - v.roots[t]).norm();
    }
    return contact_term(v) + beta * smooth;
  }

  CorrectionGradient gradient(const CorrectionVariables& v) const {
    const int n = frame_count();
    CorrectionGradient g;
    g.roots.assign(n, Vec3::Zero());
    g.foot_offsets.assign(n, {Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()});

    // Unit displacement directions between adjacent frames (zero when the
    // displacement itself vanishes: the subgradient at the kink).
    std::vector<Vec3> root_dir(n - 1);
    for (int t = 0; t + 1 < n; ++t) {
      root_dir[t] = unit_or_zero(v.roots[t + 1] - v.roots[t]);
    }
    std::vector<std::array<Vec3, 4>> foot_dir(n - 1);
    for (int t = 0; t + 1 < n; ++t) {
      for (int f = 0; f < 4; ++f) {
        foot_dir[t][f] = unit_or_zero(foot_position(v, t + 1, f) - foot_position(v, t, f));
      }
    }

    for (int t = 1; t + 1 < n; ++t) {  // endpoints are constraints, not variables
      Vec3 contact_pull = Vec3::Zero();
      for (int f = 0; f < 4; ++f) {
        const Vec3 pull =
            (*contacts)[t][f] * foot_dir[t - 1][f] - (*contacts)[t + 1][f] * foot_dir[t][f];
        contact_pull += pull;
        if (feet_active) g.foot_offsets[t][f] = pull;
      }
      g.roots[t] = contact_pull + beta * (root_dir[t - 1] - root_dir[t]);
    }
    return g;
  }
};

inline CorrectionProblem make_problem(const JointTree& tree, const SkeletonMotion& motion,
                                      const ContactPrediction& contacts,
                                      const CorrectionConfig& config) {
  config.validate();
  if (motion.frame_count() < 2) {
    throw std::invalid_argument("correction needs at least 2 frames");
  }
  if (contacts.size() != motion.frames.size()) {
    throw std::invalid_argument("correction: contacts must cover every frame");
  }
  const auto feet = find_foot_joints(tree);
  if (!feet) {
    throw std::invalid_argument("correction requires the four canonical foot joints");
  }
  CorrectionProblem p;
  p.foot_joints = *feet;
  p.contacts = &contacts;
  p.beta = config.beta;
  p.feet_active = config.targets == CorrectionTargets::kRootAndFeet;
  const auto positions = motion_positions(tree, motion);
  for (int t = 0; t < motion.frame_count(); ++t) {
    p.base_roots.push_back(motion.frames[t].root);
    std::array<Vec3, 4> row;
    for (int f = 0; f < 4; ++f) row[f] = positions[t][p.foot_joints[f]];
    p.base_feet.push_back(row);
  }
  return p;
}

}  // namespace detail

inline CorrectionVariables initial_variables(const SkeletonMotion& motion) {
  CorrectionVariables v;
  for (const SkeletonFrame& f : motion.frames) v.roots.push_back(f.root);
  v.foot_offsets.assign(motion.frames.size(),
                        {Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()});
  return v;
}

/// The corrected objective at the given variable values.
inline double correction_loss(const JointTree& tree, const SkeletonMotion& motion,
                              const ContactPrediction& contacts, const CorrectionConfig& config,
                              const CorrectionVariables& vars) {
  return detail::make_problem(tree, motion, contacts, config).loss(vars);
}

/// Analytic subgradient of the objective at the given variable values.
inline CorrectionGradient loss_gradient(const JointTree& tree, const SkeletonMotion& motion,
                                        const ContactPrediction& contacts,
                                        const CorrectionConfig& config,
                                        const CorrectionVariables& vars) {
  return detail::make_problem(tree, motion, contacts, config).gradient(vars);
}

/// Subgradient at the motion's own trajectory (offsets zero).
inline CorrectionGradient loss_gradient(const JointTree& tree, const SkeletonMotion& motion,
                                        const ContactPrediction& contacts,
                                        const CorrectionConfig& config) {
  return loss_gradient(tree, motion, contacts, config, initial_variables(motion));
}

struct CorrectionResult {
  SkeletonMotion motion;         // corrected roots; position cache includes foot offsets
  FootOffsetTrack foot_offsets;  // the offsets applied to the cached foot positions
  std::vector<double> trace;     // objective value: initial, then after each accepted step
  double initial_contact_loss = 0.0;
  double final_contact_loss = 0.0;
};

/// Runs the descent.  The returned motion keeps the input quaternions; its
/// cached positions carry the root shifts (all joints) and foot offsets
/// (foot joints only), so they intentionally differ from re-running FK when
/// foot offsets are active.
inline CorrectionResult optimize(const JointTree& tree, const SkeletonMotion& motion,
                                 const ContactPrediction& contacts,
                                 const CorrectionConfig& config = {}) {
  const detail::CorrectionProblem problem = detail::make_problem(tree, motion, contacts, config);

  CorrectionVariables vars = initial_variables(motion);
  double loss = problem.loss(vars);
  std::vector<double> trace = {loss};
  const double initial_contact = problem.contact_term(vars);

  double alpha = config.step_size;
  for (int step = 0; step < config.steps; ++step) {
    const CorrectionGradient g = problem.gradient(vars);
    double gnorm2 = 0.0;
    for (const Vec3& v : g.roots) gnorm2 += v.squaredNorm();
    for (const auto& row : g.foot_offsets) {
      for (const Vec3& v : row) gnorm2 += v.squaredNorm();
    }
    if (std::sqrt(gnorm2) < 1e-12) break;  // stationary (e.g. already optimal)

    bool accepted = false;
    CorrectionVariables trial = vars;
    double trial_loss = loss;
    while (alpha >= config.min_step) {
      trial = vars;
      for (size_t t = 0; t < trial.roots.size(); ++t) {
        trial.roots[t] -= alpha * g.roots[t];
        for (int f = 0; f < 4; ++f) trial.foot_offsets[t][f] -= alpha * g.foot_offsets[t][f];
      }
      trial_loss = problem.loss(trial);
      if (trial_loss <= loss) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;  // no step length decreases the loss any further

    const double previous = loss;
    vars = std::move(trial);
    loss = trial_loss;
    trace.push_back(loss);
    alpha = std::min(alpha * 1.5, config.step_size);

    if (config.tolerance > 0.0 &&
        previous - loss < config.tolerance * std::max(previous, 1e-300)) {
      break;
    }
  }

  CorrectionResult result;
  result.trace = std::move(trace);
  result.initial_contact_loss = initial_contact;
  result.final_contact_loss = problem.contact_term(vars);
  result.foot_offsets = vars.foot_offsets;

  result.motion = motion;
  auto positions = motion_positions(tree, motion);
  for (int t = 0; t < motion.frame_count(); ++t) {
    const Vec3 shift = vars.roots[t] - motion.frames[t].root;
    result.motion.frames[t].root = vars.roots[t];
    for (Vec3& p : positions[t]) p += shift;
    for (int f = 0; f < 4; ++f) positions[t][problem.foot_joints[f]] += vars.foot_offsets[t][f];
  }
  result.motion.positions = std::move(positions);
  return result;
}

}  // namespace motionkit
