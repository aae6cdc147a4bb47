#pragma once

// Physical-plausibility losses and evaluation metrics for motions: foot
// contact consistency, root smoothness, ground penetration statistics, and
// position / global-rotation errors against a reference motion.
//
// Units: positions enter in meters.  fp is reported in centimeters, sm and
// mpjpe in millimeters, l2p in meters; the remaining quantities are unitless
// or plain sums in meters.

#include "motionkit/retarget.hpp"
#include "motionkit/skeleton.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace motionkit {

using PositionSequence = std::vector<std::vector<Vec3>>;  // [frame][joint]

// ---------------------------------------------------------------------------
// Losses.

/// Contact-weighted foot displacement: moving a foot is penalized in
/// proportion to its contact probability at the arrival frame.  Summed over
/// frame transitions and feet.
inline double contact_loss(const PositionSequence& positions, const ContactPrediction& contacts,
                           const std::array<int, 4>& foot_set) {
  if (positions.size() != contacts.size()) {
    throw std::invalid_argument("contact_loss: positions and contacts must cover the same frames");
  }
  double sum = 0.0;
  for (size_t t = 0; t + 1 < positions.size(); ++t) {
    for (size_t f = 0; f < foot_set.size(); ++f) {
      const int j = foot_set[f];
      sum += (positions[t + 1].at(j) - positions[t].at(j)).norm() * contacts[t + 1][f];
    }
  }
  return sum;
}

/// Root path length: the sum of distances between adjacent root positions.
inline double smooth_loss(const std::vector<Vec3>& roots) {
  if (roots.size() < 2) {
    throw std::invalid_argument("smooth_loss needs at least 2 frames");
  }
  double sum = 0.0;
  for (size_t t = 0; t + 1 < roots.size(); ++t) {
    sum += (roots[t + 1] - roots[t]).norm();
  }
  return sum;
}

/// Combined correction objective: contact loss plus beta times smoothness.
inline double test_loss(const PositionSequence& positions, const std::vector<Vec3>& roots,
                        const ContactPrediction& contacts, const std::array<int, 4>& foot_set,
                        double beta) {
  if (beta < 0.0) {
    throw std::invalid_argument("test_loss: beta must be non-negative");
  }
  return contact_loss(positions, contacts, foot_set) + beta * smooth_loss(roots);
}

// ---------------------------------------------------------------------------
// Ground penetration.

struct GroundPenetration {
  double fp = 0.0;  // mean foot penetration depth, centimeters (<= 0)
  double fq = 0.0;  // fraction of (frame, foot) samples below the ground
  double jq = 0.0;  // fraction of (frame, joint) samples below the ground
};

/// Penetration statistics against the ground plane z = 0.  A sample counts
/// as penetrating when z < -eps_pen.
inline GroundPenetration fp_fq_jq(const PositionSequence& positions,
                                  const std::array<int, 4>& foot_set, double eps_pen = 0.0) {
  if (positions.empty()) {
    throw std::invalid_argument("fp_fq_jq needs at least 1 frame");
  }
  GroundPenetration out;
  long foot_samples = 0;
  long foot_hits = 0;
  long joint_samples = 0;
  long joint_hits = 0;
  double depth_sum = 0.0;
  for (const auto& frame : positions) {
    for (const int j : foot_set) {
      const double z = frame.at(j).z();
      depth_sum += std::min(z, 0.0);
      foot_hits += z < -eps_pen ? 1 : 0;
      ++foot_samples;
    }
    for (const Vec3& p : frame) {
      joint_hits += p.z() < -eps_pen ? 1 : 0;
      ++joint_samples;
    }
  }
  out.fp = 100.0 * depth_sum / static_cast<double>(foot_samples);  // meters -> cm
  out.fq = static_cast<double>(foot_hits) / static_cast<double>(foot_samples);
  out.jq = static_cast<double>(joint_hits) / static_cast<double>(joint_samples);
  return out;
}

// ---------------------------------------------------------------------------
// Smoothness and reference-relative errors.

/// Mean displacement of a joint between adjacent frames, in millimeters.
inline double mean_adjacent_displacement(const PositionSequence& positions) {
  if (positions.size() < 2) {
    throw std::invalid_argument("mean_adjacent_displacement needs at least 2 frames");
  }
  double sum = 0.0;
  long count = 0;
  for (size_t t = 0; t + 1 < positions.size(); ++t) {
    if (positions[t + 1].size() != positions[t].size()) {
      throw std::invalid_argument("mean_adjacent_displacement: ragged position sequence");
    }
    for (size_t j = 0; j < positions[t].size(); ++j) {
      sum += (positions[t + 1][j] - positions[t][j]).norm();
      ++count;
    }
  }
  return 1000.0 * sum / static_cast<double>(count);  // meters -> mm
}

struct PositionErrors {
  double l2p = 0.0;    // mean joint position error, meters
  double mpjpe = 0.0;  // the same mean error, millimeters
};

/// Mean Euclidean error between corresponding joints of two position
/// sequences with identical shapes.
inline PositionErrors position_errors(const PositionSequence& pred, const PositionSequence& gt) {
  if (pred.size() != gt.size() || pred.empty()) {
    throw std::invalid_argument("position_errors: motions must have the same non-zero frame count");
  }
  double sum = 0.0;
  long count = 0;
  for (size_t t = 0; t < pred.size(); ++t) {
    if (pred[t].size() != gt[t].size() || pred[t].empty()) {
      throw std::invalid_argument("position_errors: motions must have the same joint count");
    }
    for (size_t j = 0; j < pred[t].size(); ++j) {
      sum += (pred[t][j] - gt[t][j]).norm();
      ++count;
    }
  }
  const double mean = sum / static_cast<double>(count);
  return PositionErrors{mean, 1000.0 * mean};
}

/// Per-joint world rotations: the local quaternions composed root-to-joint.
inline std::vector<std::vector<Quat>> global_quaternions(const JointTree& tree,
                                                         const std::vector<SkeletonFrame>& frames) {
  std::vector<std::vector<Quat>> out;
  out.reserve(frames.size());
  for (const SkeletonFrame& f : frames) {
    if (static_cast<int>(f.quats.size()) != tree.size()) {
      throw std::invalid_argument("global_quaternions: frame has wrong joint count");
    }
    std::vector<Quat> g(f.quats.size());
    g[0] = f.quats[0];
    for (int j = 1; j < tree.size(); ++j) {
      g[j] = g[tree.joint(j).parent] * f.quats[j];
    }
    out.push_back(std::move(g));
  }
  return out;
}

/// Mean 4-vector L2 distance between corresponding global quaternions.  Each
/// predicted quaternion's sign is chosen to be the nearer of the antipodal
/// pair, so q and -q describe identical rotations and score zero.
inline double global_quat_error(const std::vector<std::vector<Quat>>& pred,
                                const std::vector<std::vector<Quat>>& gt) {
  if (pred.size() != gt.size() || pred.empty()) {
    throw std::invalid_argument("global_quat_error: motions must have the same non-zero frame count");
  }
  double sum = 0.0;
  long count = 0;
  for (size_t t = 0; t < pred.size(); ++t) {
    if (pred[t].size() != gt[t].size() || pred[t].empty()) {
      throw std::invalid_argument("global_quat_error: motions must have the same joint count");
    }
    for (size_t j = 0; j < pred[t].size(); ++j) {
      const double sign = pred[t][j].coeffs().dot(gt[t][j].coeffs()) < 0.0 ? -1.0 : 1.0;
      sum += (sign * pred[t][j].coeffs() - gt[t][j].coeffs()).norm();
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// Aggregate report.

/// A motion reduced to what the metrics need.  Fields that do not apply to
/// the source representation stay empty: euler-driven humanoid motions carry
/// no quaternions, and trees without the four canonical foot joints get no
/// foot set (so foot metrics come out null in the report).
struct EvaluatedMotion {
  PositionSequence positions;
  std::vector<Vec3> roots;
  std::vector<std::vector<Quat>> global_quats;  // empty when not applicable
  std::optional<std::array<int, 4>> feet;
};

inline std::optional<std::array<int, 4>> find_foot_joints(const JointTree& tree) {
  std::array<int, 4> feet{};
  for (size_t i = 0; i < kFootJoints.size(); ++i) {
    const int j = tree.find(kCanonicalJointNames[kFootJoints[i]]);
    if (j < 0) return std::nullopt;
    feet[i] = j;
  }
  return feet;
}

inline EvaluatedMotion evaluate_for_metrics(const JointTree& tree, const SkeletonMotion& motion) {
  EvaluatedMotion out;
  out.positions = motion_positions(tree, motion);
  for (const SkeletonFrame& f : motion.frames) out.roots.push_back(f.root);
  out.global_quats = global_quaternions(tree, motion.frames);
  out.feet = find_foot_joints(tree);
  return out;
}

inline EvaluatedMotion evaluate_for_metrics(const HumanoidMotion& motion) {
  EvaluatedMotion out;
  out.positions = humanoid_fk(motion);
  for (const HumanoidFrame& f : motion.frames) out.roots.push_back(f.root);
  out.feet = kFootJoints;  // humanoid motions always use the canonical tree
  return out;
}

/// The full metric set.  Null fields mean the required inputs were absent
/// (no reference motion, no contacts, no identifiable feet, or too few
/// frames), never a computation failure.
struct MetricReport {
  std::optional<double> fp, fq, jq, sm, l2p, l2q, mpjpe, l_contact, l_smooth, l_test;
};

struct MetricOptions {
  double eps_pen = 0.0;  // penetration threshold, meters
  double beta = 0.1;     // smoothness weight inside l_test
};

inline MetricReport compute_metric_report(const EvaluatedMotion& pred, const EvaluatedMotion* gt,
                                          const ContactPrediction* contacts,
                                          const MetricOptions& opts = {}) {
  if (opts.beta < 0.0) {
    throw std::invalid_argument("metric report: beta must be non-negative");
  }
  MetricReport r;
  if (pred.feet) {
    const GroundPenetration pen = fp_fq_jq(pred.positions, *pred.feet, opts.eps_pen);
    r.fp = pen.fp;
    r.fq = pen.fq;
    r.jq = pen.jq;
  } else if (!pred.positions.empty()) {
    // Feet unknown: the all-joint statistic still applies.
    long hits = 0;
    long total = 0;
    for (const auto& frame : pred.positions) {
      for (const Vec3& p : frame) {
        hits += p.z() < -opts.eps_pen ? 1 : 0;
        ++total;
      }
    }
    r.jq = static_cast<double>(hits) / static_cast<double>(total);
  }
  if (pred.positions.size() >= 2) {
    r.sm = mean_adjacent_displacement(pred.positions);
    r.l_smooth = smooth_loss(pred.roots);
  }
  if (gt != nullptr) {
    const PositionErrors err = position_errors(pred.positions, gt->positions);
    r.l2p = err.l2p;
    r.mpjpe = err.mpjpe;
    if (!pred.global_quats.empty() && !gt->global_quats.empty() &&
        pred.global_quats[0].size() == gt->global_quats[0].size()) {
      r.l2q = global_quat_error(pred.global_quats, gt->global_quats);
    }
  }
  if (contacts != nullptr && pred.feet) {
    r.l_contact = contact_loss(pred.positions, *contacts, *pred.feet);
    if (r.l_smooth) {
      r.l_test = *r.l_contact + opts.beta * *r.l_smooth;
    }
  }
  return r;
}

/// Serializes the report with a fixed key order; unavailable metrics are
/// null.  The combined objective appears only when contacts were provided.
inline nlohmann::ordered_json metric_report_to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  const auto put = [&j](const char* key, const std::optional<double>& v) {
    if (v) {
      j[key] = *v;
    } else {
      j[key] = nullptr;
    }
  };
  put("fp", r.fp);
  put("fq", r.fq);
  put("jq", r.jq);
  put("sm", r.sm);
  put("l2p", r.l2p);
  put("l2q", r.l2q);
  put("mpjpe", r.mpjpe);
  put("l_contact", r.l_contact);
  put("l_smooth", r.l_smooth);
  if (r.l_test) {
    j["l_test"] = *r.l_test;
  }
  return j;
}

}  // namespace motionkit
