#pragma once

// Joint trees, skeleton motions, forward kinematics, and the canonical
// 20-joint rig with its synthetic test-motion generator.

#include "motionkit/math.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace motionkit {

struct Joint {
  std::string name;
  int parent = -1;  // -1 for the root
  Vec3 offset = Vec3::Zero();  // rest offset from the parent joint, meters
};

/// Rooted joint hierarchy.  Joints are stored parent-before-child with the
/// single root at index 0; names are unique.
class JointTree {
 public:
  JointTree() = default;

  explicit JointTree(std::vector<Joint> joints) : joints_(std::move(joints)) {
    if (joints_.empty()) {
      throw std::invalid_argument("joint tree must contain at least a root");
    }
    if (joints_[0].parent != -1) {
      throw std::invalid_argument("joint 0 must be the root (parent -1)");
    }
    for (int i = 1; i < size(); ++i) {
      if (joints_[i].parent < 0 || joints_[i].parent >= i) {
        throw std::invalid_argument("joints must be ordered parent-before-child with one root");
      }
    }
    for (int i = 0; i < size(); ++i) {
      for (int j = i + 1; j < size(); ++j) {
        if (joints_[i].name == joints_[j].name) {
          throw std::invalid_argument("duplicate joint name: " + joints_[i].name);
        }
      }
    }
  }

  int size() const { return static_cast<int>(joints_.size()); }
  const Joint& joint(int i) const { return joints_.at(i); }
  const std::vector<Joint>& joints() const { return joints_; }

  int find(std::string_view name) const {
    for (int i = 0; i < size(); ++i) {
      if (joints_[i].name == name) return i;
    }
    return -1;
  }

  /// Joint positions with all local rotations identity and the root at the
  /// origin (cumulative offsets).
  std::vector<Vec3> rest_positions() const {
    std::vector<Vec3> p(joints_.size());
    p[0] = Vec3::Zero();
    for (int i = 1; i < size(); ++i) {
      p[i] = p[joints_[i].parent] + joints_[i].offset;
    }
    return p;
  }

 private:
  std::vector<Joint> joints_;
};

/// Per-frame, per-foot contact probabilities in [0, 1].  Columns follow
/// kFootJoints order: left ankle, right ankle, left foot, right foot.
using ContactPrediction = std::vector<std::array<double, 4>>;

struct SkeletonFrame {
  Vec3 root = Vec3::Zero();  // root joint translation, meters
  std::vector<Quat> quats;   // local rotation per joint, index-aligned with the tree
};

struct SkeletonMotion {
  double fps = 30.0;
  std::vector<SkeletonFrame> frames;
  ContactPrediction contacts;                   // empty when absent
  std::vector<std::vector<Vec3>> positions;     // optional cache, frames x joints

  int frame_count() const { return static_cast<int>(frames.size()); }
  bool has_contacts() const { return !contacts.empty(); }
  bool has_positions() const { return !positions.empty(); }
};

// ---------------------------------------------------------------------------
// Forward kinematics.  World rotation accumulates down the chain and each
// child sits at parent position + accumulated parent rotation * rest offset;
// the root world rotation is its own local rotation.

/// Joint positions for a single posed frame.
inline std::vector<Vec3> forward_kinematics_pose(const JointTree& tree, const Vec3& root,
                                                 const std::vector<Quat>& quats) {
  if (static_cast<int>(quats.size()) != tree.size()) {
    throw std::invalid_argument("pose quaternion count does not match the joint tree");
  }
  std::vector<Vec3> p(tree.size());
  std::vector<Mat3> world(tree.size());
  p[0] = root;
  world[0] = quat_to_matrix(quats[0]);
  for (int j = 1; j < tree.size(); ++j) {
    const int par = tree.joint(j).parent;
    p[j] = p[par] + world[par] * tree.joint(j).offset;
    world[j] = world[par] * quat_to_matrix(quats[j]);
  }
  return p;
}

/// Joint positions for every frame of a motion.
inline std::vector<std::vector<Vec3>> forward_kinematics(const JointTree& tree,
                                                         const SkeletonMotion& motion) {
  std::vector<std::vector<Vec3>> out;
  out.reserve(motion.frames.size());
  for (const SkeletonFrame& f : motion.frames) {
    out.push_back(forward_kinematics_pose(tree, f.root, f.quats));
  }
  return out;
}

/// Cached positions when present, otherwise freshly computed FK.
inline std::vector<std::vector<Vec3>> motion_positions(const JointTree& tree,
                                                       const SkeletonMotion& motion) {
  if (motion.has_positions()) return motion.positions;
  return forward_kinematics(tree, motion);
}

/// Shape and range validation: per-frame quat counts, unit quaternions,
/// contact shape and [0,1] range, and (optionally) cached positions against
/// forward kinematics within 1e-9.
inline void validate_motion(const JointTree& tree, const SkeletonMotion& motion,
                            bool check_position_cache = true) {
  for (const SkeletonFrame& f : motion.frames) {
    if (static_cast<int>(f.quats.size()) != tree.size()) {
      throw std::invalid_argument("frame quaternion count does not match the joint tree");
    }
    for (const Quat& q : f.quats) {
      if (std::abs(q.norm() - 1.0) > kUnitQuatTol) {
        throw std::invalid_argument("motion contains a non-unit quaternion");
      }
    }
  }
  if (motion.has_contacts()) {
    if (motion.contacts.size() != motion.frames.size()) {
      throw std::invalid_argument("contact rows do not match the frame count");
    }
    for (const auto& row : motion.contacts) {
      for (double c : row) {
        if (!(c >= 0.0 && c <= 1.0)) {
          throw std::invalid_argument("contact probability outside [0, 1]");
        }
      }
    }
  }
  if (check_position_cache && motion.has_positions()) {
    if (motion.positions.size() != motion.frames.size()) {
      throw std::invalid_argument("cached position rows do not match the frame count");
    }
    const auto fk = forward_kinematics(tree, motion);
    for (size_t t = 0; t < fk.size(); ++t) {
      if (motion.positions[t].size() != fk[t].size()) {
        throw std::invalid_argument("cached position columns do not match the joint tree");
      }
      for (size_t j = 0; j < fk[t].size(); ++j) {
        if ((motion.positions[t][j] - fk[t][j]).norm() > 1e-9) {
          throw std::invalid_argument("cached positions disagree with forward kinematics");
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Canonical 20-joint rig.  Up is +z, forward +y, character-left +x; units are
// meters.  Wrists and foot tips are leaves; the other 15 non-root joints are
// the driven set for humanoid retargeting.

enum CanonicalJoint : int {
  kRoot = 0,
  kMidSpine,
  kThorax,
  kLowerNeck,
  kLeftClavicle,
  kLeftShoulder,
  kLeftElbow,
  kLeftWrist,
  kRightClavicle,
  kRightShoulder,
  kRightElbow,
  kRightWrist,
  kLeftHip,
  kLeftKnee,
  kLeftAnkle,
  kLeftFoot,
  kRightHip,
  kRightKnee,
  kRightAnkle,
  kRightFoot,
  kCanonicalJointCount
};

inline constexpr std::array<const char*, kCanonicalJointCount> kCanonicalJointNames = {
    "root",          "mid_spine",      "thorax",      "lower_neck",
    "left_clavicle", "left_shoulder",  "left_elbow",  "left_wrist",
    "right_clavicle", "right_shoulder", "right_elbow", "right_wrist",
    "left_hip",      "left_knee",      "left_ankle",  "left_foot",
    "right_hip",     "right_knee",     "right_ankle", "right_foot",
};

/// Contact / plausibility foot set, in contact-column order.
inline constexpr std::array<int, 4> kFootJoints = {kLeftAnkle, kRightAnkle, kLeftFoot, kRightFoot};

/// Root height at which the canonical rest pose's foot tips touch z = 0.
inline constexpr double kCanonicalRootHeight = 0.91;

inline const JointTree& canonical_tree() {
  static const JointTree tree = [] {
    // parent, offset x, y, z.  Spine keeps a slight curve and elbows/knees a
    // rest bend so every retarget frame recipe is well-conditioned at rest.
    struct Row { int parent; double x, y, z; };
    constexpr std::array<Row, kCanonicalJointCount> rows = {{
        {-1, 0.0, 0.0, 0.0},              // root
        {kRoot, 0.0, 0.02, 0.14},         // mid_spine
        {kMidSpine, 0.0, -0.015, 0.15},   // thorax
        {kThorax, 0.0, 0.02, 0.13},       // lower_neck
        {kLowerNeck, 0.06, 0.01, -0.03},  // left_clavicle
        {kLeftClavicle, 0.12, 0.0, -0.01},   // left_shoulder
        {kLeftShoulder, 0.27, -0.03, -0.02}, // left_elbow
        {kLeftElbow, 0.24, 0.07, -0.01},     // left_wrist
        {kLowerNeck, -0.06, 0.01, -0.03},    // right_clavicle
        {kRightClavicle, -0.12, 0.0, -0.01},   // right_shoulder
        {kRightShoulder, -0.27, -0.03, -0.02}, // right_elbow
        {kRightElbow, -0.24, 0.07, -0.01},     // right_wrist
        {kRoot, 0.09, 0.0, -0.05},        // left_hip
        {kLeftHip, 0.01, 0.03, -0.42},    // left_knee
        {kLeftKnee, 0.005, -0.12, -0.40}, // left_ankle
        {kLeftAnkle, 0.01, 0.14, -0.04},  // left_foot
        {kRoot, -0.09, 0.0, -0.05},       // right_hip
        {kRightHip, -0.01, 0.03, -0.42},  // right_knee
        {kRightKnee, -0.005, -0.12, -0.40}, // right_ankle
        {kRightAnkle, -0.01, 0.14, -0.04},  // right_foot
    }};
    std::vector<Joint> joints(kCanonicalJointCount);
    for (int i = 0; i < kCanonicalJointCount; ++i) {
      joints[i] = Joint{kCanonicalJointNames[i], rows[i].parent,
                        Vec3(rows[i].x, rows[i].y, rows[i].z)};
    }
    return JointTree(std::move(joints));
  }();
  return tree;
}

/// True when the tree matches the canonical rig joint-for-joint (names,
/// parents, offsets).
inline bool is_canonical_tree(const JointTree& tree) {
  const JointTree& ref = canonical_tree();
  if (tree.size() != ref.size()) return false;
  for (int i = 0; i < ref.size(); ++i) {
    if (tree.joint(i).name != ref.joint(i).name || tree.joint(i).parent != ref.joint(i).parent ||
        (tree.joint(i).offset - ref.joint(i).offset).norm() > 1e-12) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Synthetic test motions on the canonical rig.

enum class TestMotionKind { kWalk, kCrawl, kStatic };

inline TestMotionKind test_motion_kind_from_string(std::string_view s) {
  if (s == "walk") return TestMotionKind::kWalk;
  if (s == "crawl") return TestMotionKind::kCrawl;
  if (s == "static") return TestMotionKind::kStatic;
  throw std::invalid_argument("unknown test motion kind: " + std::string(s));
}

namespace detail {

inline Quat axis_angle(const Vec3& axis, double angle) {
  return Quat(Eigen::AngleAxisd(angle, axis.normalized()));
}

}  // namespace detail

/// Deterministic synthetic motion with plausible contacts: a forward walk, a
/// low crawl, or a static stance.  Contacts are derived from foot height, so
/// a foot marked in contact really is near the ground.  Cached positions are
/// filled in.  Needs at least 2 frames.
inline SkeletonMotion synthesize_test_motion(TestMotionKind kind, int frames,
                                             std::uint64_t seed = 42, double fps = 30.0) {
  if (frames < 2) {
    throw std::invalid_argument("synthesized motions need at least 2 frames");
  }
  if (fps <= 0.0) {
    throw std::invalid_argument("fps must be positive");
  }
  const JointTree& tree = canonical_tree();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 1.0);

  SkeletonMotion out;
  out.fps = fps;
  out.frames.resize(frames);

  const Vec3 ax = Vec3::UnitX();
  const Vec3 az = Vec3::UnitZ();

  // Per-kind gait parameters.
  double stride_hz = 1.0, speed = 1.0, height = kCanonicalRootHeight;
  double hip_swing = 0.45, knee_flex = 0.35, arm_swing = 0.35, elbow_flex = 0.25;
  double lean = 0.0, bounce = 0.015;
  if (kind == TestMotionKind::kCrawl) {
    stride_hz = 0.6;
    speed = 0.25;
    height = 0.52;
    hip_swing = 0.25;
    knee_flex = 0.25;
    arm_swing = 0.25;
    elbow_flex = 0.15;
    lean = 1.1;
    bounce = 0.008;
  } else if (kind == TestMotionKind::kStatic) {
    stride_hz = 0.0;
    speed = 0.0;
    hip_swing = 0.0;
    knee_flex = 0.0;
    arm_swing = 0.0;
    elbow_flex = 0.0;
    bounce = 0.0;
  }
  // Static poses must have zero velocity, so their jitter is frozen once.
  const bool frozen = (kind == TestMotionKind::kStatic);
  std::array<double, kCanonicalJointCount> frozen_jitter{};
  for (auto& v : frozen_jitter) v = jitter(rng);

  // Crawl pre-bend: pitch the torso forward and fold the limbs.
  const double crawl = (kind == TestMotionKind::kCrawl) ? 1.0 : 0.0;

  for (int t = 0; t < frames; ++t) {
    const double phase = kTwoPi * stride_hz * t / fps;
    SkeletonFrame& f = out.frames[t];
    f.quats.assign(kCanonicalJointCount, Quat::Identity());

    auto wobble = [&](int j) {
      const double w = frozen ? frozen_jitter[j] : jitter(rng);
      return 0.01 * w;
    };

    f.root = Vec3(0.0, speed * t / fps, height + bounce * std::sin(2.0 * phase));
    f.quats[kRoot] = detail::axis_angle(ax, -lean * 0.35 + 0.02 * std::sin(phase));

    f.quats[kMidSpine] = detail::axis_angle(ax, -lean * 0.30 + wobble(kMidSpine));
    f.quats[kThorax] = detail::axis_angle(ax, -lean * 0.25 + wobble(kThorax));
    f.quats[kLowerNeck] = detail::axis_angle(az, 0.05 * std::sin(phase) + wobble(kLowerNeck));

    // Legs: swing about the lateral axis, knees only ever deepen their bend.
    const double lswing = std::sin(phase);
    const double rswing = std::sin(phase + kPi);
    f.quats[kLeftHip] = detail::axis_angle(ax, crawl * 0.9 + hip_swing * lswing + wobble(kLeftHip));
    f.quats[kRightHip] = detail::axis_angle(ax, crawl * 0.9 + hip_swing * rswing + wobble(kRightHip));
    f.quats[kLeftKnee] =
        detail::axis_angle(ax, -crawl * 1.0 - knee_flex * (0.5 + 0.5 * std::cos(phase)) + wobble(kLeftKnee));
    f.quats[kRightKnee] =
        detail::axis_angle(ax, -crawl * 1.0 - knee_flex * (0.5 + 0.5 * std::cos(phase + kPi)) + wobble(kRightKnee));
    f.quats[kLeftAnkle] = detail::axis_angle(ax, 0.1 * lswing + wobble(kLeftAnkle));
    f.quats[kRightAnkle] = detail::axis_angle(ax, 0.1 * rswing + wobble(kRightAnkle));

    // Arms counter-swing the legs.
    f.quats[kLeftShoulder] = detail::axis_angle(ax, crawl * 0.8 + arm_swing * rswing + wobble(kLeftShoulder));
    f.quats[kRightShoulder] = detail::axis_angle(ax, crawl * 0.8 + arm_swing * lswing + wobble(kRightShoulder));
    f.quats[kLeftElbow] =
        detail::axis_angle(az, elbow_flex * (0.5 + 0.5 * std::sin(phase + kPi)) + wobble(kLeftElbow));
    f.quats[kRightElbow] =
        detail::axis_angle(az, -elbow_flex * (0.5 + 0.5 * std::sin(phase)) + wobble(kRightElbow));
  }

  out.positions = forward_kinematics(tree, out);

  // Contacts from foot height: near the ground means in contact.
  const double contact_height = (kind == TestMotionKind::kCrawl) ? 0.30 : 0.08;
  out.contacts.resize(frames);
  for (int t = 0; t < frames; ++t) {
    for (size_t c = 0; c < kFootJoints.size(); ++c) {
      const double z = out.positions[t][kFootJoints[c]].z();
      out.contacts[t][c] = z < contact_height ? 1.0 : 0.0;
    }
  }
  return out;
}

}  // namespace motionkit
