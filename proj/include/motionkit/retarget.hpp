#pragma once

// Skeleton-to-humanoid retargeting.  Each driven joint gets a parent and a
// child orthonormal frame built from joint positions via a fixed per-joint
// recipe; the joint's z-y-x euler angles are the relative rotation between
// the two.  Channels are then unwrapped over time (flip correction), and the
// humanoid's own forward kinematics replays the angles.

#include "motionkit/math.hpp"
#include "motionkit/skeleton.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace motionkit {

/// Default unwrap threshold for flip correction, radians.
inline constexpr double kDefaultFlipLambda = 5.0;

/// Humanoid-driven joints in storage / kinematic order (parents precede
/// children along every chain).
inline constexpr std::array<int, 15> kDrivenJoints = {
    kMidSpine,    kThorax,        kLowerNeck,
    kLeftClavicle, kLeftShoulder, kLeftElbow,
    kRightClavicle, kRightShoulder, kRightElbow,
    kLeftHip,     kLeftKnee,      kLeftAnkle,
    kRightHip,    kRightKnee,     kRightAnkle,
};
inline constexpr int kDrivenCount = 15;

inline int driven_index(int joint) {
  for (int i = 0; i < kDrivenCount; ++i) {
    if (kDrivenJoints[i] == joint) return i;
  }
  return -1;
}

// ---------------------------------------------------------------------------
// Frame recipe table.  One frame per driven joint (its "child" frame) plus the
// root frame; the parent frame of a joint is the frame of its tree parent.

enum HumanoidFrameId : int {
  kFrameRoot = 0,
  kFrameMidSpine,
  kFrameThorax,
  kFrameLowerNeck,
  kFrameLeftClavicle,
  kFrameLeftShoulder,
  kFrameLeftElbow,
  kFrameRightClavicle,
  kFrameRightShoulder,
  kFrameRightElbow,
  kFrameLeftHip,
  kFrameLeftKnee,
  kFrameLeftAnkle,
  kFrameRightHip,
  kFrameRightKnee,
  kFrameRightAnkle,
  kFrameCount
};

inline constexpr int frame_of_driven(int driven_idx) { return 1 + driven_idx; }

namespace detail {

struct BoneRef {
  int from = 0;
  int to = 0;
};

enum class HintKind {
  kCrossPrimary,  // secondary = +-normalize(primary x hint bone)
  kPair,          // secondary = normalize(bone_a x bone_b), exactly orthogonal to primary
  kBone,          // secondary = hint bone orthogonalized against primary
  kCopy,          // secondary = named axis of an already-evaluated frame this pose
};

struct FrameDef {
  Axis primary_axis;
  BoneRef primary;
  Axis secondary_axis;
  HintKind hint;
  bool negate = false;          // kCrossPrimary: flip the cross direction
  BoneRef bone_a{};             // kCrossPrimary / kBone: the hint bone; kPair: first bone
  BoneRef bone_b{};             // kPair: second bone
  int copy_frame = 0;           // kCopy source frame
  Axis copy_axis = Axis::kX;    // kCopy source axis
};

// The 16 recipes.  Bones are written from -> to; left and right limbs are not
// plain mirror copies (bone directions and cross orders differ per side).
inline const std::array<FrameDef, kFrameCount>& frame_defs() {
  using A = Axis;
  using H = HintKind;
  static const std::array<FrameDef, kFrameCount> defs = {{
      // root: x spans the hips, y is the pelvis plane normal
      {A::kX, {kRightHip, kLeftHip}, A::kY, H::kPair, false, {kRoot, kRightHip}, {kRoot, kLeftHip}},
      // spine: y climbs the spine, x from the segment below
      {A::kY, {kMidSpine, kThorax}, A::kX, H::kCrossPrimary, false, {kMidSpine, kRoot}},
      {A::kY, {kThorax, kLowerNeck}, A::kX, H::kCrossPrimary, false, {kThorax, kMidSpine}},
      // lower neck: x spans the clavicles, z is the shoulder-girdle normal
      {A::kX, {kRightClavicle, kLeftClavicle}, A::kZ, H::kPair, false,
       {kLowerNeck, kLeftClavicle}, {kLowerNeck, kRightClavicle}},
      // clavicles and shoulders: x along the limb, z out of its plane
      {A::kX, {kLeftClavicle, kLeftShoulder}, A::kZ, H::kCrossPrimary, true,
       {kLeftClavicle, kMidSpine}},
      {A::kX, {kLeftShoulder, kLeftElbow}, A::kZ, H::kCrossPrimary, true, {kLeftElbow, kLeftWrist}},
      // elbow shares the shoulder frame's plane normal
      {A::kX, {kLeftElbow, kLeftWrist}, A::kZ, H::kCopy, false, {}, {},
       kFrameLeftShoulder, A::kZ},
      {A::kX, {kRightShoulder, kRightClavicle}, A::kZ, H::kCrossPrimary, true,
       {kRightClavicle, kMidSpine}},
      // right arm: shoulder copies the elbow frame's plane normal
      {A::kX, {kRightElbow, kRightShoulder}, A::kZ, H::kCopy, false, {}, {},
       kFrameRightElbow, A::kZ},
      {A::kX, {kRightWrist, kRightElbow}, A::kZ, H::kPair, false,
       {kRightElbow, kRightWrist}, {kRightElbow, kRightShoulder}},
      // legs: y runs up the limb, z lateral out of the leg plane
      {A::kY, {kLeftKnee, kLeftHip}, A::kZ, H::kCrossPrimary, false, {kLeftHip, kRightHip}},
      {A::kY, {kLeftAnkle, kLeftKnee}, A::kX, H::kCrossPrimary, true, {kLeftKnee, kLeftHip}},
      {A::kY, {kLeftAnkle, kLeftKnee}, A::kZ, H::kBone, false, {kLeftAnkle, kLeftFoot}},
      {A::kY, {kRightKnee, kRightHip}, A::kZ, H::kCrossPrimary, true, {kRightHip, kLeftHip}},
      {A::kY, {kRightAnkle, kRightKnee}, A::kX, H::kCrossPrimary, true, {kRightKnee, kRightHip}},
      {A::kY, {kRightAnkle, kRightKnee}, A::kZ, H::kBone, false, {kRightAnkle, kRightFoot}},
  }};
  return defs;
}

// Copy sources must be evaluated before their consumers, so the right elbow
// frame precedes the right shoulder frame.
inline constexpr std::array<int, kFrameCount> kFrameEvalOrder = {
    kFrameRoot,         kFrameMidSpine,      kFrameThorax,       kFrameLowerNeck,
    kFrameLeftClavicle, kFrameLeftShoulder,  kFrameLeftElbow,
    kFrameRightClavicle, kFrameRightElbow,   kFrameRightShoulder,
    kFrameLeftHip,      kFrameLeftKnee,      kFrameLeftAnkle,
    kFrameRightHip,     kFrameRightKnee,     kFrameRightAnkle,
};

}  // namespace detail

/// Parent frame id of a driven joint: the frame of its tree parent.
inline int parent_frame_of_driven(int driven_idx) {
  const int parent = canonical_tree().joint(kDrivenJoints[driven_idx]).parent;
  if (parent == kRoot) return kFrameRoot;
  return frame_of_driven(driven_index(parent));
}

// ---------------------------------------------------------------------------
// Pose frame evaluation.

/// Carries each frame's previous secondary axis so a degenerate pose can fall
/// back on the last well-defined plane.
struct FrameEvalState {
  std::array<std::optional<Vec3>, kFrameCount> prev_secondary;
};

struct PoseFrames {
  std::array<Frame3, kFrameCount> frames;
  std::array<bool, kFrameCount> used_fallback{};
  int fallback_count = 0;
};

/// Evaluates all 16 frames of one pose from canonically-indexed joint
/// positions.  Degenerate recipes (collinear bones) substitute the previous
/// pose's secondary axis re-orthogonalized against the current primary, or
/// world up (then world x) at sequence start.  Updates `state` when given.
/// Throws NumericalError when a primary bone has zero length.
inline PoseFrames evaluate_pose_frames(const std::vector<Vec3>& positions,
                                       FrameEvalState* state = nullptr) {
  if (static_cast<int>(positions.size()) != kCanonicalJointCount) {
    throw std::invalid_argument("pose frame evaluation expects 20 canonical joint positions");
  }
  const auto& defs = detail::frame_defs();
  PoseFrames out;

  auto bone = [&](const detail::BoneRef& b) { return positions[b.to] - positions[b.from]; };

  for (const int fid : detail::kFrameEvalOrder) {
    const detail::FrameDef& def = defs[fid];
    const Vec3 primary = bone(def.primary);
    if (primary.norm() < 1e-9) {
      throw NumericalError("coincident joints give a zero-length primary bone (frame " +
                           std::to_string(fid) + ")");
    }

    std::optional<Frame3> built;
    switch (def.hint) {
      case detail::HintKind::kCrossPrimary: {
        const Vec3 hint = bone(def.bone_a);
        if (hint.norm() >= 1e-9) {
          built = build_orthonormal(primary, hint,
                                    {def.primary_axis, def.secondary_axis,
                                     SecondaryMode::kCross, def.negate});
        }
        break;
      }
      case detail::HintKind::kPair: {
        const Vec3 a = bone(def.bone_a);
        const Vec3 b = bone(def.bone_b);
        const Vec3 n = a.cross(b);
        if (n.norm() >= kDegenerateSinTol * a.norm() * b.norm()) {
          built = build_orthonormal(primary, n,
                                    {def.primary_axis, def.secondary_axis,
                                     SecondaryMode::kOrthogonalize, false});
        }
        break;
      }
      case detail::HintKind::kBone: {
        const Vec3 hint = bone(def.bone_a);
        if (hint.norm() >= 1e-9) {
          built = build_orthonormal(primary, hint,
                                    {def.primary_axis, def.secondary_axis,
                                     SecondaryMode::kOrthogonalize, false});
        }
        break;
      }
      case detail::HintKind::kCopy:
        // The copied axis is orthogonal to this primary for any non-degenerate
        // pose; orthogonalizing keeps the two frames consistent either way.
        built = build_orthonormal(primary, out.frames[def.copy_frame].axis(static_cast<int>(def.copy_axis)),
                                  {def.primary_axis, def.secondary_axis,
                                   SecondaryMode::kOrthogonalize, false});
        break;
    }

    if (!built) {
      out.used_fallback[fid] = true;
      ++out.fallback_count;
      std::array<Vec3, 3> hints = {Vec3::UnitZ(), Vec3::UnitX(), Vec3::UnitY()};
      if (state && state->prev_secondary[fid]) {
        hints[2] = hints[1];
        hints[1] = hints[0];
        hints[0] = *state->prev_secondary[fid];
      }
      for (const Vec3& hint : hints) {
        built = build_orthonormal(primary, hint,
                                  {def.primary_axis, def.secondary_axis,
                                   SecondaryMode::kOrthogonalize, false});
        if (built) break;
      }
      if (!built) {
        throw NumericalError("no usable fallback plane for frame " + std::to_string(fid));
      }
    }

    out.frames[fid] = *built;
    if (state) {
      state->prev_secondary[fid] = built->axis(static_cast<int>(def.secondary_axis));
    }
  }
  return out;
}

/// Parent and child frame of one driven joint, evaluated fresh from a single
/// pose.  `degenerate` reports that either frame needed the fallback plane.
struct FramePair {
  Frame3 parent;
  Frame3 child;
  bool degenerate = false;
};

inline FramePair joint_frames(const std::vector<Vec3>& positions, int joint) {
  const int idx = driven_index(joint);
  if (idx < 0) {
    throw std::invalid_argument("joint_frames: joint is not humanoid-driven");
  }
  const PoseFrames all = evaluate_pose_frames(positions);
  const int pf = parent_frame_of_driven(idx);
  const int cf = frame_of_driven(idx);
  return FramePair{all.frames[pf], all.frames[cf],
                   all.used_fallback[pf] || all.used_fallback[cf]};
}

/// Raw (uncorrected) z-y-x eulers for all driven joints of one pose; each
/// channel lies in (-pi, pi].
inline std::array<EulerZYX, kDrivenCount> retarget_frame(const std::vector<Vec3>& positions,
                                                         FrameEvalState* state = nullptr,
                                                         int* fallbacks = nullptr) {
  const PoseFrames all = evaluate_pose_frames(positions, state);
  if (fallbacks) *fallbacks += all.fallback_count;
  std::array<EulerZYX, kDrivenCount> eulers;
  for (int i = 0; i < kDrivenCount; ++i) {
    eulers[i] = euler_from_frames(all.frames[parent_frame_of_driven(i)],
                                  all.frames[frame_of_driven(i)]);
  }
  return eulers;
}

// ---------------------------------------------------------------------------
// Temporal flip correction.

/// Unwraps a euler channel: whenever a value jumps more than `lambda` from
/// the already-corrected previous value, +-2*pi is added (sign chosen by the
/// previous value's sign) until the jump is within `lambda`.  Corrections
/// accumulate; values change only by exact multiples of 2*pi; applying the
/// correction twice changes nothing.
inline std::vector<double> flip_correct(const std::vector<double>& channel, double lambda) {
  if (lambda <= 0.0) {
    throw std::invalid_argument("flip_correct: lambda must be positive");
  }
  std::vector<double> out = channel;
  for (size_t t = 1; t < out.size(); ++t) {
    const double prev = out[t - 1];
    const double step = prev > 0.0 ? kTwoPi : -kTwoPi;
    while (std::abs(out[t] - prev) > lambda &&
           std::abs(out[t] + step - prev) < std::abs(out[t] - prev)) {
      out[t] += step;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Humanoid motion.

struct ChannelRange {
  double lo = -kTwoPi;
  double hi = kTwoPi;
};

/// Per-channel angle ranges: row 0 is the root, rows 1..15 the driven joints
/// in kDrivenJoints order; columns are the z, y, x channels.
struct JointLimitTable {
  std::array<std::array<ChannelRange, 3>, 1 + kDrivenCount> rows{};

  static JointLimitTable permissive() { return JointLimitTable{}; }
};

struct HumanoidFrame {
  Vec3 root = Vec3::Zero();
  EulerZYX root_euler;
  std::array<EulerZYX, kDrivenCount> eulers{};
};

struct HumanoidMotion {
  double fps = 30.0;
  std::vector<HumanoidFrame> frames;
  JointLimitTable limits;

  int frame_count() const { return static_cast<int>(frames.size()); }
};

struct LimitViolation {
  int frame = 0;
  int row = 0;      // 0 = root, 1.. = driven joint row
  int channel = 0;  // 0 = z, 1 = y, 2 = x
  double value = 0.0;
};

/// Channels outside the motion's limit table.  Violations are reported, never
/// clamped.
inline std::vector<LimitViolation> check_limits(const HumanoidMotion& motion) {
  std::vector<LimitViolation> out;
  auto check = [&](int frame, int row, const EulerZYX& e) {
    const double ch[3] = {e.ez, e.ey, e.ex};
    for (int c = 0; c < 3; ++c) {
      const ChannelRange& r = motion.limits.rows[row][c];
      if (ch[c] < r.lo || ch[c] > r.hi) {
        out.push_back({frame, row, c, ch[c]});
      }
    }
  };
  for (int t = 0; t < motion.frame_count(); ++t) {
    check(t, 0, motion.frames[t].root_euler);
    for (int i = 0; i < kDrivenCount; ++i) {
      check(t, 1 + i, motion.frames[t].eulers[i]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sequence retargeting.

/// Index of each canonical joint inside `tree`, matched by name.  Throws when
/// a canonical joint is missing.
inline std::array<int, kCanonicalJointCount> canonical_index_map(const JointTree& tree) {
  std::array<int, kCanonicalJointCount> map{};
  std::string missing;
  for (int i = 0; i < kCanonicalJointCount; ++i) {
    map[i] = tree.find(kCanonicalJointNames[i]);
    if (map[i] < 0) {
      missing += missing.empty() ? "" : ", ";
      missing += kCanonicalJointNames[i];
    }
  }
  if (!missing.empty()) {
    throw std::invalid_argument("tree is missing canonical joints: " + missing);
  }
  return map;
}

struct RetargetStats {
  int degenerate_fallbacks = 0;  // frames repaired with a substitute plane
};

/// Retargets a skeleton motion onto the humanoid: per-frame euler extraction
/// from cached or recomputed joint positions, root angles from the root
/// quaternion, then per-channel flip correction with threshold `lambda`.
inline HumanoidMotion retarget_sequence(const JointTree& tree, const SkeletonMotion& motion,
                                        double lambda = kDefaultFlipLambda,
                                        RetargetStats* stats = nullptr) {
  const auto map = canonical_index_map(tree);
  const auto positions = motion_positions(tree, motion);

  HumanoidMotion out;
  out.fps = motion.fps;
  out.frames.resize(motion.frame_count());

  FrameEvalState state;
  int fallbacks = 0;
  std::vector<Vec3> pose(kCanonicalJointCount);
  for (int t = 0; t < motion.frame_count(); ++t) {
    for (int i = 0; i < kCanonicalJointCount; ++i) {
      pose[i] = positions[t][map[i]];
    }
    HumanoidFrame& f = out.frames[t];
    f.root = motion.frames[t].root;
    f.root_euler = euler_from_matrix(quat_to_matrix(motion.frames[t].quats[map[kRoot]]));
    f.eulers = retarget_frame(pose, &state, &fallbacks);
  }
  if (stats) stats->degenerate_fallbacks = fallbacks;

  // Flip-correct every channel: root plus each driven joint, z/y/x each.
  const int T = out.frame_count();
  std::vector<double> channel(T);
  auto correct = [&](auto&& get) {
    for (int t = 0; t < T; ++t) channel[t] = get(out.frames[t]);
    channel = flip_correct(channel, lambda);
    for (int t = 0; t < T; ++t) get(out.frames[t]) = channel[t];
  };
  correct([](HumanoidFrame& f) -> double& { return f.root_euler.ez; });
  correct([](HumanoidFrame& f) -> double& { return f.root_euler.ey; });
  correct([](HumanoidFrame& f) -> double& { return f.root_euler.ex; });
  for (int i = 0; i < kDrivenCount; ++i) {
    correct([i](HumanoidFrame& f) -> double& { return f.eulers[i].ez; });
    correct([i](HumanoidFrame& f) -> double& { return f.eulers[i].ey; });
    correct([i](HumanoidFrame& f) -> double& { return f.eulers[i].ex; });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Humanoid forward kinematics.

/// The fixed humanoid: canonical rest skeleton, its rest recipe frames, and
/// each bone offset expressed in the frame that carries it.  Replaying eulers
/// through these frames reproduces any retargeted pose (foot tips excepted:
/// the ankle frame cannot represent foot pitch).
class HumanoidModel {
 public:
  HumanoidModel() {
    const JointTree& tree = canonical_tree();
    const PoseFrames rest = evaluate_pose_frames(tree.rest_positions());
    if (rest.fallback_count != 0) {
      throw NumericalError("canonical rest pose must be non-degenerate");
    }
    rest_frames_ = rest.frames;
    for (int c = 1; c < kCanonicalJointCount; ++c) {
      carrier_[c] = carrier_frame(c);
      local_offsets_[c] = rest_frames_[carrier_[c]].to_matrix().transpose() * tree.joint(c).offset;
    }
  }

  static const HumanoidModel& canonical() {
    static const HumanoidModel model;
    return model;
  }

  const Frame3& rest_frame(int frame_id) const { return rest_frames_.at(frame_id); }

  /// Joint positions of one humanoid frame.
  std::vector<Vec3> fk_pose(const HumanoidFrame& frame) const {
    std::array<Mat3, kFrameCount> world;
    world[kFrameRoot] = euler_to_matrix(frame.root_euler) * rest_frames_[kFrameRoot].to_matrix();
    for (int i = 0; i < kDrivenCount; ++i) {
      world[frame_of_driven(i)] =
          world[parent_frame_of_driven(i)] * euler_to_matrix(frame.eulers[i]);
    }
    std::vector<Vec3> p(kCanonicalJointCount);
    p[kRoot] = frame.root;
    for (int c = 1; c < kCanonicalJointCount; ++c) {
      p[c] = p[canonical_tree().joint(c).parent] + world[carrier_[c]] * local_offsets_[c];
    }
    return p;
  }

  std::vector<std::vector<Vec3>> forward_kinematics(const HumanoidMotion& motion) const {
    std::vector<std::vector<Vec3>> out;
    out.reserve(motion.frames.size());
    for (const HumanoidFrame& f : motion.frames) {
      out.push_back(fk_pose(f));
    }
    return out;
  }

 private:
  static int carrier_frame(int child_joint) {
    const int parent = canonical_tree().joint(child_joint).parent;
    if (parent == kRoot) return kFrameRoot;
    return frame_of_driven(driven_index(parent));
  }

  std::array<Frame3, kFrameCount> rest_frames_;
  std::array<Vec3, kCanonicalJointCount> local_offsets_{};
  std::array<int, kCanonicalJointCount> carrier_{};
};

/// Shorthand: positions of a retargeted motion through the canonical model.
inline std::vector<std::vector<Vec3>> humanoid_fk(const HumanoidMotion& motion) {
  return HumanoidModel::canonical().forward_kinematics(motion);
}

}  // namespace motionkit
