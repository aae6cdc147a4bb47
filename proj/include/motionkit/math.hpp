#pragma once

// Fixed-size 3-d rotation math shared by the retargeting pipeline: orthonormal
// frames, z-y-x euler angles, and the cross-product frame construction used by
// the per-joint frame recipes.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace motionkit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Tolerances shared across the library.
inline constexpr double kUnitQuatTol = 1e-6;       // accepted |norm - 1| on input quaternions
inline constexpr double kOrthonormalTol = 1e-6;    // accepted axis norm / pairwise dot error
inline constexpr double kDegenerateSinTol = 1e-4;  // sin(angle) below which a cross is unusable

// Raised when inputs are numerically unusable beyond any fallback
// (e.g. coincident joints produce a zero-length primary bone).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Quaternions.  Stored w, x, y, z; q and -q describe the same rotation.

inline Quat normalized(const Quat& q) {
  const double n = q.norm();
  if (n < 1e-12) {
    throw std::invalid_argument("cannot normalize a zero quaternion");
  }
  return Quat(q.w() / n, q.x() / n, q.y() / n, q.z() / n);
}

/// Rotation matrix of a unit quaternion.  Rejects quaternions whose norm
/// deviates from 1 by more than kUnitQuatTol.
inline Mat3 quat_to_matrix(const Quat& q) {
  if (std::abs(q.norm() - 1.0) > kUnitQuatTol) {
    throw std::invalid_argument("quat_to_matrix: quaternion norm deviates from 1 by more than 1e-6");
  }
  return normalized(q).toRotationMatrix();
}

// ---------------------------------------------------------------------------
// z-y-x intrinsic euler angles: R = Rz(ez) * Ry(ey) * Rx(ex).

struct EulerZYX {
  double ez = 0.0;
  double ey = 0.0;
  double ex = 0.0;
};

inline Mat3 euler_to_matrix(const EulerZYX& e) {
  const double cz = std::cos(e.ez), sz = std::sin(e.ez);
  const double cy = std::cos(e.ey), sy = std::sin(e.ey);
  const double cx = std::cos(e.ex), sx = std::sin(e.ex);
  Mat3 r;
  r << cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx,
       sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx,
       -sy,     cy * sx,               cy * cx;
  return r;
}

/// Extracts z-y-x euler angles from a rotation matrix.  Every channel comes
/// from a two-argument arctangent, so each lies in (-pi, pi] and the
/// reconstruction Rz*Ry*Rx reproduces the input exactly (gimbal-locked
/// matrices get one consistent representative).
inline EulerZYX euler_from_matrix(const Mat3& r) {
  EulerZYX e;
  e.ez = std::atan2(r(1, 0), r(0, 0));
  const double cz = std::cos(e.ez), sz = std::sin(e.ez);
  e.ey = std::atan2(-r(2, 0), r(0, 0) * cz + r(1, 0) * sz);
  e.ex = std::atan2(-r(1, 2) * cz + r(0, 2) * sz, r(1, 1) * cz - r(0, 1) * sz);
  return e;
}

// ---------------------------------------------------------------------------
// Orthonormal right-handed frames, stored as three unit column axes.

struct Frame3 {
  Vec3 x_axis = Vec3::UnitX();
  Vec3 y_axis = Vec3::UnitY();
  Vec3 z_axis = Vec3::UnitZ();

  Mat3 to_matrix() const {
    Mat3 m;
    m.col(0) = x_axis;
    m.col(1) = y_axis;
    m.col(2) = z_axis;
    return m;
  }

  static Frame3 from_matrix(const Mat3& m) {
    return Frame3{m.col(0), m.col(1), m.col(2)};
  }

  Vec3 axis(int i) const { return i == 0 ? x_axis : (i == 1 ? y_axis : z_axis); }

  bool is_orthonormal(double tol = kOrthonormalTol) const {
    const Mat3 m = to_matrix();
    return (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
           m.determinant() > 0.0;
  }
};

/// Relative rotation of `child` seen from `parent`, as z-y-x euler angles.
/// Both frames must be orthonormal within kOrthonormalTol.
inline EulerZYX euler_from_frames(const Frame3& parent, const Frame3& child) {
  if (!parent.is_orthonormal() || !child.is_orthonormal()) {
    throw std::invalid_argument("euler_from_frames: frame is not orthonormal within 1e-6");
  }
  return euler_from_matrix(parent.to_matrix().transpose() * child.to_matrix());
}

// ---------------------------------------------------------------------------
// Frame construction from a primary direction plus a secondary hint.

enum class Axis { kX = 0, kY = 1, kZ = 2 };

enum class SecondaryMode {
  kCross,          // secondary axis = +-normalize(primary x hint)
  kOrthogonalize,  // secondary axis = normalize(hint - (hint . p)p)
};

/// Selects which frame axes the two input vectors produce and how.
struct FrameRecipe {
  Axis primary_axis = Axis::kX;
  Axis secondary_axis = Axis::kY;
  SecondaryMode mode = SecondaryMode::kCross;
  bool negate = false;  // flips the kCross direction
};

/// Builds a right-handed orthonormal frame: the primary input becomes the
/// recipe's primary axis (normalized), the secondary axis comes from the hint
/// per the recipe mode, and the remaining axis completes the frame by the
/// cyclic cross (x = y*z, y = z*x, z = x*y).  Returns nullopt when the inputs
/// are collinear within kDegenerateSinTol, in which case the caller supplies a
/// substitute hint.  Scaling either input does not change the result.
inline std::optional<Frame3> build_orthonormal(const Vec3& primary, const Vec3& secondary,
                                               const FrameRecipe& recipe) {
  const double pn = primary.norm();
  const double sn = secondary.norm();
  if (pn < 1e-12 || sn < 1e-12) {
    throw std::invalid_argument("build_orthonormal: zero-length input");
  }
  const Vec3 p = primary / pn;
  const Vec3 cross = p.cross(secondary / sn);
  if (cross.norm() < kDegenerateSinTol) {
    return std::nullopt;  // degenerate: inputs collinear, no usable plane
  }

  Vec3 sec;
  if (recipe.mode == SecondaryMode::kCross) {
    sec = cross.normalized();
    if (recipe.negate) sec = -sec;
  } else {
    const Vec3 s = secondary / sn;
    sec = (s - s.dot(p) * p).normalized();
  }

  Vec3 axes[3];
  axes[static_cast<int>(recipe.primary_axis)] = p;
  axes[static_cast<int>(recipe.secondary_axis)] = sec;
  const int a = static_cast<int>(recipe.primary_axis);
  const int b = static_cast<int>(recipe.secondary_axis);
  const int c = 3 - a - b;
  axes[c] = axes[(c + 1) % 3].cross(axes[(c + 2) % 3]);
  return Frame3{axes[0], axes[1], axes[2]};
}

}  // namespace motionkit
