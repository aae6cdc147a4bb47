#include "motionkit/math.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace motionkit {
namespace {

Quat random_unit_quat(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Quat q(n(rng), n(rng), n(rng), n(rng));
  return normalized(q);
}

TEST(QuatToMatrix, IdentityQuaternionGivesIdentity) {
  const Mat3 r = quat_to_matrix(Quat(1.0, 0.0, 0.0, 0.0));
  EXPECT_LT((r - Mat3::Identity()).norm(), 1e-15);
}

TEST(QuatToMatrix, QuarterTurnAboutZ) {
  const double s = std::sqrt(0.5);
  const Mat3 r = quat_to_matrix(Quat(s, 0.0, 0.0, s));
  Mat3 expect;
  expect << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_LT((r - expect).norm(), 1e-12);
}

TEST(QuatToMatrix, DoubleCoverGivesSameMatrix) {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 100; ++i) {
    const Quat q = random_unit_quat(rng);
    const Quat neg(-q.w(), -q.x(), -q.y(), -q.z());
    EXPECT_LT((quat_to_matrix(q) - quat_to_matrix(neg)).norm(), 1e-14);
  }
}

TEST(QuatToMatrix, ResultIsRotation) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const Mat3 r = quat_to_matrix(random_unit_quat(rng));
    EXPECT_LT((r.transpose() * r - Mat3::Identity()).norm(), 1e-14);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-14);
  }
}

TEST(QuatToMatrix, RejectsNonUnitQuaternion) {
  EXPECT_THROW(quat_to_matrix(Quat(1.1, 0.0, 0.0, 0.0)), std::invalid_argument);
  EXPECT_THROW(quat_to_matrix(Quat(0.0, 0.0, 0.0, 0.0)), std::invalid_argument);
  // A norm error inside the acceptance band is normalized away, not rejected.
  EXPECT_NO_THROW(quat_to_matrix(Quat(1.0 + 1e-8, 0.0, 0.0, 0.0)));
}

TEST(EulerZYX, MatrixOfPureZRotation) {
  const Mat3 r = euler_to_matrix(EulerZYX{kPi / 2.0, 0.0, 0.0});
  Mat3 expect;
  expect << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_LT((r - expect).norm(), 1e-12);
}

TEST(EulerZYX, CompositionOrderIsZThenYThenX) {
  const EulerZYX e{0.3, -0.7, 1.1};
  const Mat3 rz = euler_to_matrix(EulerZYX{e.ez, 0.0, 0.0});
  const Mat3 ry = euler_to_matrix(EulerZYX{0.0, e.ey, 0.0});
  const Mat3 rx = euler_to_matrix(EulerZYX{0.0, 0.0, e.ex});
  EXPECT_LT((euler_to_matrix(e) - rz * ry * rx).norm(), 1e-14);
}

TEST(EulerZYX, ExtractionRoundTripsRandomRotations) {
  std::mt19937_64 rng(42);
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const Mat3 r = quat_to_matrix(random_unit_quat(rng));
    const Mat3 back = euler_to_matrix(euler_from_matrix(r));
    worst = std::max(worst, (back - r).norm());
  }
  EXPECT_LT(worst, 1e-13);
}

TEST(EulerZYX, ExtractionChannelsStayInHalfOpenPiRange) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const EulerZYX e = euler_from_matrix(quat_to_matrix(random_unit_quat(rng)));
    for (double c : {e.ez, e.ey, e.ex}) {
      EXPECT_GT(c, -kPi - 1e-15);
      EXPECT_LE(c, kPi + 1e-15);
    }
  }
}

TEST(EulerZYX, GimbalLockedMatrixStillRoundTrips) {
  for (double sign : {1.0, -1.0}) {
    const Mat3 r = euler_to_matrix(EulerZYX{0.4, sign * kPi / 2.0, -0.9});
    const Mat3 back = euler_to_matrix(euler_from_matrix(r));
    EXPECT_LT((back - r).norm(), 1e-13);
  }
}

TEST(EulerFromFrames, EqualFramesGiveZero) {
  std::mt19937_64 rng(11);
  const Frame3 f = Frame3::from_matrix(quat_to_matrix(random_unit_quat(rng)));
  const EulerZYX e = euler_from_frames(f, f);
  EXPECT_NEAR(e.ez, 0.0, 1e-12);
  EXPECT_NEAR(e.ey, 0.0, 1e-12);
  EXPECT_NEAR(e.ex, 0.0, 1e-12);
}

TEST(EulerFromFrames, RecoversRelativeRotation) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 200; ++i) {
    const Mat3 p = quat_to_matrix(random_unit_quat(rng));
    const Mat3 rel = quat_to_matrix(random_unit_quat(rng));
    const EulerZYX e = euler_from_frames(Frame3::from_matrix(p), Frame3::from_matrix(p * rel));
    EXPECT_LT((euler_to_matrix(e) - rel).norm(), 1e-12);
  }
}

TEST(EulerFromFrames, RejectsNonOrthonormalFrame) {
  Frame3 bad;
  bad.x_axis = Vec3(1.0, 0.1, 0.0);  // not unit, not orthogonal to y
  EXPECT_THROW(euler_from_frames(bad, Frame3{}), std::invalid_argument);
  EXPECT_THROW(euler_from_frames(Frame3{}, bad), std::invalid_argument);
}

TEST(BuildOrthonormal, HingeRecipeMatchesHandComputation) {
  // Primary along x, hint along y, negated cross into z: the frame must come
  // out x=(1,0,0), z=-(x cross y)=(0,0,-1), and y=z cross x=(0,-1,0).
  const FrameRecipe recipe{Axis::kX, Axis::kZ, SecondaryMode::kCross, true};
  const auto f = build_orthonormal(Vec3(1, 0, 0), Vec3(0, 1, 0), recipe);
  ASSERT_TRUE(f.has_value());
  EXPECT_LT((f->x_axis - Vec3(1, 0, 0)).norm(), 1e-15);
  EXPECT_LT((f->z_axis - Vec3(0, 0, -1)).norm(), 1e-15);
  EXPECT_LT((f->y_axis - Vec3(0, -1, 0)).norm(), 1e-15);
}

TEST(BuildOrthonormal, ScalingInputsDoesNotChangeFrame) {
  const FrameRecipe recipe{Axis::kY, Axis::kX, SecondaryMode::kCross, false};
  const Vec3 p(0.2, -0.7, 0.4), s(-0.5, 0.1, 0.9);
  const auto a = build_orthonormal(p, s, recipe);
  const auto b = build_orthonormal(17.0 * p, 0.003 * s, recipe);
  ASSERT_TRUE(a && b);
  EXPECT_LT((a->to_matrix() - b->to_matrix()).norm(), 1e-12);
}

TEST(BuildOrthonormal, ResultIsOrthonormalRightHanded) {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> n;
  const FrameRecipe recipes[] = {
      {Axis::kX, Axis::kY, SecondaryMode::kCross, false},
      {Axis::kY, Axis::kZ, SecondaryMode::kCross, true},
      {Axis::kZ, Axis::kX, SecondaryMode::kCross, false},
      {Axis::kY, Axis::kZ, SecondaryMode::kOrthogonalize, false},
      {Axis::kX, Axis::kZ, SecondaryMode::kOrthogonalize, false},
  };
  for (int i = 0; i < 500; ++i) {
    const Vec3 p(n(rng), n(rng), n(rng)), s(n(rng), n(rng), n(rng));
    if (p.norm() < 1e-6 || s.norm() < 1e-6) continue;
    for (const auto& recipe : recipes) {
      const auto f = build_orthonormal(p, s, recipe);
      if (!f) continue;
      EXPECT_TRUE(f->is_orthonormal(1e-9));
      EXPECT_GT(f->to_matrix().determinant(), 0.999);
      // The primary input keeps its direction on the assigned axis.
      EXPECT_GT(f->axis(static_cast<int>(recipe.primary_axis)).dot(p.normalized()), 0.999);
    }
  }
}

TEST(BuildOrthonormal, OrthogonalizeKeepsHintHalfPlane) {
  const FrameRecipe recipe{Axis::kY, Axis::kZ, SecondaryMode::kOrthogonalize, false};
  const auto f = build_orthonormal(Vec3(0, 1, 0), Vec3(0, 0.9, 0.3), recipe);
  ASSERT_TRUE(f.has_value());
  EXPECT_LT((f->z_axis - Vec3(0, 0, 1)).norm(), 1e-12);
  EXPECT_LT((f->y_axis - Vec3(0, 1, 0)).norm(), 1e-12);
}

TEST(BuildOrthonormal, CollinearInputsSignalDegeneracy) {
  const FrameRecipe recipe{Axis::kX, Axis::kY, SecondaryMode::kCross, false};
  EXPECT_FALSE(build_orthonormal(Vec3(0, 0, 1), Vec3(0, 0, 1), recipe).has_value());
  EXPECT_FALSE(build_orthonormal(Vec3(0, 0, 1), Vec3(0, 0, -2.5), recipe).has_value());
  // Just above the sin threshold still builds.
  EXPECT_TRUE(build_orthonormal(Vec3(1, 0, 0), Vec3(1, 2e-4, 0), recipe).has_value());
}

TEST(BuildOrthonormal, ZeroInputThrows) {
  const FrameRecipe recipe{Axis::kX, Axis::kY, SecondaryMode::kCross, false};
  EXPECT_THROW(build_orthonormal(Vec3::Zero(), Vec3(0, 1, 0), recipe), std::invalid_argument);
  EXPECT_THROW(build_orthonormal(Vec3(1, 0, 0), Vec3::Zero(), recipe), std::invalid_argument);
}

}  // namespace
}  // namespace motionkit
