#include "motionkit/control.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace motionkit {
namespace {

VecX make_vec(std::initializer_list<double> values) {
  VecX v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (const double x : values) v[i++] = x;
  return v;
}

// --- PD torque --------------------------------------------------------------

TEST(PdTorque, EquilibriumGivesZeroTorque) {
  const PDGains gains{make_vec({300.0, 50.0}), make_vec({30.0, 5.0})};
  const VecX u = make_vec({0.4, -0.2});
  const VecX tau = pd_torque(gains, u, u, make_vec({0.0, 0.0}));
  EXPECT_DOUBLE_EQ(tau[0], 0.0);
  EXPECT_DOUBLE_EQ(tau[1], 0.0);
}

TEST(PdTorque, UnitCase) {
  const PDGains gains{make_vec({1.0}), make_vec({0.0})};
  const VecX tau = pd_torque(gains, make_vec({1.0}), make_vec({0.0}), make_vec({0.0}));
  EXPECT_DOUBLE_EQ(tau[0], 1.0);
}

TEST(PdTorque, HandWorkedExample) {
  const PDGains gains{make_vec({300.0}), make_vec({30.0})};
  const VecX tau = pd_torque(gains, make_vec({0.5}), make_vec({0.2}), make_vec({1.0}));
  EXPECT_NEAR(tau[0], 60.0, 1e-12);
}

TEST(PdTorque, LinearInErrorAndVelocitySeparately) {
  const PDGains gains{make_vec({120.0, 80.0}), make_vec({12.0, 8.0})};
  const VecX q = make_vec({0.1, -0.3});
  const VecX u1 = make_vec({0.5, 0.2});
  const VecX zero = make_vec({0.0, 0.0});

  // Doubling the error doubles the spring term.
  const VecX t1 = pd_torque(gains, u1, q, zero);
  const VecX u2 = q + 2.0 * (u1 - q);
  const VecX t2 = pd_torque(gains, u2, q, zero);
  EXPECT_LT((t2 - 2.0 * t1).norm(), 1e-12);

  // Velocity contributes additively.
  const VecX qdot = make_vec({0.7, -0.4});
  const VecX with_vel = pd_torque(gains, u1, q, qdot);
  EXPECT_LT(((with_vel - t1) + gains.kd.cwiseProduct(qdot) - zero).norm(), 1e-12);
}

TEST(PdTorque, RejectsBadShapesAndGains) {
  const PDGains gains{make_vec({1.0, 1.0}), make_vec({0.0, 0.0})};
  EXPECT_THROW(pd_torque(gains, make_vec({0.0}), make_vec({0.0, 0.0}), make_vec({0.0, 0.0})),
               std::invalid_argument);
  EXPECT_THROW(pd_torque(PDGains{make_vec({0.0}), make_vec({0.0})}, make_vec({0.0}),
                         make_vec({0.0}), make_vec({0.0})),
               std::invalid_argument);
  EXPECT_THROW(pd_torque(PDGains{make_vec({1.0}), make_vec({-1.0})}, make_vec({0.0}),
                         make_vec({0.0}), make_vec({0.0})),
               std::invalid_argument);
}

// --- residual force ---------------------------------------------------------

TEST(ResidualForce, ScalesWeightsAndStaysBounded) {
  EXPECT_DOUBLE_EQ(residual_force(make_vec({0.0, 0.0}), 220.0).norm(), 0.0);
  EXPECT_DOUBLE_EQ(residual_force(make_vec({1.0}), 220.0)[0], 220.0);
  EXPECT_DOUBLE_EQ(residual_force(make_vec({0.5}), 100.0)[0], 50.0);

  const VecX eta = residual_force(make_vec({0.25, 0.9, 0.01, 1.0}), 73.5);
  EXPECT_LE(eta.cwiseAbs().maxCoeff(), 73.5);
}

TEST(ResidualForce, RejectsOutOfRangeInputs) {
  EXPECT_THROW(residual_force(make_vec({1.2}), 10.0), std::invalid_argument);
  EXPECT_THROW(residual_force(make_vec({-0.1}), 10.0), std::invalid_argument);
  EXPECT_THROW(residual_force(make_vec({0.5}), -1.0), std::invalid_argument);
}

// --- curriculum -------------------------------------------------------------

TEST(Curriculum, ExactValuesAtKeyIterations) {
  const CurriculumParams params;  // defaults: 220 / 100 / 1300 / 0.1
  EXPECT_EQ(curriculum_scale(0, params), 220.0);
  EXPECT_EQ(curriculum_scale(100, params), 220.0);
  EXPECT_EQ(curriculum_scale(101, params), 219.9);
  EXPECT_EQ(curriculum_scale(700, params), 160.0);
  EXPECT_EQ(curriculum_scale(1300, params), 100.0);
  EXPECT_EQ(curriculum_scale(1500, params), 100.0);
}

TEST(Curriculum, NonIncreasingContinuousAndFlatOutside) {
  const CurriculumParams params;
  double prev = curriculum_scale(0, params);
  for (long i = 1; i <= 1600; ++i) {
    const double cur = curriculum_scale(i, params);
    EXPECT_LE(cur, prev) << "iteration " << i;
    EXPECT_LE(prev - cur, params.rate + 1e-12) << "jump at " << i;  // no discontinuity
    prev = cur;
  }
  EXPECT_EQ(curriculum_scale(0, params), curriculum_scale(100, params));
  EXPECT_EQ(curriculum_scale(1300, params), curriculum_scale(100000, params));
}

TEST(Curriculum, ValidatesParameters) {
  CurriculumParams bad;
  bad.i_start = 200;
  bad.i_end = 100;
  EXPECT_THROW(curriculum_scale(0, bad), std::invalid_argument);
  bad = CurriculumParams{};
  bad.rate = -0.1;
  EXPECT_THROW(curriculum_scale(0, bad), std::invalid_argument);
  bad = CurriculumParams{};
  bad.rate = 1.0;  // 220 - 1.0*1200 < 0
  EXPECT_THROW(curriculum_scale(0, bad), std::invalid_argument);
  EXPECT_THROW(curriculum_scale(-1, CurriculumParams{}), std::invalid_argument);
}

// --- feature extraction -----------------------------------------------------

PoseFeatureBlocks small_blocks(std::initializer_list<double> q, std::initializer_list<double> v,
                               std::vector<Vec3> j, std::vector<Vec3> g) {
  PoseFeatureBlocks b;
  b.q = make_vec(q);
  b.v = make_vec(v);
  b.j = std::move(j);
  b.g = std::move(g);
  return b;
}

TEST(ExtractFeatures, HandWorkedSmallFixture) {
  const PoseFeatureBlocks current =
      small_blocks({0.1, 0.2}, {1.0, 2.0}, {Vec3(1, 2, 3)}, {Vec3(4, 5, 6)});
  const PoseFeatureBlocks ref1 =
      small_blocks({0.3, 0.5}, {0.0, 1.0}, {Vec3(2, 2, 2)}, {Vec3(4, 4, 4)});
  const PoseFeatureBlocks ref2 =
      small_blocks({-0.1, 0.0}, {3.0, 3.0}, {Vec3(0, 0, 0)}, {Vec3(1, 1, 1)});

  const VecX f = extract_features(current, ref1, ref2);
  const std::vector<double> expected = {
      0.1,  0.2,              // q
      1.0,  2.0,              // v
      1.0,  2.0,  3.0,        // j
      4.0,  5.0,  6.0,        // g
      0.2,  0.3,              // ref1 dq
      1.0,  0.0,  -1.0,       // ref1 dj
      0.0,  -1.0, -2.0,       // ref1 dg
      -1.0, -1.0,             // ref1 dv
      -0.2, -0.2,             // ref2 dq
      -1.0, -2.0, -3.0,       // ref2 dj
      -3.0, -4.0, -5.0,       // ref2 dg
      2.0,  1.0,              // ref2 dv
  };
  ASSERT_EQ(f.size(), static_cast<Eigen::Index>(expected.size()));
  for (size_t i = 0; i < expected.size(); ++i) {
    EXPECT_NEAR(f[static_cast<Eigen::Index>(i)], expected[i], 1e-12) << "entry " << i;
  }
}

TEST(ExtractFeatures, IdenticalReferencesZeroTheDifferenceBlocks) {
  const PoseFeatureBlocks b =
      small_blocks({0.4, -0.7, 0.1}, {1.0, 0.5, -0.5}, {Vec3(1, 0, 0), Vec3(0, 1, 0)},
                   {Vec3(0, 0, 1), Vec3(1, 1, 1)});
  const VecX f = extract_features(b, b, b);
  const Eigen::Index lead = 2 * b.q.size() + 6 * static_cast<Eigen::Index>(b.j.size());
  for (Eigen::Index i = lead; i < f.size(); ++i) {
    EXPECT_DOUBLE_EQ(f[i], 0.0) << "entry " << i;
  }
}

TEST(ExtractFeatures, ConsistentJointPermutationPermutesPointBlocks) {
  const std::vector<Vec3> j = {Vec3(1, 0, 0), Vec3(0, 2, 0), Vec3(0, 0, 3)};
  const std::vector<Vec3> g = {Vec3(4, 0, 0), Vec3(0, 5, 0), Vec3(0, 0, 6)};
  const PoseFeatureBlocks a = small_blocks({0.1}, {0.2}, j, g);

  const std::array<int, 3> perm = {2, 0, 1};
  std::vector<Vec3> jp(3), gp(3);
  for (int i = 0; i < 3; ++i) {
    jp[i] = j[perm[i]];
    gp[i] = g[perm[i]];
  }
  const PoseFeatureBlocks b = small_blocks({0.1}, {0.2}, jp, gp);

  const VecX fa = extract_features(a, a, a);
  const VecX fb = extract_features(b, b, b);
  // q and v blocks are untouched; each 3-vector inside j and g moves by perm.
  EXPECT_EQ(fb.segment(0, 2), fa.segment(0, 2));
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(fb.segment(2 + 3 * i, 3), fa.segment(2 + 3 * perm[i], 3));        // j block
    EXPECT_EQ(fb.segment(11 + 3 * i, 3), fa.segment(11 + 3 * perm[i], 3));      // g block
  }
}

TEST(ExtractFeatures, RejectsMismatchedShapes) {
  const PoseFeatureBlocks a = small_blocks({0.1, 0.2}, {0.0, 0.0}, {Vec3::Zero()}, {Vec3::Zero()});
  PoseFeatureBlocks bad = a;
  bad.q = make_vec({0.1});
  EXPECT_THROW(extract_features(a, bad, a), std::invalid_argument);
  bad = a;
  bad.j.push_back(Vec3::Zero());
  EXPECT_THROW(extract_features(a, a, bad), std::invalid_argument);
  bad = a;
  bad.v = make_vec({0.0});
  EXPECT_THROW(extract_features(bad, bad, bad), std::invalid_argument);
}

TEST(Features, CanonicalMotionYieldsConstant648Dimensions) {
  const SkeletonMotion walk = synthesize_test_motion(TestMotionKind::kWalk, 8, 5);
  const HumanoidMotion motion = retarget_sequence(canonical_tree(), walk);
  for (int t = 0; t + 2 < motion.frame_count(); ++t) {
    EXPECT_EQ(features_at(motion, t).size(), 648);
  }
  EXPECT_THROW(features_at(motion, -1), std::invalid_argument);
  EXPECT_THROW(features_at(motion, motion.frame_count() - 2), std::invalid_argument);
}

TEST(Features, StaticMotionZeroesVelocitiesAndLookaheads) {
  const SkeletonMotion still = synthesize_test_motion(TestMotionKind::kStatic, 5, 3);
  const HumanoidMotion motion = retarget_sequence(canonical_tree(), still);
  const VecX f = features_at(motion, 0);
  ASSERT_EQ(f.size(), 648);
  for (Eigen::Index i = 48; i < 96; ++i) {
    EXPECT_DOUBLE_EQ(f[i], 0.0) << "velocity entry " << i;  // v block
  }
  for (Eigen::Index i = 216; i < 648; ++i) {
    EXPECT_DOUBLE_EQ(f[i], 0.0) << "lookahead entry " << i;  // both reference blocks
  }
}

TEST(HeadLocalPositions, AnchoredAndYawInvariant) {
  const SkeletonMotion walk = synthesize_test_motion(TestMotionKind::kWalk, 4, 7);
  const HumanoidMotion motion = retarget_sequence(canonical_tree(), walk);
  const auto positions = humanoid_fk(motion);
  const double yaw = motion.frames[0].root_euler.ez;

  const std::vector<Vec3> local = head_local_positions(positions[0], yaw);
  EXPECT_LT(local[kLowerNeck].norm(), 1e-15);  // the anchor maps to the origin

  // Spinning the whole pose about z (and the yaw with it) changes nothing.
  const double spin = 0.7;
  const Mat3 rz = euler_to_matrix(EulerZYX{spin, 0.0, 0.0});
  std::vector<Vec3> spun;
  for (const Vec3& p : positions[0]) spun.push_back(rz * p + Vec3(3.0, -2.0, 1.0));
  const std::vector<Vec3> local2 = head_local_positions(spun, yaw + spin);
  for (int j = 0; j < kCanonicalJointCount; ++j) {
    EXPECT_LT((local2[j] - local[j]).norm(), 1e-12) << "joint " << j;
  }

  EXPECT_THROW(head_local_positions(std::vector<Vec3>(3), 0.0), std::invalid_argument);
}

// --- PD joint simulation ----------------------------------------------------

TEST(SimulatePdJoint, EquilibriumStaysPut) {
  const PDJointTrajectory traj = simulate_pd_joint(300.0, 40.0, 0.5, 0.5, 0.0, 1.0, 1e-3, 100);
  for (const double q : traj.q) EXPECT_DOUBLE_EQ(q, 0.5);
  for (const double v : traj.qdot) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(SimulatePdJoint, OverdampedConvergesWithoutOvershoot) {
  // kd^2 = 1600 >= 4*kp*inertia = 1200: overdamped regime.
  const double u = 0.25;
  const PDJointTrajectory traj = simulate_pd_joint(300.0, 40.0, u, u - 1.0, 0.0, 1.0, 1e-3, 2000);

  int converged_at = -1;
  for (size_t s = 0; s < traj.q.size(); ++s) {
    EXPECT_LE(traj.q[s], u + 1e-9) << "overshoot at step " << s;
    if (converged_at < 0 && std::abs(traj.q[s] - u) < 1e-3) {
      converged_at = static_cast<int>(s);
    }
    if (s > 0) {
      EXPECT_GE(traj.q[s], traj.q[s - 1] - 1e-15);  // monotone approach
    }
  }
  ASSERT_GE(converged_at, 0);
  EXPECT_LE(converged_at, 2000);
  EXPECT_LT(std::abs(traj.q.back() - u), 1e-3);
}

TEST(SimulatePdJoint, UndampedConservesEnergyWithinOnePercent) {
  const double kp = 300.0, inertia = 1.0, u = 0.0, q0 = 1.0;
  const PDJointTrajectory traj = simulate_pd_joint(kp, 0.0, u, q0, 0.0, inertia, 1e-3, 1000);
  const double e0 = 0.5 * kp * (q0 - u) * (q0 - u);
  for (size_t s = 0; s < traj.q.size(); ++s) {
    const double e = 0.5 * inertia * traj.qdot[s] * traj.qdot[s] +
                     0.5 * kp * (traj.q[s] - u) * (traj.q[s] - u);
    EXPECT_LT(std::abs(e - e0) / e0, 0.01) << "step " << s;
  }
}

TEST(SimulatePdJoint, ValidatesArguments) {
  EXPECT_THROW(simulate_pd_joint(0.0, 1.0, 0, 0, 0, 1.0, 1e-3, 10), std::invalid_argument);
  EXPECT_THROW(simulate_pd_joint(1.0, -1.0, 0, 0, 0, 1.0, 1e-3, 10), std::invalid_argument);
  EXPECT_THROW(simulate_pd_joint(1.0, 1.0, 0, 0, 0, 0.0, 1e-3, 10), std::invalid_argument);
  EXPECT_THROW(simulate_pd_joint(1.0, 1.0, 0, 0, 0, 1.0, 0.0, 10), std::invalid_argument);
  EXPECT_THROW(simulate_pd_joint(1.0, 1.0, 0, 0, 0, 1.0, 1e-3, -1), std::invalid_argument);
}

}  // namespace
}  // namespace motionkit
