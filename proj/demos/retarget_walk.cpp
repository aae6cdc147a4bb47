// Synthesizes a walk, retargets it onto the humanoid, and reports how closely
// replaying the recovered joint angles reproduces the source positions.

#include <motionkit/metrics.hpp>
#include <motionkit/retarget.hpp>
#include <motionkit/skeleton.hpp>

#include <cstdio>

int main() {
  using namespace motionkit;

  const SkeletonMotion walk = synthesize_test_motion(TestMotionKind::kWalk, 120);
  const JointTree& tree = canonical_tree();

  RetargetStats stats;
  const HumanoidMotion humanoid = retarget_sequence(tree, walk, kDefaultFlipLambda, &stats);
  std::printf("retargeted %d frames (%d degenerate fallbacks)\n", humanoid.frame_count(),
              stats.degenerate_fallbacks);

  const auto source = motion_positions(tree, walk);
  const auto replay = humanoid_fk(humanoid);
  const PositionErrors err = position_errors(replay, source);
  std::printf("round-trip reconstruction: %.3f mm mean per-joint error\n", err.mpjpe);

  const EvaluatedMotion eval = evaluate_for_metrics(humanoid);
  const GroundPenetration g = fp_fq_jq(eval.positions, *eval.feet);
  std::printf("ground contact: fp %.3f cm, fq %.4f, jq %.4f\n", g.fp, g.fq, g.jq);
  std::printf("smoothness: %.2f mm between adjacent frames\n",
              mean_adjacent_displacement(eval.positions));
  return 0;
}
