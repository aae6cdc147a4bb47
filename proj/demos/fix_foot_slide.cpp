// Plants the feet of a noisy stance: jitters the root of a static motion so
// the (fully planted) feet slide, then optimizes root translations and foot
// offsets against the contact-consistency loss.

#include <motionkit/correct.hpp>
#include <motionkit/skeleton.hpp>

#include <cstdio>
#include <random>

int main() {
  using namespace motionkit;

  SkeletonMotion stance = synthesize_test_motion(TestMotionKind::kStatic, 60, 1);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> noise(-0.01, 0.01);
  for (int t = 1; t + 1 < stance.frame_count(); ++t) {
    stance.frames[t].root += Vec3(noise(rng), noise(rng), noise(rng));
  }
  stance.positions.clear();
  stance.contacts.assign(stance.frame_count(), {1.0, 1.0, 1.0, 1.0});

  CorrectionConfig config;  // root + feet, beta 0.1, 200 backtracking steps
  const CorrectionResult result = optimize(canonical_tree(), stance, stance.contacts, config);

  std::printf("contact loss: %.5f -> %.5f in %zu accepted steps\n", result.initial_contact_loss,
              result.final_contact_loss, result.trace.size() - 1);
  std::printf("objective trace (every 10th step):\n");
  for (size_t i = 0; i < result.trace.size(); i += 10) {
    std::printf("  step %3zu: %.6f\n", i, result.trace[i]);
  }
  const int last = stance.frame_count() - 1;
  std::printf("endpoints pinned: frame 0 moved %.1e m, frame %d moved %.1e m\n",
              (result.motion.frames[0].root - stance.frames[0].root).norm(), last,
              (result.motion.frames[last].root - stance.frames[last].root).norm());
  return 0;
}
