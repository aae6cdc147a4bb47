// Drives a single joint toward a target with the PD torque law and prints the
// residual-force curriculum that would accompany it during training.

#include <motionkit/control.hpp>

#include <cstdio>

int main() {
  using namespace motionkit;

  const double kp = 300.0, kd = 40.0, inertia = 1.0, dt = 1e-3;
  const double target = 0.5;
  const PDJointTrajectory traj = simulate_pd_joint(kp, kd, target, 0.0, 0.0, inertia, dt, 1500);
  std::printf("PD joint step response (kp %.0f, kd %.0f, dt %g):\n", kp, kd, dt);
  for (int t = 0; t <= 1500; t += 250) {
    std::printf("  t=%.3fs  q=%.5f  qdot=%+.5f\n", t * dt, traj.q[t], traj.qdot[t]);
  }

  const CurriculumParams schedule;  // 220 units, decaying 0.1/iter from 100 to 1300
  std::printf("\nresidual force scale over training:\n");
  for (long i : {0L, 100L, 400L, 700L, 1000L, 1300L, 1600L}) {
    std::printf("  iter %4ld: s_r = %.1f\n", i, curriculum_scale(i, schedule));
  }

  PDGains gains{VecX::Constant(2, kp), VecX::Constant(2, kd)};
  VecX q(2), u(2), qdot(2);
  q << 0.1, -0.2;
  u << 0.5, 0.0;
  qdot << 0.0, 0.3;
  const VecX tau = pd_torque(gains, u, q, qdot);
  std::printf("\nvector PD torque on two joints: [%.1f, %.1f]\n", tau[0], tau[1]);
  return 0;
}
