#pragma once

#include <vector>

#include "fiberalloc/actuation.hpp"
#include "fiberalloc/fiber.hpp"

namespace fiberalloc {

// Two-actuator system a1 v1|v1| + a2 v2|v2| = w. Closed forms and grid
// search below are the ground truth the general solvers are checked against,
// so nothing here may call into the solver stack.
struct DualSystem {
  DualSystem(double a1, double a2, double c1, double c2, double w);
  double a1, a2, c1, c2, w;
};

// D(u) = a1^2 |u1| + a2^2 |u2|, the scalar Gramian of the 1x2 system.
double dual_d(const DualSystem& ds, double u1, double u2);
double dual_energy(const DualSystem& ds, double u1, double u2);
// -1/2 ln D; +inf at D = 0.
double dual_promptness(const DualSystem& ds, double u1, double u2);

// The 1x2 ActuationSystem carrying the same gains and weights.
ActuationSystem to_actuation_system(const DualSystem& ds);

struct DualPoint {
  double u1 = 0.0;
  double u2 = 0.0;
};

// Energy minimizer on the cooperative segment, from the sharing rule
// u1/u2 = (a1 c2 / (a2 c1))^2. w < 0 is mapped to the mirrored quadrant.
DualPoint cooperative_energy_optimum(const DualSystem& ds);

struct AntagonisticSample {
  double u1_mag = 0.0;  // t = |u1| along the ray u1 = -t
  double j1 = 0.0;      // c1 t^{3/2} + c2 (w/a2 + (a1/a2) t)^{3/2}
  double d = 0.0;       // (a1^2 + a1 a2) t + a2 w
};

// Samples the antagonistic ray (u1 <= 0, u2 >= 0) at n_samples uniform
// magnitudes in [0, t_max]. Both columns are strictly increasing in t.
std::vector<AntagonisticSample> antagonistic_profiles(const DualSystem& ds,
                                                      double t_max, int n_samples);

enum class DualObjective { Energy, Promptness };

struct BruteForceResult {
  double u1 = 0.0;
  double u2 = 0.0;
  double value = 0.0;  // J1 for Energy, -1/2 ln D for Promptness
  double d = 0.0;
};

// Exhaustive search over the regime-truncated fiber line at grid_n + 1
// uniformly spaced points (uniform in u1, which is arc-length uniform on a
// line). Accuracy is bounded by the grid pitch. Throws when the regime
// leaves no compact nonempty segment.
BruteForceResult brute_force_optimum(const DualSystem& ds, DualObjective objective,
                                     const Regime& regime, int grid_n);

}  // namespace fiberalloc
