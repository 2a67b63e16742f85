#include "fiberalloc/dual_actuator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fiberalloc {

DualSystem::DualSystem(double a1_, double a2_, double c1_, double c2_, double w_)
    : a1(a1_), a2(a2_), c1(c1_), c2(c2_), w(w_) {
  if (a1 <= 0.0 || a2 <= 0.0) throw std::invalid_argument("DualSystem: gains must be positive");
  if (c1 <= 0.0 || c2 <= 0.0) throw std::invalid_argument("DualSystem: energy weights must be positive");
}

double dual_d(const DualSystem& ds, double u1, double u2) {
  return ds.a1 * ds.a1 * std::abs(u1) + ds.a2 * ds.a2 * std::abs(u2);
}

double dual_energy(const DualSystem& ds, double u1, double u2) {
  return ds.c1 * std::pow(std::abs(u1), 1.5) + ds.c2 * std::pow(std::abs(u2), 1.5);
}

double dual_promptness(const DualSystem& ds, double u1, double u2) {
  const double d = dual_d(ds, u1, u2);
  if (d <= 0.0) return std::numeric_limits<double>::infinity();
  return -0.5 * std::log(d);
}

ActuationSystem to_actuation_system(const DualSystem& ds) {
  Eigen::MatrixXd A(1, 2);
  A << ds.a1, ds.a2;
  Eigen::VectorXd c(2);
  c << ds.c1, ds.c2;
  return ActuationSystem(std::move(A), std::move(c));
}

DualPoint cooperative_energy_optimum(const DualSystem& ds) {
  if (ds.w == 0.0) return {0.0, 0.0};
  const double sgn = ds.w > 0.0 ? 1.0 : -1.0;
  const double w = std::abs(ds.w);
  const double r = std::pow(ds.a1 * ds.c2 / (ds.a2 * ds.c1), 2.0);
  const double u2 = w / (ds.a1 * r + ds.a2);
  return {sgn * r * u2, sgn * u2};
}

std::vector<AntagonisticSample> antagonistic_profiles(const DualSystem& ds,
                                                      double t_max, int n_samples) {
  if (t_max <= 0.0) throw std::invalid_argument("antagonistic_profiles: t_max must be positive");
  if (n_samples < 2) throw std::invalid_argument("antagonistic_profiles: need at least 2 samples");
  const double w = std::abs(ds.w);
  if (w == 0.0) throw std::invalid_argument("antagonistic_profiles: w must be nonzero");
  std::vector<AntagonisticSample> table(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const double t = t_max * static_cast<double>(i) / (n_samples - 1);
    AntagonisticSample& s = table[i];
    s.u1_mag = t;
    s.j1 = ds.c1 * std::pow(t, 1.5) + ds.c2 * std::pow(w / ds.a2 + (ds.a1 / ds.a2) * t, 1.5);
    s.d = (ds.a1 * ds.a1 + ds.a1 * ds.a2) * t + ds.a2 * w;
  }
  return table;
}

BruteForceResult brute_force_optimum(const DualSystem& ds, DualObjective objective,
                                     const Regime& regime, int grid_n) {
  if (grid_n < 1) throw std::invalid_argument("brute_force_optimum: grid_n must be >= 1");
  // Fiber line parametrized by t = u1, u2 = (w - a1 t)/a2. Intersect with the
  // regime to get the compact search interval [lo, hi].
  double lo, hi;
  if (regime.is_box()) {
    if (regime.bounds().size() != 2) {
      throw std::invalid_argument("brute_force_optimum: box bounds must have 2 entries");
    }
    const double b1 = regime.bounds()[0];
    const double b2 = regime.bounds()[1];
    lo = std::max(-b1, (ds.w - ds.a2 * b2) / ds.a1);
    hi = std::min(b1, (ds.w + ds.a2 * b2) / ds.a1);
  } else {
    // u1 >= 0 and u2 = (w - a1 t)/a2 >= 0
    lo = 0.0;
    hi = ds.w / ds.a1;
  }
  if (!(std::isfinite(lo) && std::isfinite(hi))) {
    throw std::invalid_argument("brute_force_optimum: unbounded search domain; supply box bounds");
  }
  if (lo > hi) {
    throw std::invalid_argument("brute_force_optimum: regime leaves the fiber empty");
  }

  BruteForceResult best;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= grid_n; ++i) {
    const double t = lo + (hi - lo) * static_cast<double>(i) / grid_n;
    const double u2 = (ds.w - ds.a1 * t) / ds.a2;
    const double val = objective == DualObjective::Energy ? dual_energy(ds, t, u2)
                                                          : dual_promptness(ds, t, u2);
    if (val < best_val) {
      best_val = val;
      best.u1 = t;
      best.u2 = u2;
    }
  }
  best.value = best_val;
  best.d = dual_d(ds, best.u1, best.u2);
  return best;
}

}  // namespace fiberalloc
