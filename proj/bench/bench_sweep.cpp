// Times the roll-torque sweep with the OpenMP cell loop against the serial
// reference loop and verifies both produce identical allocations.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <vector>

#include "fiberalloc/solvers.hpp"

#if defined(FIBERALLOC_HAVE_OPENMP)
#include <omp.h>
#endif

using namespace fiberalloc;

namespace {

double max_cell_difference(const std::vector<SweepCell>& a, const std::vector<SweepCell>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].ok != b[i].ok) return std::numeric_limits<double>::infinity();
    if (!a[i].ok) continue;
    worst = std::max(worst, (a[i].energy.u_star - b[i].energy.u_star).lpNorm<Eigen::Infinity>());
    worst = std::max(worst,
                     (a[i].promptness.u_star - b[i].promptness.u_star).lpNorm<Eigen::Infinity>());
    worst = std::max(worst, std::abs(a[i].j1_at_energy - b[i].j1_at_energy));
    worst = std::max(worst, std::abs(a[i].j2_at_promptness - b[i].j2_at_promptness));
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  const int samples = argc > 1 ? std::atoi(argv[1]) : 21;
  const ActuationSystem sys = build_hexarotor(0.5, 0.25, 1.0, 0.05);
  const double fz = hover_thrust(0.5);

  std::vector<Eigen::VectorXd> wrenches;
  for (int i = 0; i < samples; ++i) {
    wrenches.push_back(Eigen::Vector4d(1.0 * i / std::max(samples - 1, 1), 0.0, 0.0, fz));
  }
  const std::vector<Regime> regimes = {Regime::unidirectional(),
                                       Regime::bidirectional_box(5.0, 6)};

  SweepOptions serial_opts;
  serial_opts.parallel = false;
  SweepOptions parallel_opts;
  parallel_opts.parallel = true;

  const auto t0 = std::chrono::steady_clock::now();
  const auto serial = sweep(sys, wrenches, regimes, serial_opts);
  const auto t1 = std::chrono::steady_clock::now();
  const auto parallel = sweep(sys, wrenches, regimes, parallel_opts);
  const auto t2 = std::chrono::steady_clock::now();

  const double ts = std::chrono::duration<double>(t1 - t0).count();
  const double tp = std::chrono::duration<double>(t2 - t1).count();
  int threads = 1;
#if defined(FIBERALLOC_HAVE_OPENMP)
  threads = omp_get_max_threads();
#endif

  std::printf("cells:            %zu (%d wrenches x %zu regimes)\n", serial.size(), samples,
              regimes.size());
  std::printf("serial loop:      %.3f s\n", ts);
  std::printf("openmp loop:      %.3f s  (%d thread%s)\n", tp, threads, threads == 1 ? "" : "s");
  std::printf("speedup:          %.2fx\n", tp > 0 ? ts / tp : 0.0);
  const double diff = max_cell_difference(serial, parallel);
  std::printf("max difference:   %.3g  (%s)\n", diff,
              diff == 0.0 ? "identical" : "MISMATCH - schedules must not change results");
  return diff == 0.0 ? 0 : 1;
}
