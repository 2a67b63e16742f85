#include <exception>
#include <vector>

#include "fiberalloc/solvers.hpp"

namespace fiberalloc {

std::vector<SweepCell> sweep(const ActuationSystem& sys,
                             const std::vector<Eigen::VectorXd>& wrenches,
                             const std::vector<Regime>& regimes,
                             const SweepOptions& opts) {
  const int nw = static_cast<int>(wrenches.size());
  const int nr = static_cast<int>(regimes.size());
  std::vector<SweepCell> cells(static_cast<std::size_t>(nw) * nr);

  auto run_cell = [&](int idx) {
    SweepCell& cell = cells[idx];
    const int r = idx / nw;
    const int wi = idx % nw;
    cell.wrench = wrenches[wi];
    cell.regime_index = r;
    try {
      const FeasibleFiber fiber = fiber_of(sys, wrenches[wi], regimes[r]);
      cell.energy = min_energy(fiber, opts.solve);
      cell.promptness = max_promptness(fiber, opts.solve);
      cell.j1_at_energy = cell.energy.objective.j1;
      cell.j2_at_energy = cell.energy.objective.j2;
      cell.j1_at_promptness = cell.promptness.objective.j1;
      cell.j2_at_promptness = cell.promptness.objective.j2;
      if (opts.with_fronts) {
        ParetoOptions po;
        po.solve = opts.solve;
        po.parallel = false;  // the cell loop is the parallel level
        cell.front = pareto_front(fiber, opts.front_points, po);
        cell.has_front = true;
      }
      cell.ok = true;
    } catch (const std::exception& err) {
      cell.ok = false;
      cell.error = err.what();
    }
  };

  const int total = nw * nr;
#if defined(FIBERALLOC_HAVE_OPENMP)
  if (opts.parallel) {
#pragma omp parallel for schedule(static)
    for (int idx = 0; idx < total; ++idx) run_cell(idx);
  } else {
    for (int idx = 0; idx < total; ++idx) run_cell(idx);
  }
#else
  for (int idx = 0; idx < total; ++idx) run_cell(idx);
#endif
  return cells;
}

}  // namespace fiberalloc
