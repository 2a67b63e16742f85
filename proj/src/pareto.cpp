#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fiberalloc/solvers.hpp"
#include "solver_core.hpp"

namespace fiberalloc {

namespace {

using detail::Kind;
using detail::PatternOutcome;

struct CapResult {
  ParetoPoint pt;
  bool ok = false;
};

}  // namespace

ParetoFront pareto_front(const FeasibleFiber& fiber, int n_points, const ParetoOptions& opts) {
  if (n_points < 2) throw std::invalid_argument("pareto_front: need at least two points");

  ParetoFront pf;
  pf.energy_end = min_energy(fiber, opts.solve);
  pf.promptness_end = max_promptness(fiber, opts.solve);
  pf.complete = pf.energy_end.converged && pf.promptness_end.converged;
  if (pf.energy_end.u_star.size() == 0 || pf.promptness_end.u_star.size() == 0) {
    pf.complete = false;
    return pf;
  }

  const double j1_lo = pf.energy_end.objective.j1;
  const double j1_hi = pf.promptness_end.objective.j1;

  ParetoPoint p_en{j1_lo, pf.energy_end.objective.j2, pf.energy_end.u_star,
                   j1_lo, pf.energy_end.kkt_residual, pf.energy_end.converged};
  ParetoPoint p_pr{j1_hi, pf.promptness_end.objective.j2, pf.promptness_end.u_star,
                   j1_hi, pf.promptness_end.kkt_residual, pf.promptness_end.converged};

  if (std::abs(j1_hi - j1_lo) <= 1e-9 * (1.0 + std::abs(j1_lo))) {
    pf.points.push_back(p_en);  // optima coincide: the front degenerates to a point
    pf.extent = 0.0;
    return pf;
  }

  const Eigen::VectorXd z_en = fiber.coords_of(p_en.u);
  const Eigen::VectorXd z_pr = fiber.coords_of(p_pr.u);

  std::vector<std::pair<Eigen::VectorXi, Eigen::VectorXd>> pats;
  auto add_pat = [&pats](const Eigen::VectorXi& s, const Eigen::VectorXd& z) {
    for (const auto& [p, zz] : pats) {
      if ((p.array() == s.array()).all()) return;
    }
    pats.emplace_back(s, z);
  };
  if (!fiber.regime().is_box()) {
    add_pat(Eigen::VectorXi::Ones(fiber.system().actuator_count()),
            fiber.coords_of(fiber.interior_point()));
  } else {
    add_pat(detail::pattern_of(p_en.u), z_en);
    add_pat(detail::pattern_of(p_pr.u), z_pr);
    for (const auto& [s, z] : detail::harvest_patterns(
             fiber, detail::seed_points(fiber, opts.solve.seed, opts.solve.random_seeds))) {
      add_pat(s, z);
    }
  }

  const int interior = n_points - 2;
  std::vector<CapResult> res(std::max(interior, 0));

  auto run_cap = [&](int t) {
    try {
      const double eps = j1_lo + (t + 1) * (j1_hi - j1_lo) / (n_points - 1);
      const double alpha = (eps - j1_lo) / (j1_hi - j1_lo);
      const Eigen::VectorXd z_blend = (1.0 - alpha) * z_en + alpha * z_pr;

      const PatternOutcome* best = nullptr;
      std::vector<PatternOutcome> outs;
      outs.reserve(pats.size() + 1);
      if (fiber.regime().is_box()) {
        outs.push_back(detail::solve_pattern(
            fiber, Kind::Promptness, detail::pattern_of(fiber.point_at(z_blend)), eps, z_blend));
      }
      for (const auto& [s, z] : pats) {
        outs.push_back(detail::solve_pattern(fiber, Kind::Promptness, s, eps, z));
      }
      for (const auto& o : outs) {
        if (!o.usable || !std::isfinite(o.value)) continue;
        if (!best || o.value < best->value) best = &o;
      }
      if (!best) return;

      ParetoPoint pt;
      pt.u = best->u;
      pt.j1 = energy_u(fiber.system(), best->u);
      pt.j2 = best->value;
      pt.epsilon = eps;
      pt.kkt_residual = detail::kkt_residual(fiber, Kind::Promptness, best->u, best->lambda,
                                             best->mu_regime, best->mu_cap, eps);
      pt.converged = best->converged &&
                     pt.kkt_residual < opts.solve.kkt_tol * detail::kkt_scale_of(fiber);
      res[t] = CapResult{pt, true};
    } catch (const std::exception&) {
      // leave res[t].ok false; the front is reported incomplete
    }
  };

#if defined(FIBERALLOC_HAVE_OPENMP)
  if (opts.parallel) {
#pragma omp parallel for schedule(static)
    for (int t = 0; t < interior; ++t) run_cap(t);
  } else {
    for (int t = 0; t < interior; ++t) run_cap(t);
  }
#else
  for (int t = 0; t < interior; ++t) run_cap(t);
#endif

  std::vector<ParetoPoint> all;
  all.push_back(p_en);
  for (int t = 0; t < interior; ++t) {
    if (res[t].ok) {
      all.push_back(res[t].pt);
    } else {
      pf.complete = false;
    }
  }
  all.push_back(p_pr);
  std::stable_sort(all.begin(), all.end(),
                   [](const ParetoPoint& a, const ParetoPoint& b) { return a.j1 < b.j1; });

  // collapse near-equal energies keeping the better promptness
  std::vector<ParetoPoint> dedup;
  for (const auto& p : all) {
    if (!dedup.empty() && p.j1 <= dedup.back().j1 + 1e-9 * (1.0 + std::abs(dedup.back().j1))) {
      if (p.j2 < dedup.back().j2) dedup.back() = p;
    } else {
      dedup.push_back(p);
    }
  }
  // drop dominated points so j2 strictly descends as j1 ascends
  for (const auto& p : dedup) {
    if (pf.points.empty() ||
        p.j2 < pf.points.back().j2 - 1e-12 * (1.0 + std::abs(pf.points.back().j2))) {
      pf.points.push_back(p);
    }
  }

  pf.extent = 0.0;
  for (std::size_t i = 1; i < pf.points.size(); ++i) {
    pf.extent += std::hypot(pf.points[i].j1 - pf.points[i - 1].j1,
                            pf.points[i].j2 - pf.points[i - 1].j2);
  }
  return pf;
}

}  // namespace fiberalloc
