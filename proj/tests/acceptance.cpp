// End-to-end acceptance checks for the allocation library. Each check prints
// exactly one [PASS]/[FAIL] line with its pinned tolerance and the measured
// values; the binary exits nonzero when any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fiberalloc/config.hpp"
#include "fiberalloc/dual_actuator.hpp"
#include "fiberalloc/report.hpp"
#include "fiberalloc/solvers.hpp"

using namespace fiberalloc;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// every converged report produced below is re-certified independently at the end
struct Certificate {
  FeasibleFiber fiber;
  SolveReport report;
  bool energy = true;
};

std::vector<Certificate> g_certificates;

double now_seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::VectorXd vec4(double a, double b, double c, double d) {
  Eigen::VectorXd v(4);
  v << a, b, c, d;
  return v;
}

ActuationSystem hexarotor() { return build_hexarotor(0.5, 0.25, 1.0, 0.05); }

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome check_isotropic_hover() {
  const auto t0 = std::chrono::steady_clock::now();
  const ActuationSystem sys = hexarotor();
  const Eigen::VectorXd w = vec4(0.0, 0.0, 0.0, 4.905);
  const FeasibleFiber fiber = fiber_of(sys, w, Regime::unidirectional());
  const Eigen::VectorXd iso = Eigen::VectorXd::Constant(6, 4.905 / 6.0);

  const SolveReport en = min_energy(fiber);
  const SolveReport pr = max_promptness(fiber);
  const ParetoFront front = pareto_front(fiber, 15);
  const double elapsed = now_seconds(t0);

  g_certificates.push_back({fiber, en, true});
  g_certificates.push_back({fiber, pr, false});

  const double dev_en = (en.u_star - iso).lpNorm<Eigen::Infinity>();
  const double dev_pr = (pr.u_star - iso).lpNorm<Eigen::Infinity>();
  Outcome o;
  o.pass = en.converged && pr.converged && dev_en <= 1e-6 && dev_pr <= 1e-6 &&
           front.extent < 1e-8 && elapsed < 1.0;
  o.detail = "max dev " + fmt(std::max(dev_en, dev_pr)) + ", extent " + fmt(front.extent) +
             ", " + fmt(elapsed) + " s";
  return o;
}

Outcome check_dual_oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> gain(0.2, 5.0);
  std::uniform_real_distribution<double> task(0.1, 10.0);

  double worst_cf = 0.0, worst_grid = 0.0;
  bool all_ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    const DualSystem ds(gain(rng), gain(rng), gain(rng), gain(rng), task(rng));
    const FeasibleFiber fiber =
        fiber_of(to_actuation_system(ds), Eigen::VectorXd::Constant(1, ds.w),
                 Regime::unidirectional());
    const SolveReport r = min_energy(fiber);
    all_ok &= r.converged;
    g_certificates.push_back({fiber, r, true});

    const DualPoint cf = cooperative_energy_optimum(ds);
    const double dev_cf = std::max(std::abs(r.u_star[0] - cf.u1), std::abs(r.u_star[1] - cf.u2));
    worst_cf = std::max(worst_cf, dev_cf);

    const BruteForceResult bf =
        brute_force_optimum(ds, DualObjective::Energy, Regime::unidirectional(), 100000);
    const double pitch = (ds.w / ds.a1) / 100000.0;
    worst_grid = std::max(worst_grid, std::abs(r.u_star[0] - bf.u1) / pitch);
  }
  const double elapsed = now_seconds(t0);

  Outcome o;
  o.pass = all_ok && worst_cf <= 1e-6 && worst_grid <= 2.0 && elapsed < 30.0;
  o.detail = "closed-form dev " + fmt(worst_cf) + ", grid dev " + fmt(worst_grid) +
             " pitches, " + fmt(elapsed) + " s";
  return o;
}

Outcome check_antagonistic_conflict() {
  const DualSystem ds(1, 1, 1, 1, 1);
  const auto table = antagonistic_profiles(ds, 3.0, 31);

  bool monotone = true;
  for (std::size_t i = 1; i < table.size(); ++i) {
    monotone &= table[i].j1 > table[i - 1].j1;
    monotone &= table[i].d > table[i - 1].d;
  }

  const FeasibleFiber fiber =
      fiber_of(to_actuation_system(ds), Eigen::VectorXd::Constant(1, 1.0),
               Regime::bidirectional_box(20.0, 2));
  double worst_kappa = 0.0;
  for (const auto& s : table) {
    if (s.u1_mag == 0.0) continue;  // ray origin is a kink, not an interior point
    Eigen::VectorXd u(2);
    u << -s.u1_mag, 1.0 + s.u1_mag;
    const ConflictSample c = restricted_gradients(fiber, u);
    if (!c.kappa_defined) {
      worst_kappa = 2.0;
      break;
    }
    worst_kappa = std::max(worst_kappa, std::abs(c.kappa + 1.0));
  }

  Outcome o;
  o.pass = monotone && worst_kappa <= 1e-6;
  o.detail = std::string("profiles strictly increasing: ") + (monotone ? "yes" : "no") +
             ", max |kappa + 1| = " + fmt(worst_kappa);
  return o;
}

Outcome check_cauchy_binet() {
  const ActuationSystem sys = hexarotor();
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd u(6);
    for (int i = 0; i < 6; ++i) u[i] = dist(rng);
    const double direct = sys.gramian(u).determinant();
    const double cb = cauchy_binet_det(sys, u);
    worst = std::max(worst, std::abs(cb - direct) / std::max(1.0, std::abs(direct)));
  }
  Outcome o;
  o.pass = worst <= 1e-10;
  o.detail = "max rel dev " + fmt(worst) + " over 100 draws (tol 1e-10)";
  return o;
}

Outcome check_jacobian_gramian_identity() {
  const ActuationSystem sys = hexarotor();
  std::mt19937_64 rng(999);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd v(6);
    for (int i = 0; i < 6; ++i) v[i] = dist(rng);
    const Eigen::MatrixXd J = sys.jacobian(v);
    const Eigen::MatrixXd S4 = 4.0 * sys.gramian(speed_to_effort(v));
    worst = std::max(worst, (J * J.transpose() - S4).norm() / std::max(1e-300, S4.norm()));
  }
  Outcome o;
  o.pass = worst <= 1e-12;
  o.detail = "max rel dev " + fmt(worst) + " over 1000 draws (tol 1e-12)";
  return o;
}

Outcome check_gradients_against_finite_differences() {
  const ActuationSystem sys = hexarotor();
  std::mt19937_64 rng(555);
  std::uniform_real_distribution<double> mag(0.5, 3.0);
  std::bernoulli_distribution coin;
  const double step = 1e-6;

  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd u(6);
    for (int i = 0; i < 6; ++i) u[i] = (coin(rng) ? 1.0 : -1.0) * mag(rng);

    Eigen::VectorXd fd_energy(6), fd_prompt(6);
    for (int i = 0; i < 6; ++i) {
      Eigen::VectorXd up = u, um = u;
      up[i] += step;
      um[i] -= step;
      fd_energy[i] = (energy_u(sys, up) - energy_u(sys, um)) / (2.0 * step);
      fd_prompt[i] = (promptness_u(sys, up).value - promptness_u(sys, um).value) / (2.0 * step);
    }
    const double dev_en = (energy_grad_u(sys, u) - fd_energy).norm() /
                          std::max(1.0, fd_energy.norm());
    const double dev_pr = (promptness_grad_u(sys, u).grad - fd_prompt).norm() /
                          std::max(1.0, fd_prompt.norm());
    worst = std::max({worst, dev_en, dev_pr});
  }
  Outcome o;
  o.pass = worst < 1e-5;
  o.detail = "max rel dev " + fmt(worst) + " over 200 points (tol 1e-5)";
  return o;
}

Outcome check_nullspace_mixed_signs() {
  const ActuationSystem sys = hexarotor();
  const OrthantVerdict verdict = orthant_nullspace_intersection(sys);
  const Eigen::MatrixXd N = null_space_basis(sys);
  bool mixed = true;
  for (int j = 0; j < N.cols(); ++j) {
    mixed &= N.col(j).minCoeff() < 0.0 && N.col(j).maxCoeff() > 0.0;
  }
  Outcome o;
  o.pass = verdict.trivial && mixed;
  o.detail = std::string("kernel-orthant intersection trivial: ") +
             (verdict.trivial ? "yes" : "no") + ", basis vectors sign-mixed: " +
             (mixed ? "yes" : "no");
  return o;
}

Outcome check_sweep_regime_contrast() {
  const auto t0 = std::chrono::steady_clock::now();
  const ActuationSystem sys = hexarotor();

  std::vector<Eigen::VectorXd> wrenches;
  for (int k = 0; k <= 20; ++k) wrenches.push_back(vec4(0.05 * k, 0.0, 0.0, 4.905));
  const std::vector<Regime> regimes = {Regime::unidirectional(),
                                       Regime::bidirectional_box(5.0, 6)};
  SweepOptions opts;
  opts.solve.seed = 0;
  const std::vector<SweepCell> cells = sweep(sys, wrenches, regimes, opts);
  const double elapsed = now_seconds(t0);

  const int nw = static_cast<int>(wrenches.size());
  bool all_converged = true, interior_low_roll = true, box_no_worse = true;
  bool orderings = true, top_saturated = false;
  for (int r = 0; r < 2; ++r) {
    for (int k = 0; k < nw; ++k) {
      const SweepCell& c = cells[r * nw + k];
      if (!c.ok || !c.energy.converged || !c.promptness.converged) {
        all_converged = false;
        continue;
      }
      g_certificates.push_back({fiber_of(sys, c.wrench, regimes[r]), c.energy, true});
      g_certificates.push_back({fiber_of(sys, c.wrench, regimes[r]), c.promptness, false});

      orderings &= c.j1_at_promptness >= c.j1_at_energy;
      orderings &= c.j2_at_energy >= c.j2_at_promptness;
      if (r == 0 && 0.05 * k <= 0.5 + 1e-12) {
        interior_low_roll &= c.promptness.active_set.empty();
      }
      if (r == 1) {
        box_no_worse &= c.j2_at_promptness <= cells[k].j2_at_promptness;
        if (k == nw - 1) {
          for (int i = 0; i < 6; ++i) {
            top_saturated |= std::abs(c.promptness.u_star[i]) >= 5.0 - 1e-6;
          }
        }
      }
    }
  }

  Outcome o;
  o.pass = all_converged && interior_low_roll && box_no_worse && orderings &&
           top_saturated && elapsed < 60.0;
  std::ostringstream d;
  d << "42 cells, converged: " << (all_converged ? "all" : "NOT all")
    << ", low-roll interior: " << (interior_low_roll ? "yes" : "no")
    << ", box <= orthant: " << (box_no_worse ? "yes" : "no")
    << ", cross-orderings: " << (orderings ? "yes" : "no")
    << ", top-roll bound hit: " << (top_saturated ? "yes" : "no") << ", " << fmt(elapsed)
    << " s";
  o.detail = d.str();
  return o;
}

Outcome check_kkt_certification() {
  double worst = 0.0;
  int failed = 0;
  for (const Certificate& cert : g_certificates) {
    if (!cert.report.converged) continue;
    const double resid =
        cert.energy
            ? kkt_residual_energy(cert.fiber, cert.report.u_star, cert.report.multipliers,
                                  cert.report.bound_multipliers)
            : kkt_residual_promptness(cert.fiber, cert.report.u_star,
                                      cert.report.multipliers,
                                      cert.report.bound_multipliers);
    const double scaled = resid / cert.report.kkt_scale;
    worst = std::max(worst, scaled);
    if (scaled >= 1e-6) ++failed;
  }
  Outcome o;
  o.pass = !g_certificates.empty() && failed == 0;
  o.detail = std::to_string(g_certificates.size()) + " reports re-verified, max scaled residual " +
             fmt(worst) + " (tol 1e-6)";
  return o;
}

Outcome check_determinism() {
  const char* config_text = R"json({
    "vehicle": {"type": "hexarotor", "mass": 0.5, "radius": 0.25, "k_f": 1.0, "k_m": 0.05},
    "regimes": ["unidirectional", {"type": "bidirectional", "bound": 5.0}],
    "task": {"type": "sweep", "component": "tau_x", "min": 0.0, "max": 1.0, "step": 0.05},
    "solver": {"seed": 0}
  })json";
  const ExperimentConfig cfg = parse_config(config_text);

  const ResultBundle first = run_sweep_experiment(cfg);
  const ResultBundle second = run_sweep_experiment(cfg);

  const bool alloc_equal = allocations_csv(first) == allocations_csv(second);
  const bool costs_equal = costs_csv(first) == costs_csv(second);

  auto strip_timestamp = [](const std::string& text) {
    std::istringstream in(text);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
      if (line.find("\"timestamp\"") == std::string::npos) out << line << '\n';
    }
    return out.str();
  };
  const bool json_equal =
      strip_timestamp(bundle_to_json(first)) == strip_timestamp(bundle_to_json(second));

  Outcome o;
  o.pass = first.all_ok() && alloc_equal && costs_equal && json_equal;
  o.detail = std::string("allocations csv: ") + (alloc_equal ? "identical" : "DIFFER") +
             ", costs csv: " + (costs_equal ? "identical" : "DIFFER") +
             ", bundle json (timestamp excluded): " + (json_equal ? "identical" : "DIFFER");
  return o;
}

}  // namespace

int main() {
  struct Check {
    const char* name;
    Outcome (*fn)();
  };
  const Check checks[] = {
      {"isotropic hover collapses to the uniform allocation (1e-6, extent < 1e-8, < 1 s)",
       check_isotropic_hover},
      {"general energy solver matches dual-actuator closed forms (100 draws, 1e-6, < 30 s)",
       check_dual_oracle_equivalence},
      {"antagonistic ray: costs strictly increase and kappa = -1 (1e-6)",
       check_antagonistic_conflict},
      {"cauchy-binet expansion equals det S (100 draws, 1e-10)", check_cauchy_binet},
      {"jacobian identity J J^T = 4 S (1000 draws, 1e-12)", check_jacobian_gramian_identity},
      {"objective gradients match finite differences (200 points, 1e-5)",
       check_gradients_against_finite_differences},
      {"hexarotor kernel avoids the orthant and mixes signs", check_nullspace_mixed_signs},
      {"roll sweep: interior low-roll optima, box regime dominates, bounds saturate (< 60 s)",
       check_sweep_regime_contrast},
      {"independent KKT certification of every converged report (1e-6 scaled)",
       check_kkt_certification},
      {"repeated runs are byte-identical (timestamp excluded)", check_determinism},
  };

  int failures = 0;
  int index = 0;
  for (const Check& c : checks) {
    ++index;
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failures;
    std::printf("[%s] %2d. %s\n        %s\n", o.pass ? "PASS" : "FAIL", index, c.name,
                o.detail.c_str());
  }
  std::printf("%d/10 acceptance checks passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
