// fiberalloc: energy/promptness trade-off toolkit for overactuated multirotors.
// Subcommands: solve, pareto, sweep, dual, check. Exit codes: 0 success,
// 1 solver failure, 2 config/usage error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fiberalloc/config.hpp"
#include "fiberalloc/report.hpp"
#include "json.hpp"

namespace {

using namespace fiberalloc;

struct GlobalArgs {
  std::string config_path;
  std::string out_dir;
  std::string format;  // "", "csv", "json"
  long long seed = -1;  // -1 = use config
  bool quiet = false;
};

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.8g", x);
  return buf;
}

std::string vec_str(const Eigen::VectorXd& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += num(v[i]);
  }
  return out + "]";
}

ExperimentConfig load_required_config(const GlobalArgs& g) {
  if (g.config_path.empty()) {
    throw ConfigError({"--config PATH is required for this subcommand"});
  }
  ExperimentConfig cfg = load_config(g.config_path);
  if (g.seed >= 0) cfg.solver.seed = static_cast<std::uint64_t>(g.seed);
  if (g.format == "csv") {
    cfg.output.csv = true;
    cfg.output.json = false;
  } else if (g.format == "json") {
    cfg.output.csv = false;
    cfg.output.json = true;
  }
  return cfg;
}

std::string resolve_out_dir(const GlobalArgs& g, const ExperimentConfig& cfg) {
  if (!g.out_dir.empty()) return g.out_dir;
  if (const char* env = std::getenv("FIBERALLOC_OUT_DIR"); env && *env) return env;
  return cfg.output.directory;
}

Eigen::VectorXd single_wrench(const ExperimentConfig& cfg) {
  if (cfg.task.type == TaskSpec::Type::Sweep) {
    throw ConfigError({"task: this subcommand needs a single wrench, not a sweep"});
  }
  if (cfg.task.wrenches.size() != 1) {
    throw ConfigError({"task: this subcommand needs exactly one wrench"});
  }
  return cfg.task.wrenches[0];
}

std::string kappa_str(const FeasibleFiber& fiber, const Eigen::VectorXd& u) {
  try {
    const ConflictSample cs = restricted_gradients(fiber, u);
    return cs.kappa_defined ? num(cs.kappa) : "undefined (one restricted gradient vanishes)";
  } catch (const std::exception& e) {
    return std::string("undefined (") + e.what() + ")";
  }
}

void print_report(const std::string& tag, const SolveReport& r) {
  std::cout << "  " << tag << (r.converged ? "  [converged]" : "  [NOT CONVERGED]") << "\n"
            << "    u    = " << vec_str(r.u_star) << "\n"
            << "    J1   = " << num(r.objective.j1) << "   J2 = " << num(r.objective.j2) << "\n"
            << "    kkt  = " << num(r.kkt_residual) << " (scale " << num(r.kkt_scale) << ")"
            << "   active bounds: " << (r.active_set.empty() ? "none" : "") ;
  for (std::size_t i = 0; i < r.active_set.size(); ++i) {
    std::cout << (i ? "," : "") << r.active_set[i];
  }
  std::cout << "\n";
  if (!r.message.empty()) std::cout << "    note: " << r.message << "\n";
}

int run_solve(const GlobalArgs& g) {
  const ExperimentConfig cfg = load_required_config(g);
  const ActuationSystem sys = cfg.build_system();
  const auto regimes = cfg.build_regimes(sys.actuator_count());
  const Eigen::VectorXd w = single_wrench(cfg);
  SolveOptions opts;
  opts.seed = cfg.solver.seed;
  opts.random_seeds = cfg.solver.random_seeds;
  opts.kkt_tol = cfg.solver.kkt_tol;

  int rc = 0;
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t r = 0; r < regimes.size(); ++r) {
    const std::string name = cfg.regimes[r].name();
    const FeasibleFiber fiber = fiber_of(sys, w, regimes[r]);
    if (fiber.empty()) {
      std::cout << "regime " << name << ": infeasible wrench " << vec_str(w)
                << " (best achievable bound violation " << num(fiber.infeasibility()) << ")\n";
      rc = 1;
      continue;
    }
    const SolveReport en = min_energy(fiber, opts);
    const SolveReport pr = max_promptness(fiber, opts);
    if (!g.quiet) {
      std::cout << "regime " << name << ", w = " << vec_str(w) << "\n";
      print_report("energy optimum", en);
      std::cout << "    kappa = " << kappa_str(fiber, en.u_star) << "\n";
      print_report("promptness optimum", pr);
      std::cout << "    kappa = " << kappa_str(fiber, pr.u_star) << "\n";
    }
    if (!en.converged || !pr.converged) rc = 1;
    nlohmann::json jr;
    jr["regime"] = name;
    jr["energy_u"] = std::vector<double>(en.u_star.data(), en.u_star.data() + en.u_star.size());
    jr["promptness_u"] = std::vector<double>(pr.u_star.data(), pr.u_star.data() + pr.u_star.size());
    jr["j1_energy"] = en.objective.j1;
    jr["j2_promptness"] = pr.objective.j2;
    jr["converged"] = en.converged && pr.converged;
    out.push_back(jr);
  }
  if (!g.out_dir.empty()) {
    std::filesystem::create_directories(g.out_dir);
    const std::string path = (std::filesystem::path(g.out_dir) / "solve.json").string();
    std::ofstream f(path, std::ios::binary);
    f << out.dump(2) << "\n";
    if (!g.quiet) std::cout << "wrote " << path << "\n";
  }
  return rc;
}

int run_pareto(const GlobalArgs& g) {
  const ExperimentConfig cfg = load_required_config(g);
  const ActuationSystem sys = cfg.build_system();
  const auto regimes = cfg.build_regimes(sys.actuator_count());
  const Eigen::VectorXd w = single_wrench(cfg);

  const FeasibleFiber fiber = fiber_of(sys, w, regimes[0]);
  if (fiber.empty()) {
    std::cout << "infeasible wrench " << vec_str(w) << " under regime " << cfg.regimes[0].name()
              << ": best achievable bound violation " << num(fiber.infeasibility()) << "\n";
    return 1;
  }
  ParetoOptions po;
  po.solve.seed = cfg.solver.seed;
  po.solve.random_seeds = cfg.solver.random_seeds;
  po.solve.kkt_tol = cfg.solver.kkt_tol;
  const ParetoFront front = pareto_front(fiber, cfg.solver.pareto_points, po);

  if (!g.quiet) {
    std::cout << "Pareto front, regime " << cfg.regimes[0].name() << ", w = " << vec_str(w)
              << "\n  extent = " << num(front.extent)
              << (front.complete ? "" : "  (incomplete)") << "\n";
    std::cout << "  point        J1              J2         kkt        converged\n";
    for (std::size_t i = 0; i < front.points.size(); ++i) {
      const ParetoPoint& p = front.points[i];
      std::printf("  %5zu  %14.8g  %14.8g  %9.3g  %s\n", i, p.j1, p.j2, p.kkt_residual,
                  p.converged ? "yes" : "NO");
    }
  }

  const std::string dir = resolve_out_dir(g, cfg);
  ResultBundle bundle;
  bundle.config = cfg;
  bundle.regime_names.push_back(cfg.regimes[0].name());
  SweepCell cell;
  cell.wrench = w;
  cell.regime_index = 0;
  cell.energy = front.energy_end;
  cell.promptness = front.promptness_end;
  cell.j1_at_energy = front.energy_end.objective.j1;
  cell.j2_at_energy = front.energy_end.objective.j2;
  cell.j1_at_promptness = front.promptness_end.objective.j1;
  cell.j2_at_promptness = front.promptness_end.objective.j2;
  cell.front = front;
  cell.has_front = true;
  cell.ok = true;
  bundle.cells.push_back(cell);
  for (const std::string& path : emit_plotdata(bundle, PlotKind::ParetoFront, dir)) {
    if (!g.quiet) std::cout << "wrote " << path << "\n";
  }
  return front.complete ? 0 : 1;
}

int run_sweep(const GlobalArgs& g) {
  const ExperimentConfig cfg = load_required_config(g);
  const ResultBundle bundle = run_sweep_experiment(cfg);
  const std::string dir = resolve_out_dir(g, cfg);
  for (const std::string& path : write_bundle(bundle, dir)) {
    if (!g.quiet) std::cout << "wrote " << path << "\n";
  }
  int failed = 0;
  for (const auto& c : bundle.cells) {
    if (!c.ok && !g.quiet) {
      std::cout << "cell failed (regime " << bundle.regime_names[c.regime_index] << ", w = "
                << vec_str(c.wrench) << "): " << c.error << "\n";
    }
    failed += c.ok ? 0 : 1;
  }
  if (!g.quiet) {
    std::cout << bundle.cells.size() - failed << "/" << bundle.cells.size()
              << " cells solved in " << num(bundle.wall_seconds) << " s\n";
  }
  return failed == 0 ? 0 : 1;
}

int run_dual(const GlobalArgs& g, double a1, double a2, double c1, double c2, double w) {
  const DualSystem ds(a1, a2, c1, c2, w);
  const DualPoint opt = cooperative_energy_optimum(ds);
  if (!g.quiet) {
    std::cout << "dual system: a = (" << num(a1) << ", " << num(a2) << "), c = (" << num(c1)
              << ", " << num(c2) << "), w = " << num(w) << "\n";
    std::cout << "cooperative energy optimum (sharing rule): u = (" << num(opt.u1) << ", "
              << num(opt.u2) << "), J1 = " << num(dual_energy(ds, opt.u1, opt.u2)) << "\n";
    const BruteForceResult bf =
        brute_force_optimum(ds, DualObjective::Energy, Regime::unidirectional(), 100000);
    std::cout << "brute-force check (grid 1e5):               u = (" << num(bf.u1) << ", "
              << num(bf.u2) << "), J1 = " << num(bf.value) << "\n";
    if (a1 == a2) {
      std::cout << "a1 = a2: D is constant along the cooperative segment (indifferent)\n";
    }
    std::cout << "\nantagonistic ray (u1 <= 0):\n  |u1|        J1            D\n";
    for (const auto& s : antagonistic_profiles(ds, 2.0 * std::abs(w) / a2 + 1.0, 11)) {
      std::printf("  %-8.4g  %-12.8g  %-12.8g\n", s.u1_mag, s.j1, s.d);
    }
    std::cout << "\nfiber conic type by quadrant:\n";
    const char* names[4] = {"QI (v1>0, v2>0)", "QII (v1<0, v2>0)", "QIII (v1<0, v2<0)",
                            "QIV (v1>0, v2<0)"};
    const PlaneQuadrant qs[4] = {PlaneQuadrant::QI, PlaneQuadrant::QII, PlaneQuadrant::QIII,
                                 PlaneQuadrant::QIV};
    for (int i = 0; i < 4; ++i) {
      const char* cls = "";
      switch (classify_dual_fiber(a1, a2, w, qs[i])) {
        case DualFiberClass::Ellipse: cls = "ellipse arc"; break;
        case DualFiberClass::Hyperbola: cls = "hyperbola branch"; break;
        case DualFiberClass::Empty: cls = "empty"; break;
        case DualFiberClass::DegeneratePoint: cls = "single point"; break;
        case DualFiberClass::DegenerateLines: cls = "line pair"; break;
      }
      std::cout << "  " << names[i] << ": " << cls << "\n";
    }
  }
  if (!g.out_dir.empty() || std::getenv("FIBERALLOC_OUT_DIR")) {
    const std::string dir = g.out_dir.empty() ? std::getenv("FIBERALLOC_OUT_DIR") : g.out_dir;
    for (PlotKind kind : {PlotKind::DualFields, PlotKind::DualProfiles}) {
      for (const std::string& path : emit_plotdata(ds, kind, dir)) {
        if (!g.quiet) std::cout << "wrote " << path << "\n";
      }
    }
  }
  return 0;
}

int run_check(const GlobalArgs& g) {
  const std::uint64_t seed = g.seed >= 0 ? static_cast<std::uint64_t>(g.seed) : 0;
  const auto items = run_self_checks(seed);
  int failed = 0;
  for (const auto& it : items) {
    failed += it.pass ? 0 : 1;
    if (!g.quiet || !it.pass) {
      std::printf("  [%s]  %-40s %s\n", it.pass ? "PASS" : "FAIL", it.name.c_str(),
                  it.detail.c_str());
    }
  }
  std::printf("%d/%zu checks passed\n", static_cast<int>(items.size()) - failed, items.size());
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fiberalloc: energy/promptness allocation trade-offs on wrench fibers"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "JSON experiment config path");
  app.add_option("--out", g.out_dir, "output directory (overrides config and FIBERALLOC_OUT_DIR)");
  app.add_option("--seed", g.seed, "seed override for the solver seed streams");
  app.add_option("--format", g.format, "restrict outputs to one format")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--quiet", g.quiet, "suppress informational output");

  CLI::App* solve = app.add_subcommand("solve", "both single-objective optima for one wrench");
  CLI::App* pareto = app.add_subcommand("pareto", "trace the Pareto front for one fiber");
  CLI::App* sweep = app.add_subcommand("sweep", "run the configured wrench sweep experiment");
  CLI::App* dual = app.add_subcommand("dual", "two-actuator closed-form oracle tables");
  CLI::App* check = app.add_subcommand("check", "run the built-in invariant suite");
  double a1 = 1.0, a2 = 1.0, c1 = 1.0, c2 = 1.0, w = 1.0;
  dual->add_option("--a1", a1, "gain of actuator 1")->check(CLI::PositiveNumber);
  dual->add_option("--a2", a2, "gain of actuator 2")->check(CLI::PositiveNumber);
  dual->add_option("--c1", c1, "energy weight of actuator 1")->check(CLI::PositiveNumber);
  dual->add_option("--c2", c2, "energy weight of actuator 2")->check(CLI::PositiveNumber);
  dual->add_option("--w", w, "scalar task value");
  for (CLI::App* sub : {solve, pareto, sweep, dual, check}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return 0;  // --help and friends
    std::cerr << "\n" << fiberalloc::config_schema_help();
    return 2;
  }

  try {
    if (solve->parsed()) return run_solve(g);
    if (pareto->parsed()) return run_pareto(g);
    if (sweep->parsed()) return run_sweep(g);
    if (dual->parsed()) return run_dual(g, a1, a2, c1, c2, w);
    if (check->parsed()) return run_check(g);
  } catch (const fiberalloc::ConfigError& e) {
    std::cerr << e.what() << "\n\n" << fiberalloc::config_schema_help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
