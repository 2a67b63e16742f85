#include "fiberalloc/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace fiberalloc {

using nlohmann::json;

namespace {

constexpr const char* kPalette[10] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                      "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fmt_num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(v[i]);
  }
  return out;
}

std::string now_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json fin(double x) { return std::isfinite(x) ? json(x) : json(); }

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(fin(v[i]));
  return a;
}

json report_to_json(const SolveReport& r) {
  json j;
  j["converged"] = r.converged;
  j["u"] = vec_json(r.u_star);
  j["j1"] = fin(r.objective.j1);
  j["j2"] = fin(r.objective.j2);
  j["gramian_logdet"] = fin(r.objective.gramian_logdet);
  j["gramian_min_eig"] = fin(r.objective.min_eig);
  j["gramian_singular"] = r.objective.singular;
  j["multipliers"] = vec_json(r.multipliers);
  j["bound_multipliers"] = vec_json(r.bound_multipliers);
  j["kkt_residual"] = fin(r.kkt_residual);
  j["kkt_scale"] = fin(r.kkt_scale);
  j["active_set"] = r.active_set;
  j["seeds_tried"] = r.seeds_tried;
  j["iterations"] = r.iterations;
  j["message"] = r.message;
  return j;
}

int wrench_count(const ResultBundle& b) {
  return b.regime_names.empty() ? 0 : static_cast<int>(b.cells.size() / b.regime_names.size());
}

double cell_label(const ResultBundle& b, int wrench_index) {
  if (!b.sweep_values.empty()) return b.sweep_values[wrench_index];
  return wrench_index;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

// ---- minimal SVG rendering ----

struct Series {
  std::string name;
  std::string color;
  bool dashed = false;
  std::vector<std::pair<double, double>> pts;
};

std::string svg_line_chart(const std::string& title, const std::string& xlabel,
                           const std::string& ylabel, const std::vector<Series>& series) {
  const int W = 640, H = 420, ML = 60, MR = 150, MT = 36, MB = 46;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.pts) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (xmin > xmax) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax - xmin < 1e-12) {
    xmin -= 1;
    xmax += 1;
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 1;
    ymax += 1;
  }
  const double xpad = 0.04 * (xmax - xmin), ypad = 0.06 * (ymax - ymin);
  xmin -= xpad;
  xmax += xpad;
  ymin -= ypad;
  ymax += ypad;
  auto X = [&](double x) { return ML + (x - xmin) / (xmax - xmin) * (W - ML - MR); };
  auto Y = [&](double y) { return H - MB - (y - ymin) / (ymax - ymin) * (H - MT - MB); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" << title
     << "</text>\n";
  os << "<rect x=\"" << ML << "\" y=\"" << MT << "\" width=\"" << (W - ML - MR) << "\" height=\""
     << (H - MT - MB) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = xmin + t * (xmax - xmin) / 4.0;
    const double yv = ymin + t * (ymax - ymin) / 4.0;
    os << "<text x=\"" << X(xv) << "\" y=\"" << H - MB + 16
       << "\" text-anchor=\"middle\" fill=\"#333\">" << fmt_num(xv) << "</text>\n";
    os << "<text x=\"" << ML - 6 << "\" y=\"" << Y(yv) + 4
       << "\" text-anchor=\"end\" fill=\"#333\">" << fmt_num(yv) << "</text>\n";
    os << "<line x1=\"" << ML << "\" y1=\"" << Y(yv) << "\" x2=\"" << W - MR << "\" y2=\"" << Y(yv)
       << "\" stroke=\"#ddd\"/>\n";
  }
  os << "<text x=\"" << (ML + W - MR) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">"
     << xlabel << "</text>\n";
  os << "<text x=\"16\" y=\"" << (MT + H - MB) / 2
     << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (MT + H - MB) / 2 << ")\">"
     << ylabel << "</text>\n";

  int legend_y = MT + 12;
  for (const auto& s : series) {
    std::ostringstream pl;
    int n_pts = 0;
    for (const auto& [x, y] : s.pts) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      pl << X(x) << "," << Y(y) << " ";
      ++n_pts;
    }
    if (n_pts > 1) {
      os << "<polyline points=\"" << pl.str() << "\" fill=\"none\" stroke=\"" << s.color
         << "\" stroke-width=\"1.5\"" << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
    }
    if (n_pts <= 40) {
      for (const auto& [x, y] : s.pts) {
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        os << "<circle cx=\"" << X(x) << "\" cy=\"" << Y(y) << "\" r=\"2.5\" fill=\"" << s.color
           << "\"/>\n";
      }
    }
    os << "<line x1=\"" << W - MR + 8 << "\" y1=\"" << legend_y << "\" x2=\"" << W - MR + 28
       << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color << "\" stroke-width=\"2\""
       << (s.dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
    os << "<text x=\"" << W - MR + 32 << "\" y=\"" << legend_y + 4 << "\">" << s.name
       << "</text>\n";
    legend_y += 16;
  }
  os << "</svg>\n";
  return os.str();
}

struct HeatPanel {
  std::string name;
  int nx = 0, ny = 0;
  std::vector<double> values;  // row-major, ny rows of nx
  std::vector<std::pair<double, double>> overlay;  // data-space polyline
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
};

std::string svg_heatmaps(const std::string& title, const std::vector<HeatPanel>& panels) {
  const int cell_px = 5, gap = 34, top = 40;
  int W = gap;
  int maxh = 0;
  for (const auto& p : panels) {
    W += p.nx * cell_px + gap;
    maxh = std::max(maxh, p.ny * cell_px);
  }
  const int H = top + maxh + 30;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" << title
     << "</text>\n";
  int x0 = gap;
  for (const auto& p : panels) {
    double lo = 1e300, hi = -1e300;
    for (const double v : p.values) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (lo > hi) {
      lo = 0;
      hi = 1;
    }
    if (hi - lo < 1e-300) hi = lo + 1;
    for (int r = 0; r < p.ny; ++r) {
      for (int c = 0; c < p.nx; ++c) {
        const double v = p.values[static_cast<std::size_t>(r) * p.nx + c];
        const double t = std::isfinite(v) ? (v - lo) / (hi - lo) : 0.0;
        const int R = static_cast<int>(255 * t), G = 64, B = static_cast<int>(255 * (1 - t));
        // row 0 is ymin; SVG y grows downward
        os << "<rect x=\"" << x0 + c * cell_px << "\" y=\"" << top + (p.ny - 1 - r) * cell_px
           << "\" width=\"" << cell_px << "\" height=\"" << cell_px << "\" fill=\"rgb(" << R << ","
           << G << "," << B << ")\"/>\n";
      }
    }
    if (!p.overlay.empty()) {
      std::ostringstream pl;
      for (const auto& [x, y] : p.overlay) {
        if (x < p.xmin || x > p.xmax || y < p.ymin || y > p.ymax) continue;
        const double px = x0 + (x - p.xmin) / (p.xmax - p.xmin) * p.nx * cell_px;
        const double py = top + (1.0 - (y - p.ymin) / (p.ymax - p.ymin)) * p.ny * cell_px;
        pl << px << "," << py << " ";
      }
      os << "<polyline points=\"" << pl.str()
         << "\" fill=\"none\" stroke=\"white\" stroke-width=\"1.5\"/>\n";
    }
    os << "<text x=\"" << x0 + p.nx * cell_px / 2 << "\" y=\"" << top + maxh + 18
       << "\" text-anchor=\"middle\">" << p.name << "</text>\n";
    x0 += p.nx * cell_px + gap;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace

bool ResultBundle::all_ok() const {
  for (const auto& c : cells) {
    if (!c.ok) return false;
  }
  return true;
}

ResultBundle run_sweep_experiment(const ExperimentConfig& config) {
  ResultBundle b;
  b.config = config;
  const ActuationSystem sys = config.build_system();
  const auto regimes = config.build_regimes(sys.actuator_count());
  const auto wrenches = config.build_wrenches();
  b.sweep_values = config.sweep_values();
  for (const auto& rs : config.regimes) b.regime_names.push_back(rs.name());
  for (std::size_t i = 0; i < b.regime_names.size(); ++i) {  // disambiguate duplicates
    int before = 0;
    for (std::size_t k = 0; k < i; ++k) {
      if (config.regimes[k].name() == config.regimes[i].name()) ++before;
    }
    if (before > 0) b.regime_names[i] += "_" + std::to_string(before + 1);
  }

  SweepOptions so;
  so.solve.seed = config.solver.seed;
  so.solve.random_seeds = config.solver.random_seeds;
  so.solve.kkt_tol = config.solver.kkt_tol;
  so.with_fronts = config.solver.with_fronts;
  so.front_points = config.solver.pareto_points;

  const auto t0 = std::chrono::steady_clock::now();
  b.cells = sweep(sys, wrenches, regimes, so);
  b.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  b.timestamp = now_timestamp();
  return b;
}

std::string bundle_to_json(const ResultBundle& bundle) {
  json j;
  j["schema"] = 1;
  j["timestamp"] = bundle.timestamp;  // the only field excluded from byte comparisons
  j["config"] = json::parse(config_to_json(bundle.config));
  j["regimes"] = bundle.regime_names;
  j["sweep_values"] = bundle.sweep_values;
  json cells = json::array();
  const int nw = wrench_count(bundle);
  for (std::size_t i = 0; i < bundle.cells.size(); ++i) {
    const SweepCell& c = bundle.cells[i];
    json jc;
    jc["regime"] = bundle.regime_names[c.regime_index];
    jc["wrench"] = vec_json(c.wrench);
    if (nw > 0) jc["sweep_value"] = cell_label(bundle, static_cast<int>(i) % nw);
    jc["ok"] = c.ok;
    if (!c.ok) {
      jc["error"] = c.error;
    } else {
      jc["energy"] = report_to_json(c.energy);
      jc["promptness"] = report_to_json(c.promptness);
      jc["j1_at_energy"] = fin(c.j1_at_energy);
      jc["j2_at_energy"] = fin(c.j2_at_energy);
      jc["j1_at_promptness"] = fin(c.j1_at_promptness);
      jc["j2_at_promptness"] = fin(c.j2_at_promptness);
      if (c.has_front) {
        json f;
        f["extent"] = fin(c.front.extent);
        f["complete"] = c.front.complete;
        json pts = json::array();
        for (const auto& p : c.front.points) {
          pts.push_back({{"j1", fin(p.j1)},
                         {"j2", fin(p.j2)},
                         {"epsilon", fin(p.epsilon)},
                         {"kkt_residual", fin(p.kkt_residual)},
                         {"converged", p.converged},
                         {"u", vec_json(p.u)}});
        }
        f["points"] = pts;
        jc["front"] = f;
      }
    }
    cells.push_back(jc);
  }
  j["cells"] = cells;
  return j.dump(2) + "\n";
}

std::string allocations_csv(const ResultBundle& bundle) {
  std::ostringstream os;
  os << "regime,tau_x,rotor,u_energy,u_promptness\n";
  const int nw = wrench_count(bundle);
  for (std::size_t i = 0; i < bundle.cells.size(); ++i) {
    const SweepCell& c = bundle.cells[i];
    const std::string regime = csv_field(bundle.regime_names[c.regime_index]);
    const std::string label = fmt_num(cell_label(bundle, static_cast<int>(i) % nw));
    const int n = static_cast<int>(std::max(c.energy.u_star.size(), c.promptness.u_star.size()));
    for (int r = 0; r < n; ++r) {
      os << regime << "," << label << "," << r << ","
         << (r < c.energy.u_star.size() ? fmt_num(c.energy.u_star[r]) : "nan") << ","
         << (r < c.promptness.u_star.size() ? fmt_num(c.promptness.u_star[r]) : "nan") << "\n";
    }
  }
  return os.str();
}

std::string costs_csv(const ResultBundle& bundle) {
  std::ostringstream os;
  os << "regime,tau_x,j1_energy,j2_energy,j1_promptness,j2_promptness,"
        "kkt_energy,kkt_promptness,energy_converged,promptness_converged,"
        "energy_active_set,promptness_active_set\n";
  const int nw = wrench_count(bundle);
  for (std::size_t i = 0; i < bundle.cells.size(); ++i) {
    const SweepCell& c = bundle.cells[i];
    os << csv_field(bundle.regime_names[c.regime_index]) << ","
       << fmt_num(cell_label(bundle, static_cast<int>(i) % nw)) << ",";
    if (!c.ok) {
      os << "nan,nan,nan,nan,nan,nan,0,0,,\n";
      continue;
    }
    os << fmt_num(c.j1_at_energy) << "," << fmt_num(c.j2_at_energy) << ","
       << fmt_num(c.j1_at_promptness) << "," << fmt_num(c.j2_at_promptness) << ","
       << fmt_num(c.energy.kkt_residual) << "," << fmt_num(c.promptness.kkt_residual) << ","
       << (c.energy.converged ? 1 : 0) << "," << (c.promptness.converged ? 1 : 0) << ","
       << csv_field(join_ints(c.energy.active_set)) << ","
       << csv_field(join_ints(c.promptness.active_set)) << "\n";
  }
  return os.str();
}

std::string fronts_csv(const ResultBundle& bundle) {
  std::ostringstream os;
  os << "regime,tau_x,point,j1,j2,epsilon,kkt_residual,converged\n";
  const int nw = wrench_count(bundle);
  for (std::size_t i = 0; i < bundle.cells.size(); ++i) {
    const SweepCell& c = bundle.cells[i];
    if (!c.ok || !c.has_front) continue;
    for (std::size_t p = 0; p < c.front.points.size(); ++p) {
      const ParetoPoint& pt = c.front.points[p];
      os << csv_field(bundle.regime_names[c.regime_index]) << ","
         << fmt_num(cell_label(bundle, static_cast<int>(i) % nw)) << "," << p << ","
         << fmt_num(pt.j1) << "," << fmt_num(pt.j2) << "," << fmt_num(pt.epsilon) << ","
         << fmt_num(pt.kkt_residual) << "," << (pt.converged ? 1 : 0) << "\n";
    }
  }
  return os.str();
}

std::vector<std::string> write_bundle(const ResultBundle& bundle, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    const std::string path = (std::filesystem::path(dir) / name).string();
    write_file(path, content);
    written.push_back(path);
  };
  if (bundle.config.output.json) emit("results.json", bundle_to_json(bundle));
  if (bundle.config.output.csv) {
    emit("allocations.csv", allocations_csv(bundle));
    emit("costs.csv", costs_csv(bundle));
    bool any_front = false;
    for (const auto& c : bundle.cells) any_front |= c.has_front;
    if (any_front) emit("pareto_fronts.csv", fronts_csv(bundle));
  }
  return written;
}

PlotKind plot_kind_from_string(const std::string& name) {
  if (name == "allocation-vs-sweep") return PlotKind::AllocationVsSweep;
  if (name == "cost-vs-sweep") return PlotKind::CostVsSweep;
  if (name == "pareto-front") return PlotKind::ParetoFront;
  if (name == "dual-fields") return PlotKind::DualFields;
  if (name == "dual-profiles") return PlotKind::DualProfiles;
  throw std::invalid_argument(
      "unknown plot kind '" + name +
      "' (allocation-vs-sweep, cost-vs-sweep, pareto-front, dual-fields, dual-profiles)");
}

std::vector<std::string> emit_plotdata(const ResultBundle& bundle, PlotKind kind,
                                       const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    const std::string path = (std::filesystem::path(dir) / name).string();
    write_file(path, content);
    written.push_back(path);
  };
  const int nw = wrench_count(bundle);
  const int nr = static_cast<int>(bundle.regime_names.size());

  switch (kind) {
    case PlotKind::AllocationVsSweep: {
      emit("allocation_vs_sweep.csv", allocations_csv(bundle));
      for (int r = 0; r < nr; ++r) {
        std::vector<Series> series;
        int n = 0;
        for (int wi = 0; wi < nw; ++wi) {
          n = std::max(n, static_cast<int>(bundle.cells[r * nw + wi].energy.u_star.size()));
        }
        for (int rot = 0; rot < n; ++rot) {
          Series en{"u" + std::to_string(rot) + " energy", kPalette[rot % 10], false, {}};
          Series pr{"u" + std::to_string(rot) + " promptness", kPalette[rot % 10], true, {}};
          for (int wi = 0; wi < nw; ++wi) {
            const SweepCell& c = bundle.cells[r * nw + wi];
            if (!c.ok) continue;
            if (rot < c.energy.u_star.size()) {
              en.pts.emplace_back(cell_label(bundle, wi), c.energy.u_star[rot]);
            }
            if (rot < c.promptness.u_star.size()) {
              pr.pts.emplace_back(cell_label(bundle, wi), c.promptness.u_star[rot]);
            }
          }
          series.push_back(en);
          series.push_back(pr);
        }
        emit("allocation_vs_sweep_" + bundle.regime_names[r] + ".svg",
             svg_line_chart("allocations, " + bundle.regime_names[r], "tau_x", "u_i", series));
      }
      break;
    }
    case PlotKind::CostVsSweep: {
      emit("cost_vs_sweep.csv", costs_csv(bundle));
      for (int r = 0; r < nr; ++r) {
        Series j1e{"J1 at energy opt", kPalette[0], false, {}};
        Series j1p{"J1 at promptness opt", kPalette[0], true, {}};
        Series j2e{"J2 at energy opt", kPalette[3], false, {}};
        Series j2p{"J2 at promptness opt", kPalette[3], true, {}};
        for (int wi = 0; wi < nw; ++wi) {
          const SweepCell& c = bundle.cells[r * nw + wi];
          if (!c.ok) continue;
          const double x = cell_label(bundle, wi);
          j1e.pts.emplace_back(x, c.j1_at_energy);
          j1p.pts.emplace_back(x, c.j1_at_promptness);
          j2e.pts.emplace_back(x, c.j2_at_energy);
          j2p.pts.emplace_back(x, c.j2_at_promptness);
        }
        emit("cost_vs_sweep_" + bundle.regime_names[r] + "_j1.svg",
             svg_line_chart("energy cost, " + bundle.regime_names[r], "tau_x", "J1", {j1e, j1p}));
        emit("cost_vs_sweep_" + bundle.regime_names[r] + "_j2.svg",
             svg_line_chart("promptness cost, " + bundle.regime_names[r], "tau_x", "J2", {j2e, j2p}));
      }
      break;
    }
    case PlotKind::ParetoFront: {
      bool any = false;
      for (const auto& c : bundle.cells) any |= c.has_front;
      if (!any) {
        throw std::invalid_argument("bundle carries no fronts; rerun with solver.with_fronts");
      }
      emit("pareto_front.csv", fronts_csv(bundle));
      for (int r = 0; r < nr; ++r) {
        std::vector<Series> series;
        for (int wi = 0; wi < nw; ++wi) {
          const SweepCell& c = bundle.cells[r * nw + wi];
          if (!c.ok || !c.has_front) continue;
          Series s{"tau=" + fmt_num(cell_label(bundle, wi)), kPalette[wi % 10], false, {}};
          for (const auto& p : c.front.points) s.pts.emplace_back(p.j1, p.j2);
          series.push_back(s);
        }
        if (!series.empty()) {
          emit("pareto_front_" + bundle.regime_names[r] + ".svg",
               svg_line_chart("Pareto fronts, " + bundle.regime_names[r], "J1", "J2", series));
        }
      }
      break;
    }
    case PlotKind::DualFields:
    case PlotKind::DualProfiles:
      throw std::invalid_argument("dual plot kinds need a two-actuator system, not a sweep bundle");
  }
  return written;
}

std::vector<std::string> emit_plotdata(const DualSystem& ds, PlotKind kind,
                                       const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    const std::string path = (std::filesystem::path(dir) / name).string();
    write_file(path, content);
    written.push_back(path);
  };

  switch (kind) {
    case PlotKind::DualFields: {
      const double Lu = 2.0 * std::max({std::abs(ds.w) / ds.a1, std::abs(ds.w) / ds.a2, 1.0});
      const double Lv = std::sqrt(Lu);
      const int N = 41;
      std::ostringstream csv;
      csv << "plane,x,y,j1,d\n";
      HeatPanel pj1v{"J1 (v plane)", N, N, {}, {}, -Lv, Lv, -Lv, Lv};
      HeatPanel pdv{"D (v plane)", N, N, {}, {}, -Lv, Lv, -Lv, Lv};
      HeatPanel pj1u{"J1 (u plane)", N, N, {}, {}, -Lu, Lu, -Lu, Lu};
      HeatPanel pdu{"D (u plane)", N, N, {}, {}, -Lu, Lu, -Lu, Lu};
      for (int r = 0; r < N; ++r) {
        const double yv = -Lv + 2.0 * Lv * r / (N - 1);
        const double yu = -Lu + 2.0 * Lu * r / (N - 1);
        for (int c = 0; c < N; ++c) {
          const double xv = -Lv + 2.0 * Lv * c / (N - 1);
          const double xu = -Lu + 2.0 * Lu * c / (N - 1);
          const double j1v = ds.c1 * std::pow(std::abs(xv), 3) + ds.c2 * std::pow(std::abs(yv), 3);
          const double dv = ds.a1 * ds.a1 * xv * xv + ds.a2 * ds.a2 * yv * yv;
          const double j1u = dual_energy(ds, xu, yu);
          const double du = dual_d(ds, xu, yu);
          pj1v.values.push_back(j1v);
          pdv.values.push_back(dv);
          pj1u.values.push_back(j1u);
          pdu.values.push_back(du);
          csv << "v," << fmt_num(xv) << "," << fmt_num(yv) << "," << fmt_num(j1v) << ","
              << fmt_num(dv) << "\n";
          csv << "u," << fmt_num(xu) << "," << fmt_num(yu) << "," << fmt_num(j1u) << ","
              << fmt_num(du) << "\n";
        }
      }
      // fiber overlays: a line in the u plane, a cubic-like arc in the v plane
      for (int t = 0; t <= 400; ++t) {
        const double u1 = -Lu + 2.0 * Lu * t / 400.0;
        const double u2 = (ds.w - ds.a1 * u1) / ds.a2;
        pj1u.overlay.emplace_back(u1, u2);
        pdu.overlay.emplace_back(u1, u2);
        const double v1 = -Lv + 2.0 * Lv * t / 400.0;
        const double uu = (ds.w - ds.a1 * v1 * std::abs(v1)) / ds.a2;
        const double v2 = (uu < 0 ? -1.0 : 1.0) * std::sqrt(std::abs(uu));
        pj1v.overlay.emplace_back(v1, v2);
        pdv.overlay.emplace_back(v1, v2);
      }
      emit("dual_fields.csv", csv.str());
      emit("dual_fields.svg", svg_heatmaps("two-actuator cost fields", {pj1v, pdv, pj1u, pdu}));
      break;
    }
    case PlotKind::DualProfiles: {
      if (ds.w == 0.0) {
        throw std::invalid_argument("dual-profiles needs w != 0 (profiles are rays from the lazy point)");
      }
      const double w = std::abs(ds.w);
      const int S = 201;
      std::ostringstream coop;
      coop << "u1,u2,j1,d\n";
      Series cj1{"J1", kPalette[0], false, {}};
      Series cd{"D", kPalette[3], true, {}};
      for (int t = 0; t < S; ++t) {
        const double u1 = w / ds.a1 * t / (S - 1);
        const double u2 = (w - ds.a1 * u1) / ds.a2;
        coop << fmt_num(u1) << "," << fmt_num(u2) << "," << fmt_num(dual_energy(ds, u1, u2))
             << "," << fmt_num(dual_d(ds, u1, u2)) << "\n";
        cj1.pts.emplace_back(u1, dual_energy(ds, u1, u2));
        cd.pts.emplace_back(u1, dual_d(ds, u1, u2));
      }
      std::ostringstream antag;
      antag << "u1_mag,u2_mag,j1,d\n";
      Series aj1{"J1", kPalette[0], false, {}};
      Series ad{"D", kPalette[3], true, {}};
      for (const auto& s : antagonistic_profiles(ds, 2.0 * w / ds.a2 + 1.0, S)) {
        const double u2 = w / ds.a2 + ds.a1 / ds.a2 * s.u1_mag;
        antag << fmt_num(s.u1_mag) << "," << fmt_num(u2) << "," << fmt_num(s.j1) << ","
              << fmt_num(s.d) << "\n";
        aj1.pts.emplace_back(s.u1_mag, s.j1);
        ad.pts.emplace_back(s.u1_mag, s.d);
      }
      emit("dual_profiles_cooperative.csv", coop.str());
      emit("dual_profiles_antagonistic.csv", antag.str());
      emit("dual_profiles_cooperative.svg",
           svg_line_chart("cooperative segment", "u1", "cost", {cj1, cd}));
      emit("dual_profiles_antagonistic.svg",
           svg_line_chart("antagonistic ray", "|u1|", "cost", {aj1, ad}));
      break;
    }
    default:
      throw std::invalid_argument("this plot kind needs a sweep bundle, not a two-actuator system");
  }
  return written;
}

std::vector<CheckItem> run_self_checks(std::uint64_t seed) {
  std::vector<CheckItem> items;
  auto run = [&items](const std::string& name, auto&& fn) {
    CheckItem it;
    it.name = name;
    try {
      fn(it);
    } catch (const std::exception& e) {
      it.pass = false;
      it.detail = std::string("exception: ") + e.what();
    }
    items.push_back(it);
  };

  const ActuationSystem hex = build_hexarotor(0.5, 0.25, 1.0, 0.05);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);

  run("speed/effort roundtrip", [&](CheckItem& it) {
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      Eigen::VectorXd v(6);
      for (int i = 0; i < 6; ++i) v[i] = 3.0 * sym(rng);
      worst = std::max(worst,
                       (effort_to_speed(speed_to_effort(v)) - v).lpNorm<Eigen::Infinity>());
    }
    it.pass = worst < 1e-12;
    it.detail = "max roundtrip error " + fmt_num(worst);
  });

  run("Jacobian-Gramian identity", [&](CheckItem& it) {
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
      Eigen::VectorXd v(6);
      for (int i = 0; i < 6; ++i) {
        v[i] = (0.2 + 2.8 * std::abs(sym(rng))) * (sym(rng) < 0 ? -1.0 : 1.0);
      }
      const Eigen::MatrixXd J = hex.jacobian(v);
      const Eigen::MatrixXd S4 = 4.0 * hex.gramian(speed_to_effort(v));
      worst = std::max(worst, (J * J.transpose() - S4).norm() / S4.norm());
    }
    it.pass = worst <= 1e-12;
    it.detail = "max relative deviation " + fmt_num(worst);
  });

  run("Cauchy-Binet determinant", [&](CheckItem& it) {
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
      Eigen::VectorXd u(6);
      for (int i = 0; i < 6; ++i) u[i] = 5.0 * sym(rng);
      const double det = hex.gramian(u).determinant();
      worst = std::max(worst, std::abs(cauchy_binet_det(hex, u) - det) / std::max(1.0, det));
    }
    it.pass = worst <= 1e-10;
    it.detail = "max scaled deviation " + fmt_num(worst);
  });

  run("objective gradients vs finite differences", [&](CheckItem& it) {
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
      Eigen::VectorXd u(6);
      for (int i = 0; i < 6; ++i) {
        u[i] = (0.5 + 2.0 * std::abs(sym(rng))) * (sym(rng) < 0 ? -1.0 : 1.0);
      }
      const Eigen::VectorXd ge = energy_grad_u(hex, u);
      const Eigen::VectorXd gp = promptness_grad_u(hex, u).grad;
      for (int i = 0; i < 6; ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(u[i]));
        Eigen::VectorXd up = u, um = u;
        up[i] += h;
        um[i] -= h;
        const double fde = (energy_u(hex, up) - energy_u(hex, um)) / (2 * h);
        const double fdp = (promptness_u(hex, up).value - promptness_u(hex, um).value) / (2 * h);
        worst = std::max(worst, std::abs(fde - ge[i]) / std::max(1.0, std::abs(fde)));
        worst = std::max(worst, std::abs(fdp - gp[i]) / std::max(1.0, std::abs(fdp)));
      }
    }
    it.pass = worst < 1e-5;
    it.detail = "max relative error " + fmt_num(worst);
  });

  run("isotropic hover allocation", [&](CheckItem& it) {
    const Eigen::Vector4d w(0.0, 0.0, 0.0, hover_thrust(0.5));
    const FeasibleFiber fiber = fiber_of(hex, w, Regime::unidirectional());
    const SolveReport en = min_energy(fiber);
    const SolveReport pr = max_promptness(fiber);
    const double target = hover_thrust(0.5) / 6.0;
    const double dev = std::max(
        (en.u_star.array() - target).abs().maxCoeff(),
        (pr.u_star.array() - target).abs().maxCoeff());
    it.pass = en.converged && pr.converged && dev < 1e-6;
    it.detail = "max deviation from F_z/(6 k_f) = " + fmt_num(dev);
  });

  run("dual-actuator sharing rule", [&](CheckItem& it) {
    std::uniform_real_distribution<double> gain(0.2, 5.0);
    std::uniform_real_distribution<double> wd(0.1, 10.0);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const DualSystem ds(gain(rng), gain(rng), gain(rng), gain(rng), wd(rng));
      const DualPoint exact = cooperative_energy_optimum(ds);
      const FeasibleFiber fiber = fiber_of(to_actuation_system(ds),
                                           Eigen::VectorXd::Constant(1, ds.w),
                                           Regime::unidirectional());
      const SolveReport rep = min_energy(fiber);
      worst = std::max(worst, std::max(std::abs(rep.u_star[0] - exact.u1),
                                       std::abs(rep.u_star[1] - exact.u2)));
    }
    it.pass = worst < 1e-6;
    it.detail = "max deviation from closed form " + fmt_num(worst);
  });

  run("null space forces mixed signs", [&](CheckItem& it) {
    const OrthantVerdict verdict = orthant_nullspace_intersection(hex);
    const Eigen::MatrixXd N = null_space_basis(hex);
    bool mixed = true;
    for (int c = 0; c < N.cols(); ++c) {
      mixed = mixed && N.col(c).minCoeff() < -1e-9 && N.col(c).maxCoeff() > 1e-9;
    }
    it.pass = verdict.trivial && mixed;
    it.detail = "orthant max-min entry " + fmt_num(verdict.max_min_entry);
  });

  run("repeat-solve determinism", [&](CheckItem& it) {
    const Eigen::Vector4d w(0.3, 0.0, 0.0, hover_thrust(0.5));
    const FeasibleFiber fiber = fiber_of(hex, w, Regime::bidirectional_box(5.0, 6));
    SolveOptions opts;
    opts.seed = seed;
    const SolveReport a = max_promptness(fiber, opts);
    const SolveReport b = max_promptness(fiber, opts);
    it.pass = a.u_star.size() == b.u_star.size() &&
              std::memcmp(a.u_star.data(), b.u_star.data(),
                          sizeof(double) * a.u_star.size()) == 0 &&
              a.objective.j2 == b.objective.j2;
    it.detail = it.pass ? "two runs bitwise identical" : "runs diverged";
  });

  run("antagonistic total conflict", [&](CheckItem& it) {
    const DualSystem ds(1.0, 1.0, 1.0, 1.0, 1.0);
    const FeasibleFiber fiber = fiber_of(to_actuation_system(ds),
                                         Eigen::VectorXd::Constant(1, ds.w),
                                         Regime::bidirectional_box(5.0, 2));
    double worst = 0.0;
    for (const double t : {0.5, 1.0, 2.0}) {
      Eigen::VectorXd u(2);
      u << -t, (ds.w + ds.a1 * t) / ds.a2;
      const ConflictSample cs = restricted_gradients(fiber, u);
      if (!cs.kappa_defined) {
        worst = 1.0;
        continue;
      }
      worst = std::max(worst, std::abs(cs.kappa + 1.0));
    }
    it.pass = worst < 1e-6;
    it.detail = "max |kappa + 1| = " + fmt_num(worst);
  });

  return items;
}

}  // namespace fiberalloc
