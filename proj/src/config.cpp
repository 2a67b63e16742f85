#include "fiberalloc/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fiberalloc {

using nlohmann::json;

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::ostringstream os;
  os << "invalid config (" << problems.size() << " problem" << (problems.size() == 1 ? "" : "s")
     << "):";
  for (const auto& p : problems) os << "\n  - " << p;
  return os.str();
}

struct Checker {
  std::vector<std::string>& problems;

  void err(const std::string& path, const std::string& msg) { problems.push_back(path + ": " + msg); }

  bool object(const json& j, const std::string& path) {
    if (j.is_object()) return true;
    err(path, "expected an object");
    return false;
  }

  void known_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
    for (const auto& [k, v] : j.items()) {
      bool ok = false;
      for (const char* allowed : keys) {
        if (k == allowed) ok = true;
      }
      if (!ok) err(path.empty() ? k : path + "." + k, "unknown key");
    }
  }

  bool number(const json& j, const std::string& path, double* out, bool positive = false) {
    if (!j.is_number()) {
      err(path, "expected a number");
      return false;
    }
    *out = j.get<double>();
    if (positive && !(*out > 0.0)) {
      err(path, "must be > 0");
      return false;
    }
    return true;
  }

  bool integer(const json& j, const std::string& path, long long* out) {
    if (!j.is_number_integer()) {
      err(path, "expected an integer");
      return false;
    }
    *out = j.get<long long>();
    return true;
  }

  bool vector(const json& j, const std::string& path, Eigen::VectorXd* out,
              int required_len = -1, bool positive = false) {
    if (!j.is_array()) {
      err(path, "expected an array of numbers");
      return false;
    }
    if (required_len >= 0 && static_cast<int>(j.size()) != required_len) {
      err(path, "expected " + std::to_string(required_len) + " entries, got " +
                    std::to_string(j.size()));
      return false;
    }
    out->resize(static_cast<Eigen::Index>(j.size()));
    bool ok = true;
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_number()) {
        err(path + "[" + std::to_string(i) + "]", "expected a number");
        ok = false;
        continue;
      }
      (*out)[static_cast<Eigen::Index>(i)] = j[i].get<double>();
      if (positive && !((*out)[static_cast<Eigen::Index>(i)] > 0.0)) {
        err(path + "[" + std::to_string(i) + "]", "must be > 0");
        ok = false;
      }
    }
    return ok;
  }
};

const char* const kComponentNames[4] = {"tau_x", "tau_y", "tau_z", "f_z"};

void parse_vehicle(const json& j, Checker& ck, VehicleSpec* v, int* m_out, int* n_out) {
  *m_out = -1;
  *n_out = -1;
  if (!ck.object(j, "vehicle")) return;

  std::string type = "hexarotor";
  if (j.contains("type")) {
    if (j["type"].is_string()) {
      type = j["type"].get<std::string>();
    } else {
      ck.err("vehicle.type", "expected a string");
      return;
    }
  }

  if (type == "hexarotor") {
    v->type = VehicleSpec::Type::Hexarotor;
    ck.known_keys(j, "vehicle",
                  {"type", "mass", "radius", "k_f", "k_m", "rotor_offset_angle", "spin_pattern",
                   "energy_weights"});
    for (const char* key : {"mass", "radius", "k_f", "k_m"}) {
      if (!j.contains(key)) ck.err(std::string("vehicle.") + key, "required field missing");
    }
    if (j.contains("mass")) ck.number(j["mass"], "vehicle.mass", &v->mass, true);
    if (j.contains("radius")) ck.number(j["radius"], "vehicle.radius", &v->radius, true);
    if (j.contains("k_f")) ck.number(j["k_f"], "vehicle.k_f", &v->k_f, true);
    if (j.contains("k_m")) ck.number(j["k_m"], "vehicle.k_m", &v->k_m, true);
    if (j.contains("rotor_offset_angle")) {
      ck.number(j["rotor_offset_angle"], "vehicle.rotor_offset_angle", &v->rotor_offset_angle);
    }
    if (j.contains("spin_pattern")) {
      const json& sp = j["spin_pattern"];
      if (!sp.is_array() || sp.size() != 6) {
        ck.err("vehicle.spin_pattern", "expected 6 entries of +1/-1");
      } else {
        for (std::size_t i = 0; i < 6; ++i) {
          if (!sp[i].is_number_integer() ||
              (sp[i].get<int>() != 1 && sp[i].get<int>() != -1)) {
            ck.err("vehicle.spin_pattern[" + std::to_string(i) + "]", "must be +1 or -1");
          } else {
            v->spin_pattern.push_back(sp[i].get<int>());
          }
        }
        if (v->spin_pattern.size() != 6) v->spin_pattern.clear();
      }
    }
    if (j.contains("energy_weights")) {
      ck.vector(j["energy_weights"], "vehicle.energy_weights", &v->energy_weights, 6, true);
    }
    *m_out = 4;
    *n_out = 6;
  } else if (type == "matrix") {
    v->type = VehicleSpec::Type::Matrix;
    ck.known_keys(j, "vehicle", {"type", "A", "energy_weights"});
    if (!j.contains("A")) {
      ck.err("vehicle.A", "required field missing");
      return;
    }
    const json& A = j["A"];
    if (!A.is_array() || A.empty() || !A[0].is_array() || A[0].empty()) {
      ck.err("vehicle.A", "expected a nonempty 2-D array");
      return;
    }
    const int m = static_cast<int>(A.size());
    const int n = static_cast<int>(A[0].size());
    v->A.resize(m, n);
    bool shape_ok = true;
    for (int r = 0; r < m; ++r) {
      if (!A[r].is_array() || static_cast<int>(A[r].size()) != n) {
        ck.err("vehicle.A[" + std::to_string(r) + "]", "rows must all have " +
                                                           std::to_string(n) + " entries");
        shape_ok = false;
        continue;
      }
      for (int c = 0; c < n; ++c) {
        if (!A[r][c].is_number()) {
          ck.err("vehicle.A[" + std::to_string(r) + "][" + std::to_string(c) + "]",
                 "expected a number");
          shape_ok = false;
        } else {
          v->A(r, c) = A[r][c].get<double>();
        }
      }
    }
    if (shape_ok && m >= n) {
      ck.err("vehicle.A", "needs more actuators than task dimensions (rows < columns)");
      shape_ok = false;
    }
    if (shape_ok) {
      *m_out = m;
      *n_out = n;
    }
    if (j.contains("energy_weights")) {
      ck.vector(j["energy_weights"], "vehicle.energy_weights", &v->energy_weights,
                shape_ok ? n : -1, true);
    }
  } else {
    ck.err("vehicle.type", "unknown type '" + type + "' (expected hexarotor or matrix)");
  }
}

void parse_regimes(const json& j, Checker& ck, std::vector<RegimeSpec>* out, int n) {
  if (!j.is_array() || j.empty()) {
    ck.err("regimes", "expected a nonempty array");
    return;
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string path = "regimes[" + std::to_string(i) + "]";
    RegimeSpec rs;
    const json& r = j[i];
    if (r.is_string()) {
      const std::string s = r.get<std::string>();
      if (s == "unidirectional") {
        out->push_back(rs);
      } else if (s == "bidirectional") {
        ck.err(path, "bidirectional regime needs a bound: use {\"type\": \"bidirectional\", \"bound\": ...}");
      } else {
        ck.err(path, "unknown regime '" + s + "'");
      }
      continue;
    }
    if (!r.is_object()) {
      ck.err(path, "expected a string or an object");
      continue;
    }
    if (!r.contains("type") || !r["type"].is_string()) {
      ck.err(path + ".type", "required string missing");
      continue;
    }
    const std::string type = r["type"].get<std::string>();
    if (type == "unidirectional") {
      ck.known_keys(r, path, {"type"});
      out->push_back(rs);
    } else if (type == "bidirectional") {
      ck.known_keys(r, path, {"type", "bound", "bounds"});
      rs.box = true;
      if (r.contains("bound") == r.contains("bounds")) {
        ck.err(path, "give exactly one of 'bound' or 'bounds'");
        continue;
      }
      bool ok = true;
      if (r.contains("bound")) ok = ck.number(r["bound"], path + ".bound", &rs.bound, true);
      if (r.contains("bounds")) ok = ck.vector(r["bounds"], path + ".bounds", &rs.bounds, n, true);
      if (ok) out->push_back(rs);
    } else {
      ck.err(path + ".type", "unknown regime '" + type + "'");
    }
  }
}

void parse_task(const json& j, Checker& ck, TaskSpec* t, int m, double default_fz) {
  if (!ck.object(j, "task")) return;
  if (!j.contains("type") || !j["type"].is_string()) {
    ck.err("task.type", "required string missing (wrench, wrench_list or sweep)");
    return;
  }
  const std::string type = j["type"].get<std::string>();
  if (type == "wrench") {
    t->type = TaskSpec::Type::Wrench;
    ck.known_keys(j, "task", {"type", "wrench"});
    Eigen::VectorXd w;
    if (!j.contains("wrench")) {
      ck.err("task.wrench", "required field missing");
    } else if (ck.vector(j["wrench"], "task.wrench", &w, m)) {
      t->wrenches.push_back(w);
    }
  } else if (type == "wrench_list") {
    t->type = TaskSpec::Type::WrenchList;
    ck.known_keys(j, "task", {"type", "wrenches"});
    if (!j.contains("wrenches") || !j["wrenches"].is_array() || j["wrenches"].empty()) {
      ck.err("task.wrenches", "expected a nonempty array of wrenches");
      return;
    }
    for (std::size_t i = 0; i < j["wrenches"].size(); ++i) {
      Eigen::VectorXd w;
      if (ck.vector(j["wrenches"][i], "task.wrenches[" + std::to_string(i) + "]", &w, m)) {
        t->wrenches.push_back(w);
      }
    }
  } else if (type == "sweep") {
    t->type = TaskSpec::Type::Sweep;
    ck.known_keys(j, "task", {"type", "component", "min", "max", "step", "base_wrench"});
    if (!j.contains("component")) {
      ck.err("task.component", "required field missing");
    } else if (j["component"].is_string()) {
      const std::string c = j["component"].get<std::string>();
      int idx = -1;
      for (int k = 0; k < 4; ++k) {
        if (c == kComponentNames[k]) idx = k;
      }
      if (idx < 0) {
        ck.err("task.component", "unknown component '" + c + "' (tau_x, tau_y, tau_z, f_z or an index)");
      } else if (m >= 0 && idx >= m) {
        ck.err("task.component", "component index out of range for this vehicle");
      } else {
        t->component = idx;
      }
    } else if (j["component"].is_number_integer()) {
      const int idx = j["component"].get<int>();
      if (idx < 0 || (m >= 0 && idx >= m)) {
        ck.err("task.component", "component index out of range");
      } else {
        t->component = idx;
      }
    } else {
      ck.err("task.component", "expected a name or an index");
    }
    for (const char* key : {"min", "max", "step"}) {
      if (!j.contains(key)) ck.err(std::string("task.") + key, "required field missing");
    }
    if (j.contains("min")) ck.number(j["min"], "task.min", &t->min);
    if (j.contains("max")) ck.number(j["max"], "task.max", &t->max);
    if (j.contains("step") && ck.number(j["step"], "task.step", &t->step) && !(t->step > 0.0)) {
      ck.err("task.step", "must be > 0");
    }
    if (j.contains("min") && j.contains("max") && t->max < t->min) {
      ck.err("task.max", "must be >= task.min");
    }
    if (j.contains("base_wrench")) {
      ck.vector(j["base_wrench"], "task.base_wrench", &t->base_wrench, m);
    } else if (default_fz < 0.0) {
      ck.err("task.base_wrench", "required for matrix vehicles (no default hover wrench)");
    } else if (m == 4) {
      t->base_wrench = Eigen::Vector4d(0.0, 0.0, 0.0, default_fz);
    }
  } else {
    ck.err("task.type", "unknown type '" + type + "' (wrench, wrench_list or sweep)");
  }
}

void parse_solver(const json& j, Checker& ck, SolverSpec* s) {
  if (!ck.object(j, "solver")) return;
  ck.known_keys(j, "solver", {"seed", "random_seeds", "kkt_tol", "pareto_points", "with_fronts"});
  long long v = 0;
  if (j.contains("seed") && ck.integer(j["seed"], "solver.seed", &v)) {
    if (v < 0) {
      ck.err("solver.seed", "must be >= 0");
    } else {
      s->seed = static_cast<std::uint64_t>(v);
    }
  }
  if (j.contains("random_seeds") && ck.integer(j["random_seeds"], "solver.random_seeds", &v)) {
    if (v < 0) {
      ck.err("solver.random_seeds", "must be >= 0");
    } else {
      s->random_seeds = static_cast<int>(v);
    }
  }
  if (j.contains("kkt_tol")) ck.number(j["kkt_tol"], "solver.kkt_tol", &s->kkt_tol, true);
  if (j.contains("pareto_points") && ck.integer(j["pareto_points"], "solver.pareto_points", &v)) {
    if (v < 2) {
      ck.err("solver.pareto_points", "must be >= 2");
    } else {
      s->pareto_points = static_cast<int>(v);
    }
  }
  if (j.contains("with_fronts")) {
    if (j["with_fronts"].is_boolean()) {
      s->with_fronts = j["with_fronts"].get<bool>();
    } else {
      ck.err("solver.with_fronts", "expected a boolean");
    }
  }
}

void parse_output(const json& j, Checker& ck, OutputSpec* o) {
  if (!ck.object(j, "output")) return;
  ck.known_keys(j, "output", {"directory", "formats"});
  if (j.contains("directory")) {
    if (j["directory"].is_string()) {
      o->directory = j["directory"].get<std::string>();
    } else {
      ck.err("output.directory", "expected a string");
    }
  }
  if (j.contains("formats")) {
    if (!j["formats"].is_array()) {
      ck.err("output.formats", "expected an array");
      return;
    }
    o->csv = o->json = false;
    for (std::size_t i = 0; i < j["formats"].size(); ++i) {
      const json& f = j["formats"][i];
      if (f.is_string() && f.get<std::string>() == "csv") {
        o->csv = true;
      } else if (f.is_string() && f.get<std::string>() == "json") {
        o->json = true;
      } else {
        ck.err("output.formats[" + std::to_string(i) + "]", "expected \"csv\" or \"json\"");
      }
    }
    if (!o->csv && !o->json) ck.err("output.formats", "must enable at least one format");
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

ExperimentConfig parse_config(const std::string& text) {
  std::vector<std::string> problems;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    problems.push_back(std::string("JSON parse error: ") + e.what());
    throw ConfigError(std::move(problems));
  }

  Checker ck{problems};
  ExperimentConfig cfg;
  if (!root.is_object()) {
    ck.err("(root)", "expected an object");
    throw ConfigError(std::move(problems));
  }
  ck.known_keys(root, "", {"vehicle", "regimes", "task", "solver", "output"});
  for (const char* key : {"vehicle", "regimes", "task"}) {
    if (!root.contains(key)) ck.err(key, "required section missing");
  }

  int m = -1, n = -1;
  if (root.contains("vehicle")) parse_vehicle(root["vehicle"], ck, &cfg.vehicle, &m, &n);
  if (root.contains("regimes")) parse_regimes(root["regimes"], ck, &cfg.regimes, n);
  if (root.contains("task")) {
    const double default_fz =
        (cfg.vehicle.type == VehicleSpec::Type::Hexarotor && cfg.vehicle.mass > 0.0)
            ? hover_thrust(cfg.vehicle.mass)
            : -1.0;
    parse_task(root["task"], ck, &cfg.task, m, default_fz);
  }
  if (root.contains("solver")) parse_solver(root["solver"], ck, &cfg.solver);
  if (root.contains("output")) parse_output(root["output"], ck, &cfg.output);

  if (!problems.empty()) throw ConfigError(std::move(problems));
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"cannot open config file: " + path});
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

ActuationSystem ExperimentConfig::build_system() const {
  if (vehicle.type == VehicleSpec::Type::Hexarotor) {
    return build_hexarotor(vehicle.mass, vehicle.radius, vehicle.k_f, vehicle.k_m,
                           vehicle.rotor_offset_angle, vehicle.spin_pattern,
                           vehicle.energy_weights);
  }
  Eigen::VectorXd c = vehicle.energy_weights;
  if (c.size() == 0) c = Eigen::VectorXd::Ones(vehicle.A.cols());
  return ActuationSystem(vehicle.A, c);
}

std::vector<Regime> ExperimentConfig::build_regimes(int actuator_count) const {
  std::vector<Regime> out;
  for (const auto& rs : regimes) {
    if (!rs.box) {
      out.push_back(Regime::unidirectional());
    } else if (rs.bounds.size() > 0) {
      out.push_back(Regime::bidirectional_box(rs.bounds));
    } else {
      out.push_back(Regime::bidirectional_box(rs.bound, actuator_count));
    }
  }
  return out;
}

std::vector<double> ExperimentConfig::sweep_values() const {
  if (task.type != TaskSpec::Type::Sweep) return {};
  std::vector<double> vals;
  const int count = static_cast<int>(std::floor((task.max - task.min) / task.step + 1e-9)) + 1;
  for (int i = 0; i < count; ++i) vals.push_back(task.min + i * task.step);
  return vals;
}

std::vector<Eigen::VectorXd> ExperimentConfig::build_wrenches() const {
  if (task.type != TaskSpec::Type::Sweep) return task.wrenches;
  std::vector<Eigen::VectorXd> out;
  for (const double v : sweep_values()) {
    Eigen::VectorXd w = task.base_wrench;
    w[task.component] = v;
    out.push_back(w);
  }
  return out;
}

std::string config_to_json(const ExperimentConfig& config) {
  json j;
  json& v = j["vehicle"];
  if (config.vehicle.type == VehicleSpec::Type::Hexarotor) {
    v["type"] = "hexarotor";
    v["mass"] = config.vehicle.mass;
    v["radius"] = config.vehicle.radius;
    v["k_f"] = config.vehicle.k_f;
    v["k_m"] = config.vehicle.k_m;
    v["rotor_offset_angle"] = config.vehicle.rotor_offset_angle;
    if (!config.vehicle.spin_pattern.empty()) v["spin_pattern"] = config.vehicle.spin_pattern;
  } else {
    v["type"] = "matrix";
    json rows = json::array();
    for (Eigen::Index r = 0; r < config.vehicle.A.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < config.vehicle.A.cols(); ++c) row.push_back(config.vehicle.A(r, c));
      rows.push_back(row);
    }
    v["A"] = rows;
  }
  if (config.vehicle.energy_weights.size() > 0) {
    v["energy_weights"] =
        std::vector<double>(config.vehicle.energy_weights.data(),
                            config.vehicle.energy_weights.data() + config.vehicle.energy_weights.size());
  }

  j["regimes"] = json::array();
  for (const auto& rs : config.regimes) {
    if (!rs.box) {
      j["regimes"].push_back("unidirectional");
    } else if (rs.bounds.size() > 0) {
      j["regimes"].push_back(
          {{"type", "bidirectional"},
           {"bounds", std::vector<double>(rs.bounds.data(), rs.bounds.data() + rs.bounds.size())}});
    } else {
      j["regimes"].push_back({{"type", "bidirectional"}, {"bound", rs.bound}});
    }
  }

  json& t = j["task"];
  auto wrench_array = [](const Eigen::VectorXd& w) {
    return std::vector<double>(w.data(), w.data() + w.size());
  };
  switch (config.task.type) {
    case TaskSpec::Type::Wrench:
      t["type"] = "wrench";
      t["wrench"] = wrench_array(config.task.wrenches.at(0));
      break;
    case TaskSpec::Type::WrenchList: {
      t["type"] = "wrench_list";
      json ws = json::array();
      for (const auto& w : config.task.wrenches) ws.push_back(wrench_array(w));
      t["wrenches"] = ws;
      break;
    }
    case TaskSpec::Type::Sweep:
      t["type"] = "sweep";
      t["component"] = (config.task.base_wrench.size() == 4)
                           ? json(kComponentNames[config.task.component])
                           : json(config.task.component);
      t["min"] = config.task.min;
      t["max"] = config.task.max;
      t["step"] = config.task.step;
      t["base_wrench"] = wrench_array(config.task.base_wrench);
      break;
  }

  j["solver"] = {{"seed", config.solver.seed},
                 {"random_seeds", config.solver.random_seeds},
                 {"kkt_tol", config.solver.kkt_tol},
                 {"pareto_points", config.solver.pareto_points},
                 {"with_fronts", config.solver.with_fronts}};
  std::vector<std::string> formats;
  if (config.output.csv) formats.push_back("csv");
  if (config.output.json) formats.push_back("json");
  j["output"] = {{"directory", config.output.directory}, {"formats", formats}};
  return j.dump(2) + "\n";
}

std::string config_schema_help() {
  return R"(Config schema (JSON):
{
  "vehicle": {
    "type": "hexarotor",              // or "matrix" with "A": [[...], ...]
    "mass": 0.5, "radius": 0.25,      // kg, m (hexarotor)
    "k_f": 1.0, "k_m": 0.05,          // thrust/drag coefficients per unit effort
    "rotor_offset_angle": 0.0,        // optional, radians
    "spin_pattern": [1,-1,1,-1,1,-1], // optional
    "energy_weights": [1,1,1,1,1,1]   // optional, c_i > 0
  },
  "regimes": [                        // one or more
    "unidirectional",
    {"type": "bidirectional", "bound": 5.0}   // or "bounds": [..per actuator..]
  ],
  "task": {
    "type": "sweep",                  // or "wrench" {"wrench": [...] }
                                      // or "wrench_list" {"wrenches": [[...], ...]}
    "component": "tau_x",             // tau_x | tau_y | tau_z | f_z or an index
    "min": 0.0, "max": 1.0, "step": 0.05,
    "base_wrench": [0, 0, 0, 4.905]   // optional for hexarotor (defaults to hover)
  },
  "solver": {                         // optional
    "seed": 0, "random_seeds": 16, "kkt_tol": 1e-7,
    "pareto_points": 15, "with_fronts": false
  },
  "output": {                         // optional
    "directory": "results", "formats": ["csv", "json"]
  }
}
)";
}

}  // namespace fiberalloc
