#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fiberalloc/actuation.hpp"
#include "fiberalloc/fiber.hpp"

namespace fiberalloc {

// Carries every problem found in one pass; what() joins them.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct VehicleSpec {
  enum class Type { Hexarotor, Matrix };
  Type type = Type::Hexarotor;
  // hexarotor parameters
  double mass = 0.0;
  double radius = 0.0;
  double k_f = 0.0;
  double k_m = 0.0;
  double rotor_offset_angle = 0.0;
  std::vector<int> spin_pattern;  // empty = alternating +1,-1,...
  // explicit allocation matrix
  Eigen::MatrixXd A;
  // shared; empty = all ones
  Eigen::VectorXd energy_weights;
};

struct RegimeSpec {
  bool box = false;
  double bound = 0.0;        // uniform box bound when bounds is empty
  Eigen::VectorXd bounds;    // per-actuator bounds (box only)
  std::string name() const { return box ? "bidirectional" : "unidirectional"; }
};

struct TaskSpec {
  enum class Type { Wrench, WrenchList, Sweep };
  Type type = Type::Wrench;
  std::vector<Eigen::VectorXd> wrenches;  // Wrench (one entry) / WrenchList
  // sweep over one wrench component
  int component = 0;
  double min = 0.0;
  double max = 0.0;
  double step = 0.0;
  Eigen::VectorXd base_wrench;  // empty = hexarotor hover (0,0,0, m*g)
};

struct SolverSpec {
  std::uint64_t seed = 0;
  int random_seeds = 16;
  double kkt_tol = 1e-7;
  int pareto_points = 15;
  bool with_fronts = false;
};

struct OutputSpec {
  std::string directory = "results";
  bool csv = true;
  bool json = true;
};

struct ExperimentConfig {
  VehicleSpec vehicle;
  std::vector<RegimeSpec> regimes;
  TaskSpec task;
  SolverSpec solver;
  OutputSpec output;

  ActuationSystem build_system() const;
  std::vector<Regime> build_regimes(int actuator_count) const;
  // Sweep tasks expand to one wrench per sample; parallel to sweep_values().
  std::vector<Eigen::VectorXd> build_wrenches() const;
  std::vector<double> sweep_values() const;  // empty unless the task is a sweep
};

// Parses and validates a JSON config; throws ConfigError listing every
// problem found, not just the first.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Normalized echo (defaults filled in); parse_config(config_to_json(c))
// reproduces c.
std::string config_to_json(const ExperimentConfig& config);

// Schema reference printed on usage errors.
std::string config_schema_help();

}  // namespace fiberalloc
