#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fiberalloc/fiber.hpp"
#include "fiberalloc/objectives.hpp"

namespace fiberalloc {

// Multiplier conventions (minimization form, L = f - lambda^T(Au - w) + mu^T g):
//   energy program:     f = J1,  multipliers = lambda.
//   promptness program: f = J2 = -1/2 log det S, multipliers = eta = -2 lambda,
//     so that interior stationarity reads a_i^T S^{-1} a_i = eta^T a_i.
// bound_multipliers are the mu >= 0 of the regime rows in Regime::residuals
// order (energy: for J1; promptness: for the J2 minimization).
struct SolveReport {
  bool converged = false;
  Eigen::VectorXd u_star;
  ObjectiveValue objective;
  Eigen::VectorXd multipliers;
  Eigen::VectorXd bound_multipliers;
  double kkt_residual = 0.0;
  double kkt_scale = 1.0;      // 1 + |grad J1(u_particular)|
  std::vector<int> active_set; // actuator indices with a tight regime bound
  int seeds_tried = 0;
  int iterations = 0;
  std::string message;
};

struct SolveOptions {
  std::uint64_t seed = 0;   // stream for the random null-space seeds
  int random_seeds = 16;
  double kkt_tol = 1e-7;    // accepted when kkt_residual < kkt_tol * kkt_scale
  double active_tol = 1e-6; // bound slack below this reports as active
};

// Global minimizer of J1 on the feasible fiber. Throws std::invalid_argument
// on an empty fiber (message carries the violation certificate).
SolveReport min_energy(const FeasibleFiber& fiber, const SolveOptions& opts = {});

// Maximizer of log det S on the feasible fiber: global in the unidirectional
// regime, best-of-seeds across sign orthants in the bidirectional regime.
// Throws std::invalid_argument on an empty fiber and std::domain_error when
// no feasible point has a positive-definite Gramian.
SolveReport max_promptness(const FeasibleFiber& fiber, const SolveOptions& opts = {});

// Independent certificate checks: max-norm aggregate of stationarity,
// primal/dual feasibility and complementary slackness. Unscaled.
double kkt_residual_energy(const FeasibleFiber& fiber, const Eigen::VectorXd& u,
                           const Eigen::VectorXd& lambda,
                           const Eigen::VectorXd& bound_multipliers);
double kkt_residual_promptness(const FeasibleFiber& fiber, const Eigen::VectorXd& u,
                               const Eigen::VectorXd& eta,
                               const Eigen::VectorXd& bound_multipliers);

struct ParetoPoint {
  double j1 = 0.0;
  double j2 = 0.0;
  Eigen::VectorXd u;
  double epsilon = 0.0;       // energy cap of the scalarized subproblem (endpoints: own j1)
  double kkt_residual = 0.0;  // certificate of that subproblem
  bool converged = true;
};

struct ParetoFront {
  std::vector<ParetoPoint> points;  // j1 strictly ascending, j2 strictly descending
  double extent = 0.0;              // polyline arc length in (j1, j2)
  SolveReport energy_end;
  SolveReport promptness_end;
  bool complete = true;  // false when a scalarized subproblem failed
};

struct ParetoOptions {
  SolveOptions solve;
  bool parallel = true;
};

// Traces the front by epsilon-constraint scalarization: minimize J2 subject
// to J1 <= eps for n_points - 2 caps uniform between the endpoint energies.
ParetoFront pareto_front(const FeasibleFiber& fiber, int n_points,
                         const ParetoOptions& opts = {});

struct SweepCell {
  Eigen::VectorXd wrench;
  int regime_index = 0;
  SolveReport energy;
  SolveReport promptness;
  double j1_at_energy = 0.0;      // J1(u*_en)
  double j2_at_energy = 0.0;      // J2(u*_en)
  double j1_at_promptness = 0.0;  // J1(u*_pr)
  double j2_at_promptness = 0.0;  // J2(u*_pr)
  ParetoFront front;              // filled when SweepOptions::with_fronts
  bool has_front = false;
  bool ok = false;
  std::string error;  // nonempty when the cell failed
};

struct SweepOptions {
  SolveOptions solve;
  bool parallel = true;     // OpenMP over cells; serial loop gives identical results
  bool with_fronts = false;
  int front_points = 15;
};

// Independent cells over the wrench x regime grid, ordered regime-major.
// Cell failures are captured per cell; the sweep always completes.
std::vector<SweepCell> sweep(const ActuationSystem& sys,
                             const std::vector<Eigen::VectorXd>& wrenches,
                             const std::vector<Regime>& regimes,
                             const SweepOptions& opts = {});

}  // namespace fiberalloc
