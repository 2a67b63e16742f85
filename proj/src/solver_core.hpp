#pragma once

// Internal per-orthant machinery shared by the single-objective solvers and
// the Pareto tracer. Fixing a sign pattern makes both objectives smooth and
// convex on the restricted slice, so each subproblem is solved by the
// log-barrier engine plus an active-set Newton polish.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "fiberalloc/fiber.hpp"

namespace fiberalloc::detail {

enum class Kind { Energy, Promptness };

struct PatternOutcome {
  bool usable = false;   // slice had interior and the barrier produced a point
  bool converged = false;
  Eigen::VectorXd u;
  double value = 0.0;         // exact objective at u
  Eigen::VectorXd lambda;     // wrench multipliers, minimization convention
  Eigen::VectorXd mu_regime;  // regime-row multipliers in Regime::residuals order
  double mu_cap = 0.0;        // multiplier of the J1 <= cap row
  int newton_steps = 0;
  bool trust_active = false;  // safety ball hit: objective unbounded on slice
};

Eigen::VectorXi pattern_of(const Eigen::VectorXd& u);

// Seed z-points: origin, +-r e_j over axis directions for four radii, then
// `random_seeds` uniform draws (kept inside the box slice when possible).
std::vector<Eigen::VectorXd> seed_points(const FeasibleFiber& fiber,
                                         std::uint64_t seed, int random_seeds);

// Distinct sign patterns of u at the seeds plus the particular/interior
// points, each with a representative z, in first-appearance order.
std::vector<std::pair<Eigen::VectorXi, Eigen::VectorXd>> harvest_patterns(
    const FeasibleFiber& fiber, const std::vector<Eigen::VectorXd>& seeds);

// min f over {u = u_p + Nz : s o u >= 0, regime bounds, J1(u) <= energy_cap}.
// energy_cap = NaN disables the cap row. z_init only seeds the interior
// search; the result does not depend on it beyond the sign pattern already
// being fixed.
PatternOutcome solve_pattern(const FeasibleFiber& fiber, Kind kind,
                             const Eigen::VectorXi& s, double energy_cap,
                             const Eigen::VectorXd& z_init);

// Sign pattern(s) of the minimizer of sum c_i (u_i^2 + d^2)^{3/4} over the
// box slice; seeds the exact bidirectional energy solve with the right
// orthant. A second pattern flips coordinates that sat near zero.
std::vector<Eigen::VectorXi> smoothed_energy_patterns(const FeasibleFiber& fiber);

// When the feasible set is a single point (every slack zero and the tight
// rows pin all null-space coordinates), returns it.
std::optional<Eigen::VectorXd> singleton_point(const FeasibleFiber& fiber);

double kkt_scale_of(const FeasibleFiber& fiber);

// Aggregated unscaled KKT residual in the minimization convention. Promptness
// rows with |u_i| below the smoothness tolerance use the subdifferential
// band of the kink. energy_cap = NaN drops the cap row.
double kkt_residual(const FeasibleFiber& fiber, Kind kind, const Eigen::VectorXd& u,
                    const Eigen::VectorXd& lambda, const Eigen::VectorXd& mu_regime,
                    double mu_cap, double energy_cap);

}  // namespace fiberalloc::detail
