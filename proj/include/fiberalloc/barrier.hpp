#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace fiberalloc {

// Scalar function on R^d with gradient and Hessian callbacks. value() may
// return +inf (or NaN) outside its domain; line searches treat that as an
// infeasible trial point. gradient/hessian are only called at points where
// value() was finite. A null hessian callback means identically zero.
struct SmoothFunction {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hessian;
};

// g.x + h
SmoothFunction affine_function(Eigen::VectorXd g, double h);
// ||x - center||^2 - radius^2
SmoothFunction ball_function(Eigen::VectorXd center, double radius);

struct BarrierOptions {
  double t_init = 1.0;
  double mu = 20.0;          // outer path multiplier
  double gap_tol = 1e-11;    // stop when m_ineq / t <= gap_tol
  double newton_tol = 1e-12; // Newton decrement^2 / 2 threshold per stage
  int max_outer = 60;
  int max_newton = 120;
  double min_step = 1e-14;
  // Optional early exit, checked after every accepted Newton step.
  std::function<bool(const Eigen::VectorXd&)> stop_when;
};

struct BarrierResult {
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;  // one per constraint, nonnegative
  bool converged = false;
  bool stopped_early = false;
  int newton_steps = 0;
  double gap = 0.0;
};

// min objective(x) s.t. constraints[j](x) <= 0, via the log-barrier path.
// x0 must be strictly feasible (all constraint values < 0).
BarrierResult minimize_barrier(const SmoothFunction& objective,
                               const std::vector<SmoothFunction>& constraints,
                               const Eigen::VectorXd& x0,
                               const BarrierOptions& opts = {});

struct PhaseOneResult {
  Eigen::VectorXd x;
  double max_violation = 0.0;  // max_j constraints[j](x) at the returned x
  bool strictly_feasible = false;
  bool converged = false;
};

// Finds a point minimizing max_j constraints[j](x) within a trust ball
// ||x - x0|| <= radius, by solving min tau s.t. f_j(x) <= tau. Stops early
// once max violation < -stop_margin (pass stop_margin <= 0 to disable).
PhaseOneResult phase_one(const std::vector<SmoothFunction>& constraints,
                         const Eigen::VectorXd& x0, double radius,
                         double stop_margin = 0.0,
                         const BarrierOptions& opts = {});

}  // namespace fiberalloc
