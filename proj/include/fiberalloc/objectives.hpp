#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fiberalloc/actuation.hpp"

namespace fiberalloc {

// |u_i| below this counts as a kink of the promptness gradient.
inline constexpr double kSmoothnessTol = 1e-8;

// S is declared singular when its smallest eigenvalue drops below this.
double gramian_pd_tol(const Eigen::MatrixXd& S);

// j2 carries +inf when the Gramian is singular; `singular` is the
// authoritative flag so comparisons stay total without inf arithmetic.
struct ObjectiveValue {
  double j1 = 0.0;
  double j2 = 0.0;
  double gramian_logdet = 0.0;
  double min_eig = 0.0;
  bool singular = false;
};

struct PromptnessValue {
  double value = 0.0;
  bool singular = false;
};

// Gradient is undefined across u_i = 0; entries whose |u_i| falls below
// kSmoothnessTol are listed in nonsmooth_indices (one-sided value returned).
struct PromptnessGradient {
  Eigen::VectorXd grad;
  std::vector<int> nonsmooth_indices;
};

// Energy cost in speed coordinates: sum c_i |v_i|^3.
double energy_v(const ActuationSystem& sys, const Eigen::VectorXd& v);

// Same cost in effort coordinates: sum c_i |u_i|^(3/2). Strictly convex.
double energy_u(const ActuationSystem& sys, const Eigen::VectorXd& u);

// d/du_i = (3/2) c_i sign(u_i) sqrt(|u_i|); zero at u_i = 0.
Eigen::VectorXd energy_grad_u(const ActuationSystem& sys, const Eigen::VectorXd& u);

// -1/2 log det S(u), computed through a Cholesky factorization. Returns the
// singular flag instead of throwing when S is not positive definite.
PromptnessValue promptness_u(const ActuationSystem& sys, const Eigen::VectorXd& u);

// d/du_i = -1/2 sign(u_i) a_i^T S(u)^{-1} a_i. Throws std::domain_error on a
// singular Gramian.
PromptnessGradient promptness_grad_u(const ActuationSystem& sys, const Eigen::VectorXd& u);

// Both objectives at once, with the Gramian spectrum attached.
ObjectiveValue evaluate_objectives(const ActuationSystem& sys, const Eigen::VectorXd& u);

// det S(u) as the subset-sum  sum_{|K|=m} det(A_K)^2 prod_{k in K} |u_k|.
// Enumerates C(n, m) column subsets; intended for n <= 12.
double cauchy_binet_det(const ActuationSystem& sys, const Eigen::VectorXd& u);

}  // namespace fiberalloc
