#include "fiberalloc/objectives.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fiberalloc {

double gramian_pd_tol(const Eigen::MatrixXd& S) {
  return 1e-10 * S.trace() / static_cast<double>(S.rows());
}

double energy_v(const ActuationSystem& sys, const Eigen::VectorXd& v) {
  return (sys.energy_weights().array() * v.array().abs().cube()).sum();
}

double energy_u(const ActuationSystem& sys, const Eigen::VectorXd& u) {
  return (sys.energy_weights().array() * u.array().abs().pow(1.5)).sum();
}

Eigen::VectorXd energy_grad_u(const ActuationSystem& sys, const Eigen::VectorXd& u) {
  Eigen::VectorXd g(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    g[i] = 1.5 * sys.energy_weights()[i] * std::copysign(std::sqrt(std::abs(u[i])), u[i]);
    if (u[i] == 0.0) g[i] = 0.0;
  }
  return g;
}

namespace {

// Cholesky of S; ok=false when S fails the positive-definiteness tolerance.
struct GramianFactor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double logdet = 0.0;
  double min_eig = 0.0;
  bool ok = false;
};

GramianFactor factor_gramian(const Eigen::MatrixXd& S) {
  GramianFactor f;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S, Eigen::EigenvaluesOnly);
  f.min_eig = eig.eigenvalues()[0];
  if (!(f.min_eig > gramian_pd_tol(S))) return f;
  f.llt.compute(S);
  if (f.llt.info() != Eigen::Success) return f;
  f.logdet = 2.0 * f.llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  f.ok = true;
  return f;
}

}  // namespace

PromptnessValue promptness_u(const ActuationSystem& sys, const Eigen::VectorXd& u) {
  const GramianFactor f = factor_gramian(sys.gramian(u));
  if (!f.ok) return {std::numeric_limits<double>::infinity(), true};
  return {-0.5 * f.logdet, false};
}

PromptnessGradient promptness_grad_u(const ActuationSystem& sys, const Eigen::VectorXd& u) {
  const GramianFactor f = factor_gramian(sys.gramian(u));
  if (!f.ok) {
    throw std::domain_error("promptness_grad_u: rank-deficient actuation state (Gramian not positive definite)");
  }
  PromptnessGradient out;
  out.grad.resize(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const Eigen::VectorXd a = sys.matrix().col(i);
    const double quad = a.dot(f.llt.solve(a));
    out.grad[i] = -0.5 * std::copysign(1.0, u[i]) * quad;
    if (std::abs(u[i]) <= kSmoothnessTol) out.nonsmooth_indices.push_back(static_cast<int>(i));
  }
  return out;
}

ObjectiveValue evaluate_objectives(const ActuationSystem& sys, const Eigen::VectorXd& u) {
  ObjectiveValue out;
  out.j1 = energy_u(sys, u);
  const GramianFactor f = factor_gramian(sys.gramian(u));
  out.min_eig = f.min_eig;
  if (f.ok) {
    out.gramian_logdet = f.logdet;
    out.j2 = -0.5 * f.logdet;
  } else {
    out.singular = true;
    out.gramian_logdet = -std::numeric_limits<double>::infinity();
    out.j2 = std::numeric_limits<double>::infinity();
  }
  return out;
}

double cauchy_binet_det(const ActuationSystem& sys, const Eigen::VectorXd& u) {
  const int m = sys.task_dim();
  const int n = sys.actuator_count();
  std::vector<int> idx(m);
  for (int i = 0; i < m; ++i) idx[i] = i;
  double total = 0.0;
  Eigen::MatrixXd sub(m, m);
  while (true) {
    for (int k = 0; k < m; ++k) sub.col(k) = sys.matrix().col(idx[k]);
    double prod = sub.determinant();
    prod *= prod;
    for (int k = 0; k < m; ++k) prod *= std::abs(u[idx[k]]);
    total += prod;
    // next m-combination of {0,...,n-1} in lexicographic order
    int p = m - 1;
    while (p >= 0 && idx[p] == n - m + p) --p;
    if (p < 0) break;
    ++idx[p];
    for (int k = p + 1; k < m; ++k) idx[k] = idx[k - 1] + 1;
  }
  return total;
}

}  // namespace fiberalloc
