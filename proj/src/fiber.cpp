#include "fiberalloc/fiber.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fiberalloc/barrier.hpp"

namespace fiberalloc {

namespace {
// Separates genuine infeasibility from feasibility-program accuracy.
constexpr double kEmptyDecisionTol = 1e-7;
constexpr double kOrthantTol = 1e-6;

double equality_tol(const Eigen::VectorXd& w) { return 1e-10 * (1.0 + w.norm()); }
}  // namespace

Regime Regime::unidirectional() { return Regime(Kind::Unidirectional); }

Regime Regime::bidirectional_box(Eigen::VectorXd bounds) {
  if (bounds.size() == 0 || (bounds.array() <= 0.0).any()) {
    throw std::invalid_argument("Regime: box bounds must be strictly positive");
  }
  Regime r(Kind::BidirectionalBox);
  r.bounds_ = std::move(bounds);
  return r;
}

Regime Regime::bidirectional_box(double bound, int n) {
  return bidirectional_box(Eigen::VectorXd::Constant(n, bound));
}

const Eigen::VectorXd& Regime::bounds() const {
  if (!is_box()) throw std::logic_error("Regime: unidirectional regime has no box bounds");
  return bounds_;
}

Eigen::VectorXd Regime::residuals(const Eigen::VectorXd& u) const {
  const int n = static_cast<int>(u.size());
  if (kind_ == Kind::Unidirectional) return -u;
  if (bounds_.size() != n) {
    throw std::invalid_argument("Regime: bound count does not match effort length");
  }
  Eigen::VectorXd r(2 * n);
  r.head(n) = u - bounds_;
  r.tail(n) = -u - bounds_;
  return r;
}

Eigen::MatrixXd null_space_basis(const ActuationSystem& sys) {
  const int m = sys.task_dim();
  const int n = sys.actuator_count();
  const int k = n - m;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.matrix(), Eigen::ComputeFullV);
  Eigen::MatrixXd N = svd.matrixV().rightCols(k);

  // Deterministic convention: sort columns by descending magnitude of the
  // first nonzero entry, then make that entry positive.
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  auto first_nonzero = [&](int col) {
    for (int i = 0; i < n; ++i) {
      if (std::abs(N(i, col)) > 1e-12) return N(i, col);
    }
    return 0.0;
  };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(first_nonzero(a)) > std::abs(first_nonzero(b));
  });
  Eigen::MatrixXd out(n, k);
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd col = N.col(order[j]);
    if (first_nonzero(order[j]) < 0.0) col = -col;
    out.col(j) = col;
  }
  return out;
}

FeasibleFiber fiber_of(const ActuationSystem& sys, const Eigen::VectorXd& w,
                       const Regime& regime) {
  if (w.size() != sys.task_dim()) {
    throw std::invalid_argument("fiber_of: wrench length does not match task dimension");
  }
  if (regime.is_box() && regime.bounds().size() != sys.actuator_count()) {
    throw std::invalid_argument("fiber_of: box bound count does not match actuator count");
  }
  FeasibleFiber f(sys, w, regime);
  const Eigen::MatrixXd& A = sys.matrix();
  Eigen::LLT<Eigen::MatrixXd> gram(A * A.transpose());
  f.u_particular_ = A.transpose() * gram.solve(w);
  f.N_ = null_space_basis(sys);

  const Eigen::VectorXd r_part = regime.residuals(f.u_particular_);
  f.particular_feasible_ = (r_part.maxCoeff() <= kFeasTol);

  // Feasibility program in null-space coordinates: minimize the worst bound
  // violation over z. All residuals are affine in z.
  const int n = sys.actuator_count();
  const int k = f.null_dim();
  std::vector<SmoothFunction> cons;
  auto add_row = [&](const Eigen::VectorXd& grad_z, double offset) {
    cons.push_back(affine_function(grad_z, offset));
  };
  if (regime.is_box()) {
    for (int i = 0; i < n; ++i) add_row(f.N_.row(i).transpose(), f.u_particular_[i] - regime.bounds()[i]);
    for (int i = 0; i < n; ++i) add_row(-f.N_.row(i).transpose(), -f.u_particular_[i] - regime.bounds()[i]);
  } else {
    for (int i = 0; i < n; ++i) add_row(-f.N_.row(i).transpose(), -f.u_particular_[i]);
  }
  double scale = 1.0 + f.u_particular_.norm();
  if (regime.is_box()) scale += regime.bounds().maxCoeff();
  const PhaseOneResult ph = phase_one(cons, Eigen::VectorXd::Zero(k), 100.0 * scale);

  f.interior_point_ = f.point_at(ph.x);
  f.interior_slack_ = std::max(0.0, -ph.max_violation);
  f.infeasibility_ = std::max(0.0, ph.max_violation);
  f.empty_ = ph.max_violation > kEmptyDecisionTol;
  return f;
}

Eigen::MatrixXd projector_at(const ActuationSystem& sys, const Eigen::VectorXd& v) {
  const Eigen::MatrixXd J = sys.jacobian(v);
  const Eigen::MatrixXd JJt = J * J.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(JJt, Eigen::EigenvaluesOnly);
  const double emax = eig.eigenvalues().maxCoeff();
  if (emax <= 0.0 || eig.eigenvalues().minCoeff() <= 1e-18 * emax) {
    std::string zeros;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (std::abs(v[i]) <= 1e-9 * (1.0 + v.cwiseAbs().maxCoeff())) {
        zeros += (zeros.empty() ? "" : ", ") + std::to_string(i);
      }
    }
    throw std::domain_error("projector_at: Jacobian row rank deficient; near-zero speeds at indices [" + zeros + "]");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(JJt);
  const int n = sys.actuator_count();
  return Eigen::MatrixXd::Identity(n, n) - J.transpose() * llt.solve(J);
}

ConflictSample restricted_gradients(const FeasibleFiber& fiber, const Eigen::VectorXd& u) {
  const ActuationSystem& sys = fiber.system();
  const double eq = (sys.matrix() * u - fiber.wrench()).norm();
  if (eq > equality_tol(fiber.wrench())) {
    throw std::invalid_argument("restricted_gradients: point is off the fiber (|Au - w| = " +
                                std::to_string(eq) + ")");
  }
  ConflictSample s;
  s.u = u;
  const Eigen::VectorXd g1_full = energy_grad_u(sys, u);
  PromptnessGradient g2_full = promptness_grad_u(sys, u);  // throws when S singular
  s.nonsmooth_indices = g2_full.nonsmooth_indices;

  const Eigen::MatrixXd& N = fiber.null_basis();
  s.restricted_grad_energy = N * (N.transpose() * g1_full);
  s.restricted_grad_promptness = N * (N.transpose() * g2_full.grad);

  const double tol1 = 1e-8 * (1.0 + energy_grad_u(sys, fiber.u_particular()).norm());
  double ref2 = g2_full.grad.norm();
  try {
    ref2 = promptness_grad_u(sys, fiber.u_particular()).grad.norm();
  } catch (const std::domain_error&) {
    // singular Gramian at u_particular; scale from the query point instead
  }
  const double tol2 = 1e-8 * (1.0 + ref2);

  const double n1 = s.restricted_grad_energy.norm();
  const double n2 = s.restricted_grad_promptness.norm();
  if (n1 < tol1 && n2 < tol2) {
    s.kappa = 1.0;
    s.kappa_defined = true;
  } else if (n1 < tol1 || n2 < tol2) {
    s.kappa = 0.0;
    s.kappa_defined = false;
  } else {
    s.kappa = std::clamp(s.restricted_grad_energy.dot(s.restricted_grad_promptness) / (n1 * n2), -1.0, 1.0);
    s.kappa_defined = true;
  }
  return s;
}

FeasibilityReport is_feasible(const FeasibleFiber& fiber, const Eigen::VectorXd& u) {
  FeasibilityReport rep;
  rep.equality_residual = (fiber.system().matrix() * u - fiber.wrench()).norm();
  const Eigen::VectorXd r = fiber.regime().residuals(u);
  const int n = static_cast<int>(u.size());
  for (int j = 0; j < r.size(); ++j) {
    if (r[j] > kFeasTol) rep.violations.emplace_back(j % n, r[j]);
  }
  rep.feasible = rep.violations.empty() && rep.equality_residual <= equality_tol(fiber.wrench());
  return rep;
}

OrthantVerdict orthant_nullspace_intersection(const ActuationSystem& sys) {
  const Eigen::MatrixXd N = null_space_basis(sys);
  const int n = static_cast<int>(N.rows());
  const int k = static_cast<int>(N.cols());

  // maximize tau s.t. tau <= (N z)_i for all i, ||z||^2 <= 1, over y = (z, tau)
  std::vector<SmoothFunction> cons;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd g(k + 1);
    g.head(k) = -N.row(i).transpose();
    g[k] = 1.0;
    cons.push_back(affine_function(g, 0.0));
  }
  {
    SmoothFunction ball;
    ball.value = [k](const Eigen::VectorXd& y) { return y.head(k).squaredNorm() - 1.0; };
    ball.gradient = [k](const Eigen::VectorXd& y) {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(k + 1);
      g.head(k) = 2.0 * y.head(k);
      return g;
    };
    ball.hessian = [k](const Eigen::VectorXd&) {
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(k + 1, k + 1);
      h.topLeftCorner(k, k) = 2.0 * Eigen::MatrixXd::Identity(k, k);
      return h;
    };
    cons.push_back(ball);
  }
  Eigen::VectorXd objdir = Eigen::VectorXd::Zero(k + 1);
  objdir[k] = -1.0;  // maximize tau
  Eigen::VectorXd y0 = Eigen::VectorXd::Zero(k + 1);
  y0[k] = -0.5;
  const BarrierResult r = minimize_barrier(affine_function(objdir, 0.0), cons, y0);

  OrthantVerdict v;
  const Eigen::VectorXd z = r.x.head(k);
  const double attained = (N * z).size() > 0 ? (N * z).minCoeff() : 0.0;
  v.trivial = attained <= kOrthantTol;
  if (v.trivial) {
    v.max_min_entry = std::max(0.0, attained);
    v.witness = Eigen::VectorXd::Zero(n);
  } else {
    const Eigen::VectorXd zhat = z / z.norm();
    v.witness = N * zhat;
    v.max_min_entry = v.witness.minCoeff();
  }
  return v;
}

DualFiberClass classify_dual_fiber(double a1, double a2, double w, PlaneQuadrant q) {
  if (a1 <= 0.0 || a2 <= 0.0) {
    throw std::invalid_argument("classify_dual_fiber: gains must be positive");
  }
  const bool mixed = (q == PlaneQuadrant::QII || q == PlaneQuadrant::QIV);
  if (mixed) return w == 0.0 ? DualFiberClass::DegenerateLines : DualFiberClass::Hyperbola;
  if (w == 0.0) return DualFiberClass::DegeneratePoint;
  const bool matched = (q == PlaneQuadrant::QI) ? (w > 0.0) : (w < 0.0);
  return matched ? DualFiberClass::Ellipse : DualFiberClass::Empty;
}

}  // namespace fiberalloc
