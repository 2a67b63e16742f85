#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "fiberalloc/actuation.hpp"
#include "fiberalloc/objectives.hpp"

namespace fiberalloc {

// Absolute tolerance on regime inequality violations.
inline constexpr double kFeasTol = 1e-9;

// Hardware admissibility of efforts.
//   Unidirectional:    u_i >= 0            (one constraint per actuator)
//   BidirectionalBox:  |u_i| <= bound_i    (upper block first, then lower)
class Regime {
 public:
  enum class Kind { Unidirectional, BidirectionalBox };

  static Regime unidirectional();
  static Regime bidirectional_box(Eigen::VectorXd bounds);
  static Regime bidirectional_box(double bound, int n);

  Kind kind() const { return kind_; }
  bool is_box() const { return kind_ == Kind::BidirectionalBox; }
  // Valid for BidirectionalBox only.
  const Eigen::VectorXd& bounds() const;

  int constraint_count(int n) const { return is_box() ? 2 * n : n; }
  // Constraint residuals g_j(u); feasible iff all <= 0. Unidirectional:
  // g_i = -u_i. Box: g_i = u_i - bound_i, g_{n+i} = -u_i - bound_i.
  Eigen::VectorXd residuals(const Eigen::VectorXd& u) const;

 private:
  explicit Regime(Kind k) : kind_(k) {}
  Kind kind_;
  Eigen::VectorXd bounds_;
};

struct FeasibilityReport {
  bool feasible = false;
  double equality_residual = 0.0;
  // (actuator index, violation magnitude) for each violated bound
  std::vector<std::pair<int, double>> violations;
};

struct ConflictSample {
  Eigen::VectorXd u;
  double kappa = 0.0;
  bool kappa_defined = false;
  Eigen::VectorXd restricted_grad_energy;
  Eigen::VectorXd restricted_grad_promptness;
  std::vector<int> nonsmooth_indices;  // promptness kink warnings at this u
};

// Affine solution set of A u = w intersected with a regime. u_particular is
// always the min-norm solution of the equality alone; emptiness of the
// regime-feasible set is decided by a feasibility program at construction.
class FeasibleFiber {
 public:
  const ActuationSystem& system() const { return sys_; }
  const Eigen::VectorXd& wrench() const { return w_; }
  const Regime& regime() const { return regime_; }
  const Eigen::VectorXd& u_particular() const { return u_particular_; }
  const Eigen::MatrixXd& null_basis() const { return N_; }
  int null_dim() const { return static_cast<int>(N_.cols()); }

  bool empty() const { return empty_; }
  // Certificate when empty: the smallest achievable max bound violation.
  double infeasibility() const { return infeasibility_; }
  bool particular_feasible() const { return particular_feasible_; }

  // Deepest point found by the feasibility program (valid when nonempty);
  // interior_slack > 0 means the regime polytope has interior on this fiber,
  // ~0 means the fiber touches the feasible set only on its boundary.
  const Eigen::VectorXd& interior_point() const { return interior_point_; }
  double interior_slack() const { return interior_slack_; }

  Eigen::VectorXd point_at(const Eigen::VectorXd& z) const { return u_particular_ + N_ * z; }
  Eigen::VectorXd coords_of(const Eigen::VectorXd& u) const {
    return N_.transpose() * (u - u_particular_);
  }

 private:
  friend FeasibleFiber fiber_of(const ActuationSystem&, const Eigen::VectorXd&, const Regime&);
  FeasibleFiber(ActuationSystem sys, Eigen::VectorXd w, Regime regime)
      : sys_(std::move(sys)), w_(std::move(w)), regime_(std::move(regime)) {}

  ActuationSystem sys_;
  Eigen::VectorXd w_;
  Regime regime_;
  Eigen::VectorXd u_particular_;
  Eigen::MatrixXd N_;
  bool empty_ = false;
  double infeasibility_ = 0.0;
  bool particular_feasible_ = false;
  Eigen::VectorXd interior_point_;
  double interior_slack_ = 0.0;
};

// Orthonormal basis of ker(A), deterministic: columns ordered by descending
// magnitude of their first nonzero entry, that entry made positive.
Eigen::MatrixXd null_space_basis(const ActuationSystem& sys);

FeasibleFiber fiber_of(const ActuationSystem& sys, const Eigen::VectorXd& w,
                       const Regime& regime);

// Orthogonal projector onto the fiber tangent space at speeds v:
// P = I - J^T (J J^T)^{-1} J with J the speed Jacobian. Throws
// std::domain_error when the Jacobian loses row rank (too many v_i = 0).
Eigen::MatrixXd projector_at(const ActuationSystem& sys, const Eigen::VectorXd& v);

// Projects both objective gradients onto ker(A) and forms the conflict index
// kappa = <g1, g2> / (|g1||g2|). Convention: kappa = 1 when both projected
// gradients vanish (below grad_tol); undefined when exactly one vanishes.
// Throws on off-fiber u or singular Gramian.
ConflictSample restricted_gradients(const FeasibleFiber& fiber, const Eigen::VectorXd& u);

FeasibilityReport is_feasible(const FeasibleFiber& fiber, const Eigen::VectorXd& u);

struct OrthantVerdict {
  bool trivial = true;        // ker(A) meets the nonnegative orthant only at 0
  double max_min_entry = 0.0; // max over unit null vectors of min_i entry
  Eigen::VectorXd witness;    // attaining null vector (zero when trivial)
};

// Decides whether ker(A) intersects the nonnegative orthant nontrivially by
// maximizing min_i (N z)_i over the unit ball of null-space coordinates.
OrthantVerdict orthant_nullspace_intersection(const ActuationSystem& sys);

enum class PlaneQuadrant { QI, QII, QIII, QIV };
enum class DualFiberClass { Ellipse, Hyperbola, Empty, DegeneratePoint, DegenerateLines };

// Conic type of the two-actuator fiber arc a1 v1|v1| + a2 v2|v2| = w
// restricted to one sign quadrant of the (v1, v2) plane.
DualFiberClass classify_dual_fiber(double a1, double a2, double w, PlaneQuadrant q);

}  // namespace fiberalloc
