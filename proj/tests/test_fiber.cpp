#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "fiberalloc/actuation.hpp"
#include "fiberalloc/fiber.hpp"

using namespace fiberalloc;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

ActuationSystem hex() { return build_hexarotor(0.5, 0.25, 1.0, 0.05); }

ActuationSystem pair11() {
  Eigen::MatrixXd A(1, 2);
  A << 1.0, 1.0;
  return ActuationSystem(A, Eigen::VectorXd::Ones(2));
}

Eigen::VectorXd hover_wrench() { return vec({0.0, 0.0, 0.0, hover_thrust(0.5)}); }

}  // namespace

TEST_SUITE("fiber") {

TEST_CASE("regime residual layout") {
  const Regime uni = Regime::unidirectional();
  CHECK_FALSE(uni.is_box());
  CHECK(uni.constraint_count(6) == 6);
  CHECK(uni.residuals(vec({1.0, -2.0})).isApprox(vec({-1.0, 2.0})));
  CHECK_THROWS_AS(uni.bounds(), std::logic_error);

  const Regime box = Regime::bidirectional_box(5.0, 3);
  CHECK(box.is_box());
  CHECK(box.constraint_count(3) == 6);
  CHECK(box.bounds().isApprox(Eigen::VectorXd::Constant(3, 5.0)));
  // upper block first, then lower
  const Eigen::VectorXd r = box.residuals(vec({6.0, -7.0, 0.0}));
  CHECK(r.isApprox(vec({1.0, -12.0, -5.0, -11.0, 2.0, -5.0})));

  CHECK_THROWS_AS(Regime::bidirectional_box(vec({1.0, -1.0})), std::invalid_argument);
  CHECK_THROWS_AS(box.residuals(vec({1.0, 1.0})), std::invalid_argument);
}

TEST_CASE("null space basis is orthonormal, deterministic and annihilated by A") {
  const Eigen::MatrixXd N2 = null_space_basis(pair11());
  REQUIRE(N2.cols() == 1);
  CHECK(N2(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(N2(1, 0) == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-12));

  const ActuationSystem h = hex();
  const Eigen::MatrixXd N = null_space_basis(h);
  REQUIRE(N.cols() == 2);
  for (int j = 0; j < N.cols(); ++j) {
    CHECK(std::abs(N.col(j).sum()) <= 1e-12);  // thrust row forces 1^T du = 0
  }
  CHECK((h.matrix() * N).norm() <= 1e-12);
  CHECK((N.transpose() * N - Eigen::MatrixXd::Identity(2, 2)).norm() <= 1e-12);

  const Eigen::MatrixXd again = null_space_basis(h);
  CHECK(std::memcmp(N.data(), again.data(), sizeof(double) * N.size()) == 0);

  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd A(4, 6);
    for (int i = 0; i < 24; ++i) A(i / 6, i % 6) = dist(rng);
    const ActuationSystem sys(A, Eigen::VectorXd::Ones(6));
    const Eigen::MatrixXd Nr = null_space_basis(sys);
    REQUIRE(Nr.cols() == 2);
    CHECK((A * Nr).norm() <= 1e-12 * (1.0 + A.norm()));
    CHECK((Nr.transpose() * Nr - Eigen::MatrixXd::Identity(2, 2)).norm() <= 1e-12);
  }
}

TEST_CASE("fiber construction: particular point, parametrization, emptiness") {
  const ActuationSystem h = hex();
  const Eigen::VectorXd w = hover_wrench();
  const FeasibleFiber fib = fiber_of(h, w, Regime::unidirectional());
  REQUIRE_FALSE(fib.empty());
  CHECK((h.matrix() * fib.u_particular() - w).norm() <= 1e-10 * w.norm());
  // min-norm particular solution lies in the row space: no null component
  CHECK((fib.null_basis().transpose() * fib.u_particular()).norm() <= 1e-10);

  // the isotropic allocation is on this fiber and feasible
  const Eigen::VectorXd iso = Eigen::VectorXd::Constant(6, hover_thrust(0.5) / 6.0);
  CHECK(is_feasible(fib, iso).feasible);

  std::mt19937_64 rng(67);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd z = vec({dist(rng), dist(rng)});
    CHECK((h.matrix() * fib.point_at(z) - w).norm() <= 1e-10 * (1.0 + w.norm()));
  }

  // zero wrench: the unidirectional fiber is the single boundary point u = 0
  const FeasibleFiber zero = fiber_of(h, Eigen::VectorXd::Zero(4), Regime::unidirectional());
  REQUIRE_FALSE(zero.empty());
  CHECK(zero.u_particular().norm() <= 1e-12);
  CHECK(zero.interior_slack() <= 1e-6);

  // negative thrust cannot be met with nonnegative efforts
  const FeasibleFiber none = fiber_of(h, vec({0.0, 0.0, 0.0, -1.0}), Regime::unidirectional());
  CHECK(none.empty());
  CHECK(none.infeasibility() > 0.0);

  CHECK_THROWS_AS(fiber_of(h, vec({1.0, 2.0}), Regime::unidirectional()), std::invalid_argument);
}

TEST_CASE("projector axioms at nondegenerate speeds") {
  const ActuationSystem h = hex();
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> dist(0.3, 2.0);
  std::bernoulli_distribution coin;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd v(6);
    for (int i = 0; i < 6; ++i) v[i] = (coin(rng) ? 1.0 : -1.0) * dist(rng);
    const Eigen::MatrixXd P = projector_at(h, v);
    const Eigen::MatrixXd J = h.jacobian(v);
    CHECK((P - P.transpose()).norm() <= 1e-12 * (1.0 + P.norm()));
    CHECK((P * P - P).norm() <= 1e-12 * (1.0 + P.norm()));
    CHECK((J * P).norm() <= 1e-10 * (1.0 + J.norm()));
    CHECK(P.trace() == doctest::Approx(2.0).epsilon(1e-10));  // n - m
  }

  // four vanishing speeds leave at most rank 2
  CHECK_THROWS_AS(projector_at(h, vec({1.0, 1.0, 0.0, 0.0, 0.0, 0.0})), std::domain_error);
}

TEST_CASE("restricted gradients: total conflict on the antagonistic ray") {
  const ActuationSystem sys = pair11();
  const FeasibleFiber fib =
      fiber_of(sys, vec({1.0}), Regime::bidirectional_box(5.0, 2));
  REQUIRE_FALSE(fib.empty());

  const ConflictSample s = restricted_gradients(fib, vec({-1.0, 2.0}));
  REQUIRE(s.kappa_defined);
  CHECK(s.kappa == doctest::Approx(-1.0).epsilon(1e-9));
  // both restricted gradients live in ker(A)
  CHECK((sys.matrix() * s.restricted_grad_energy).norm() <=
        1e-10 * (1.0 + s.restricted_grad_energy.norm()));
  CHECK((sys.matrix() * s.restricted_grad_promptness).norm() <=
        1e-10 * (1.0 + s.restricted_grad_promptness.norm()));

  // kappa is invariant under a uniform positive rescaling of the energy weights
  const ActuationSystem scaled(sys.matrix(), 7.0 * Eigen::VectorXd::Ones(2));
  const FeasibleFiber fib7 = fiber_of(scaled, vec({1.0}), Regime::bidirectional_box(5.0, 2));
  const ConflictSample s7 = restricted_gradients(fib7, vec({-1.0, 2.0}));
  CHECK(std::abs(s7.kappa - s.kappa) <= 1e-12);

  CHECK_THROWS_AS(restricted_gradients(fib, vec({1.0, 1.0})), std::invalid_argument);  // off fiber
}

TEST_CASE("restricted gradients: symmetric hover point has kappa 1 by convention") {
  const ActuationSystem h = hex();
  const FeasibleFiber fib = fiber_of(h, hover_wrench(), Regime::unidirectional());
  const Eigen::VectorXd iso = Eigen::VectorXd::Constant(6, hover_thrust(0.5) / 6.0);
  const ConflictSample s = restricted_gradients(fib, iso);
  REQUIRE(s.kappa_defined);
  CHECK(s.kappa == 1.0);
  CHECK(s.restricted_grad_energy.norm() <= 1e-8);
  CHECK(s.restricted_grad_promptness.norm() <= 1e-8);
}

TEST_CASE("feasibility report names offending actuators") {
  const ActuationSystem h = hex();
  const FeasibleFiber fib = fiber_of(h, hover_wrench(), Regime::unidirectional());
  Eigen::VectorXd u = Eigen::VectorXd::Constant(6, hover_thrust(0.5) / 6.0);
  CHECK(is_feasible(fib, u).feasible);

  u[3] = -0.01;
  const FeasibilityReport bad = is_feasible(fib, u);
  CHECK_FALSE(bad.feasible);
  REQUIRE(bad.violations.size() == 1);
  CHECK(bad.violations[0].first == 3);
  CHECK(bad.violations[0].second == doctest::Approx(0.01));

  const FeasibleFiber boxed = fiber_of(h, hover_wrench(), Regime::bidirectional_box(5.0, 6));
  Eigen::VectorXd over = Eigen::VectorXd::Constant(6, hover_thrust(0.5) / 6.0);
  over[0] = 5.2;
  const FeasibilityReport rep = is_feasible(boxed, over);
  CHECK_FALSE(rep.feasible);
  REQUIRE(rep.violations.size() == 1);
  CHECK(rep.violations[0].first == 0);
  CHECK(rep.violations[0].second == doctest::Approx(0.2));
}

TEST_CASE("kernel-orthant intersection: hexarotor trivial, constructed counterexample not") {
  const OrthantVerdict v = orthant_nullspace_intersection(hex());
  CHECK(v.trivial);

  Eigen::MatrixXd A(1, 2);
  A << 1.0, -1.0;  // kernel span(1,1) sits inside the orthant
  const OrthantVerdict bad = orthant_nullspace_intersection(ActuationSystem(A, {}));
  CHECK_FALSE(bad.trivial);
  CHECK(bad.max_min_entry == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-4));
  CHECK(bad.witness.minCoeff() > 0.0);

  // a strictly positive row forces mixed signs in every kernel vector
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.5, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd M(4, 6);
    for (int i = 0; i < 18; ++i) M(i / 6, i % 6) = dist(rng);
    for (int j = 0; j < 6; ++j) M(3, j) = pos(rng);
    CHECK(orthant_nullspace_intersection(ActuationSystem(M, {})).trivial);
  }
}

TEST_CASE("mixed signs in every hexarotor null vector") {
  const Eigen::MatrixXd N = null_space_basis(hex());
  for (int j = 0; j < N.cols(); ++j) {
    CHECK(N.col(j).minCoeff() < 0.0);
    CHECK(N.col(j).maxCoeff() > 0.0);
  }
}

TEST_CASE("dual fiber conic classification") {
  using Q = PlaneQuadrant;
  using C = DualFiberClass;
  CHECK(classify_dual_fiber(1, 1, 1.0, Q::QI) == C::Ellipse);
  CHECK(classify_dual_fiber(1, 1, 1.0, Q::QII) == C::Hyperbola);
  CHECK(classify_dual_fiber(1, 1, 1.0, Q::QIV) == C::Hyperbola);
  CHECK(classify_dual_fiber(1, 1, 1.0, Q::QIII) == C::Empty);
  CHECK(classify_dual_fiber(1, 1, -1.0, Q::QI) == C::Empty);
  CHECK(classify_dual_fiber(1, 1, -1.0, Q::QIII) == C::Ellipse);
  CHECK(classify_dual_fiber(1, 1, -1.0, Q::QII) == C::Hyperbola);
  CHECK(classify_dual_fiber(1, 1, 0.0, Q::QI) == C::DegeneratePoint);
  CHECK(classify_dual_fiber(1, 1, 0.0, Q::QII) == C::DegenerateLines);
  CHECK_THROWS_AS(classify_dual_fiber(-1, 1, 1.0, Q::QI), std::invalid_argument);
}

}  // TEST_SUITE
