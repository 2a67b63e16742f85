#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "fiberalloc/dual_actuator.hpp"
#include "fiberalloc/solvers.hpp"

using namespace fiberalloc;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

ActuationSystem hex() { return build_hexarotor(0.5, 0.25, 1.0, 0.05); }

FeasibleFiber hover_fiber(const Regime& regime) {
  return fiber_of(hex(), vec({0.0, 0.0, 0.0, hover_thrust(0.5)}), regime);
}

constexpr double kIso = 4.905 / 6.0;  // 0.8175

}  // namespace

TEST_SUITE("solvers") {

TEST_CASE("isotropic hover: both programs return the uniform allocation") {
  const FeasibleFiber fib = hover_fiber(Regime::unidirectional());

  const SolveReport en = min_energy(fib);
  REQUIRE(en.converged);
  CHECK((en.u_star - Eigen::VectorXd::Constant(6, kIso)).lpNorm<Eigen::Infinity>() <= 1e-6);
  CHECK(en.objective.j1 == doctest::Approx(6.0 * std::pow(kIso, 1.5)).epsilon(1e-9));
  CHECK(en.active_set.empty());
  REQUIRE(en.multipliers.size() == 4);
  REQUIRE(en.bound_multipliers.size() == 6);
  CHECK(kkt_residual_energy(fib, en.u_star, en.multipliers, en.bound_multipliers) < 1e-7);

  const SolveReport pr = max_promptness(fib);
  REQUIRE(pr.converged);
  CHECK((pr.u_star - Eigen::VectorXd::Constant(6, kIso)).lpNorm<Eigen::Infinity>() <= 1e-6);
  CHECK(pr.active_set.empty());
  CHECK(kkt_residual_promptness(fib, pr.u_star, pr.multipliers, pr.bound_multipliers) < 1e-6);

  // permutation symmetry: every marginal promptness gain matches eta^T a_i
  const Eigen::MatrixXd S = fib.system().gramian(pr.u_star);
  const Eigen::MatrixXd Sinv = S.inverse();
  for (int i = 0; i < 6; ++i) {
    const Eigen::VectorXd ai = fib.system().matrix().col(i);
    const double gain = ai.dot(Sinv * ai);
    const double a0gain = fib.system().matrix().col(0).dot(Sinv * fib.system().matrix().col(0));
    CHECK(std::abs(gain - a0gain) <= 1e-6 * (1.0 + std::abs(a0gain)));
    CHECK(std::abs(gain - pr.multipliers.dot(ai)) <= 1e-6 * (1.0 + std::abs(gain)));
  }
}

TEST_CASE("dual system energy matches the sharing rule and brute force") {
  {
    const DualSystem ds(1, 1, 1, 1, 1);
    const FeasibleFiber fib =
        fiber_of(to_actuation_system(ds), vec({1.0}), Regime::unidirectional());
    const SolveReport r = min_energy(fib);
    REQUIRE(r.converged);
    CHECK(std::abs(r.u_star[0] - 0.5) <= 1e-6);
    CHECK(std::abs(r.u_star[1] - 0.5) <= 1e-6);
  }
  {
    const DualSystem ds(2, 1, 1, 1, 1);
    const FeasibleFiber fib =
        fiber_of(to_actuation_system(ds), vec({1.0}), Regime::unidirectional());
    const SolveReport r = min_energy(fib);
    REQUIRE(r.converged);
    CHECK(std::abs(r.u_star[0] - 4.0 / 9.0) <= 1e-6);
    CHECK(std::abs(r.u_star[1] - 1.0 / 9.0) <= 1e-6);

    const BruteForceResult bf =
        brute_force_optimum(ds, DualObjective::Energy, Regime::unidirectional(), 100000);
    CHECK(std::abs(r.u_star[0] - bf.u1) <= 2.0 * (ds.w / ds.a1) / 100000.0);
  }
}

TEST_CASE("closed-form multiplier certifies the sharing-rule point") {
  // stationarity (3/2) c_i sqrt(u_i) = lambda a_i gives lambda = 0.5 here
  const DualSystem ds(2, 1, 1, 1, 1);
  const FeasibleFiber fib =
      fiber_of(to_actuation_system(ds), vec({1.0}), Regime::unidirectional());
  const Eigen::VectorXd u = vec({4.0 / 9.0, 1.0 / 9.0});
  const Eigen::VectorXd lambda = vec({0.5});
  const Eigen::VectorXd mu = Eigen::VectorXd::Zero(2);
  CHECK(kkt_residual_energy(fib, u, lambda, mu) < 1e-9);

  // moving along the fiber tangent destroys stationarity
  const Eigen::VectorXd dir = fib.null_basis().col(0);
  CHECK(kkt_residual_energy(fib, u + 0.01 * dir, lambda, mu) > 1e-4);
}

TEST_CASE("non-optimal interior points are rejected by the promptness certificate") {
  const FeasibleFiber fib = hover_fiber(Regime::unidirectional());
  const SolveReport pr = max_promptness(fib);
  REQUIRE(pr.converged);
  const Eigen::VectorXd off = pr.u_star + 0.05 * fib.null_basis().col(0);
  REQUIRE(is_feasible(fib, off).feasible);
  CHECK(kkt_residual_promptness(fib, off, pr.multipliers, pr.bound_multipliers) > 1e-3);
}

TEST_CASE("box regime: promptness saturates an opposite rotor pair") {
  const ActuationSystem h = hex();
  const Regime box = Regime::bidirectional_box(5.0, 6);

  // pure thrust: co-contraction reverses rotors 0 and 3 and pins them at the bound
  const FeasibleFiber hover = hover_fiber(box);
  const SolveReport co = max_promptness(hover);
  REQUIRE(co.converged);
  REQUIRE(co.active_set == std::vector<int>({0, 3}));
  CHECK(std::abs(co.u_star[0] + 5.0) <= 1e-6);
  CHECK(std::abs(co.u_star[3] + 5.0) <= 1e-6);
  // remaining rotors split the thrust surplus equally: (F_z + 10)/4
  const double rest = (hover_thrust(0.5) + 10.0) / 4.0;
  for (int i : {1, 2, 4, 5}) CHECK(std::abs(co.u_star[i] - rest) <= 1e-6);

  // reversing buys promptness over the unidirectional optimum on the same wrench
  const SolveReport uni = max_promptness(hover_fiber(Regime::unidirectional()));
  CHECK(co.objective.j2 < uni.objective.j2);

  // rolled wrench keeps the saturation
  const FeasibleFiber rolled_fib = fiber_of(h, vec({0.6, 0.0, 0.0, hover_thrust(0.5)}), box);
  const SolveReport rolled = max_promptness(rolled_fib);
  REQUIRE(rolled.converged);
  CHECK_FALSE(rolled.active_set.empty());
  bool any_at_bound = false;
  for (int i = 0; i < 6; ++i) any_at_bound |= std::abs(std::abs(rolled.u_star[i]) - 5.0) <= 1e-6;
  CHECK(any_at_bound);
  CHECK(kkt_residual_promptness(rolled_fib, rolled.u_star, rolled.multipliers,
                                rolled.bound_multipliers) < 1e-6);
}

TEST_CASE("moderate roll stays interior in the unidirectional regime") {
  const ActuationSystem h = hex();
  const FeasibleFiber fib =
      fiber_of(h, vec({0.3, 0.0, 0.0, hover_thrust(0.5)}), Regime::unidirectional());
  const SolveReport pr = max_promptness(fib);
  REQUIRE(pr.converged);
  CHECK(pr.active_set.empty());
  CHECK(pr.u_star.minCoeff() > 0.0);

  const SolveReport en = min_energy(fib);
  REQUIRE(en.converged);
  CHECK(en.active_set.empty());
  CHECK(en.u_star.minCoeff() > 0.0);
}

TEST_CASE("seed-independent optima") {
  const ActuationSystem h = hex();
  const Eigen::VectorXd w = vec({0.6, 0.0, 0.0, hover_thrust(0.5)});

  // strictly convex energy: every start lands on the same minimizer
  const FeasibleFiber boxed = fiber_of(h, w, Regime::bidirectional_box(5.0, 6));
  SolveOptions opts;
  Eigen::VectorXd ref_en, ref_pr;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    opts.seed = seed;
    const SolveReport en = min_energy(boxed, opts);
    REQUIRE(en.converged);
    if (seed == 0) {
      ref_en = en.u_star;
    } else {
      CHECK((en.u_star - ref_en).lpNorm<Eigen::Infinity>() <= 1e-6);
    }
  }

  // unidirectional promptness is concave over the orthant slice: same story
  const FeasibleFiber uni = fiber_of(h, w, Regime::unidirectional());
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    opts.seed = seed;
    const SolveReport pr = max_promptness(uni, opts);
    REQUIRE(pr.converged);
    if (seed == 0) {
      ref_pr = pr.u_star;
    } else {
      CHECK((pr.u_star - ref_pr).lpNorm<Eigen::Infinity>() <= 1e-5);
    }
  }
}

TEST_CASE("identical inputs give bitwise-identical reports") {
  const FeasibleFiber fib = hover_fiber(Regime::bidirectional_box(5.0, 6));
  SolveOptions opts;
  opts.seed = 42;
  const SolveReport a = max_promptness(fib, opts);
  const SolveReport b = max_promptness(fib, opts);
  REQUIRE(a.u_star.size() == b.u_star.size());
  CHECK(std::memcmp(a.u_star.data(), b.u_star.data(), sizeof(double) * a.u_star.size()) == 0);
  CHECK(a.objective.j1 == b.objective.j1);
  CHECK(a.objective.j2 == b.objective.j2);
  CHECK(a.kkt_residual == b.kkt_residual);
  CHECK(a.seeds_tried == b.seeds_tried);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("degenerate fibers: singleton succeeds for energy, empty throws") {
  const ActuationSystem h = hex();
  const FeasibleFiber zero = fiber_of(h, Eigen::VectorXd::Zero(4), Regime::unidirectional());
  const SolveReport en = min_energy(zero);
  REQUIRE(en.converged);
  CHECK(en.u_star.norm() <= 1e-9);
  CHECK(en.objective.j1 == doctest::Approx(0.0));
  // the only feasible point has a singular Gramian
  CHECK_THROWS_AS(max_promptness(zero), std::domain_error);

  const FeasibleFiber none = fiber_of(h, vec({0.0, 0.0, 0.0, -1.0}), Regime::unidirectional());
  CHECK_THROWS_AS(min_energy(none), std::invalid_argument);
  CHECK_THROWS_AS(max_promptness(none), std::invalid_argument);
  try {
    min_energy(none);
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("violation") != std::string::npos);
  }
}

TEST_CASE("active set entries are consistent with the bounds") {
  const SolveReport co = max_promptness(hover_fiber(Regime::bidirectional_box(5.0, 6)));
  REQUIRE(co.converged);
  for (int i : co.active_set) {
    CHECK(std::abs(std::abs(co.u_star[i]) - 5.0) <= 1e-6);
  }
  CHECK(co.bound_multipliers.minCoeff() >= 0.0);
}

}  // TEST_SUITE
