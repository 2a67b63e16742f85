#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

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

Eigen::VectorXd roll_wrench(double tau_x) {
  return vec({tau_x, 0.0, 0.0, hover_thrust(0.5)});
}

}  // namespace

TEST_SUITE("pareto_sweep") {

TEST_CASE("symmetric hover front collapses to one point") {
  const FeasibleFiber fib = fiber_of(hex(), roll_wrench(0.0), Regime::unidirectional());
  const ParetoFront front = pareto_front(fib, 15);
  REQUIRE(front.complete);
  CHECK(front.points.size() == 1);
  CHECK(front.extent == 0.0);
  CHECK(front.points[0].converged);
  CHECK(std::abs(front.points[0].j1 - front.energy_end.objective.j1) <= 1e-9);
}

TEST_CASE("pitched wrench opens an interior arc") {
  const FeasibleFiber fib =
      fiber_of(hex(), vec({0.0, 0.4, 0.0, hover_thrust(0.5)}), Regime::unidirectional());
  const ParetoFront front = pareto_front(fib, 9);
  REQUIRE(front.complete);
  REQUIRE(front.points.size() >= 3);
  CHECK(front.extent > 0.0);

  for (std::size_t i = 0; i < front.points.size(); ++i) {
    const ParetoPoint& p = front.points[i];
    CHECK(p.converged);
    CHECK(is_feasible(fib, p.u).feasible);
    CHECK(p.u.minCoeff() > 1e-6);  // arc stays interior to the orthant
    if (i > 0) {
      CHECK(p.j1 > front.points[i - 1].j1);
      CHECK(p.j2 < front.points[i - 1].j2);
    }
  }

  // endpoints agree with the single-objective programs
  CHECK(std::abs(front.points.front().j1 - front.energy_end.objective.j1) <= 1e-9);
  CHECK(std::abs(front.points.back().j2 - front.promptness_end.objective.j2) <= 1e-7);

  // interior points respect their energy caps
  for (const ParetoPoint& p : front.points) {
    CHECK(p.j1 <= p.epsilon + 1e-6 * (1.0 + std::abs(p.epsilon)));
  }

  // extent is the polyline length of the returned points
  double arc = 0.0;
  for (std::size_t i = 1; i < front.points.size(); ++i) {
    arc += std::hypot(front.points[i].j1 - front.points[i - 1].j1,
                      front.points[i].j2 - front.points[i - 1].j2);
  }
  CHECK(front.extent == doctest::Approx(arc).epsilon(1e-12));
}

TEST_CASE("box-truncated dual fiber: endpoints at the sharing point and the corner") {
  const DualSystem ds(1.0, 2.0, 1.0, 1.0, 1.0);
  const FeasibleFiber fib =
      fiber_of(to_actuation_system(ds), vec({1.0}), Regime::bidirectional_box(5.0, 2));
  const ParetoFront front = pareto_front(fib, 11);
  REQUIRE(front.complete);
  REQUIRE(front.points.size() >= 5);

  // energy end: sharing rule u = (1/9, 4/9), J1 = 1/3
  CHECK(std::abs(front.energy_end.u_star[0] - 1.0 / 9.0) <= 1e-6);
  CHECK(std::abs(front.energy_end.u_star[1] - 4.0 / 9.0) <= 1e-6);
  CHECK(front.points.front().j1 == doctest::Approx(1.0 / 3.0).epsilon(1e-7));

  // promptness end: box corner u1 = -5, D = 17
  CHECK(std::abs(front.promptness_end.u_star[0] + 5.0) <= 1e-6);
  CHECK(front.points.back().j2 == doctest::Approx(-0.5 * std::log(17.0)).epsilon(1e-7));

  for (std::size_t i = 1; i < front.points.size(); ++i) {
    CHECK(front.points[i].j1 > front.points[i - 1].j1);
    CHECK(front.points[i].j2 < front.points[i - 1].j2);
  }
  CHECK(front.extent > 1.0);
}

TEST_CASE("front construction rejects bad inputs") {
  const FeasibleFiber fib = fiber_of(hex(), roll_wrench(0.0), Regime::unidirectional());
  CHECK_THROWS_AS(pareto_front(fib, 1), std::invalid_argument);

  const FeasibleFiber none =
      fiber_of(hex(), vec({0.0, 0.0, 0.0, -1.0}), Regime::unidirectional());
  CHECK_THROWS_AS(pareto_front(none, 5), std::invalid_argument);
}

TEST_CASE("parallel and serial pareto runs agree bitwise") {
  const FeasibleFiber fib =
      fiber_of(hex(), roll_wrench(0.4), Regime::bidirectional_box(5.0, 6));
  ParetoOptions par, ser;
  par.parallel = true;
  ser.parallel = false;
  const ParetoFront a = pareto_front(fib, 9, par);
  const ParetoFront b = pareto_front(fib, 9, ser);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].j1 == b.points[i].j1);
    CHECK(a.points[i].j2 == b.points[i].j2);
    CHECK(std::memcmp(a.points[i].u.data(), b.points[i].u.data(),
                      sizeof(double) * a.points[i].u.size()) == 0);
  }
  CHECK(a.extent == b.extent);
}

TEST_CASE("sweep covers the grid regime-major with per-cell contracts") {
  const ActuationSystem h = hex();
  const std::vector<Eigen::VectorXd> wrenches = {roll_wrench(0.0), roll_wrench(0.5),
                                                 roll_wrench(1.0)};
  const std::vector<Regime> regimes = {Regime::unidirectional(),
                                       Regime::bidirectional_box(5.0, 6)};
  const std::vector<SweepCell> cells = sweep(h, wrenches, regimes);
  REQUIRE(cells.size() == 6);

  for (std::size_t idx = 0; idx < cells.size(); ++idx) {
    const SweepCell& c = cells[idx];
    REQUIRE(c.ok);
    CHECK(c.regime_index == static_cast<int>(idx / wrenches.size()));
    CHECK(c.wrench.isApprox(wrenches[idx % wrenches.size()]));
    CHECK(c.energy.converged);
    CHECK(c.promptness.converged);
    // cross-evaluation orderings from optimality
    CHECK(c.j1_at_promptness >= c.j1_at_energy);
    CHECK(c.j2_at_energy >= c.j2_at_promptness);
    CHECK(c.j1_at_energy == doctest::Approx(c.energy.objective.j1).epsilon(1e-12));
    CHECK(c.j2_at_promptness == doctest::Approx(c.promptness.objective.j2).epsilon(1e-12));
  }

  // tau_x = 0, unidirectional: optima coincide and so do the cross-evaluations
  const SweepCell& iso = cells[0];
  CHECK((iso.energy.u_star - iso.promptness.u_star).lpNorm<Eigen::Infinity>() <= 1e-5);
  CHECK(std::abs(iso.j1_at_promptness - iso.j1_at_energy) <= 1e-7);

  // the box regime can only improve promptness when the orthant optimum fits in it
  for (std::size_t k = 0; k < wrenches.size(); ++k) {
    const SweepCell& uni = cells[k];
    const SweepCell& box = cells[wrenches.size() + k];
    if (uni.promptness.u_star.lpNorm<Eigen::Infinity>() <= 5.0) {
      CHECK(box.j2_at_promptness <= uni.j2_at_promptness + 1e-9);
    }
  }

  // energy rises with the demanded roll torque
  CHECK(cells[0].j1_at_energy <= cells[1].j1_at_energy);
  CHECK(cells[1].j1_at_energy <= cells[2].j1_at_energy);
}

TEST_CASE("sweep captures per-cell failures without stopping") {
  const ActuationSystem h = hex();
  const std::vector<Eigen::VectorXd> wrenches = {roll_wrench(0.0),
                                                 vec({0.0, 0.0, 0.0, -1.0})};
  const std::vector<SweepCell> cells = sweep(h, wrenches, {Regime::unidirectional()});
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].ok);
  CHECK_FALSE(cells[1].ok);
  CHECK_FALSE(cells[1].error.empty());
}

TEST_CASE("parallel and serial sweeps agree bitwise") {
  const ActuationSystem h = hex();
  const std::vector<Eigen::VectorXd> wrenches = {roll_wrench(0.2), roll_wrench(0.8)};
  const std::vector<Regime> regimes = {Regime::unidirectional(),
                                       Regime::bidirectional_box(5.0, 6)};
  SweepOptions par, ser;
  par.parallel = true;
  ser.parallel = false;
  const std::vector<SweepCell> a = sweep(h, wrenches, regimes, par);
  const std::vector<SweepCell> b = sweep(h, wrenches, regimes, ser);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::memcmp(a[i].energy.u_star.data(), b[i].energy.u_star.data(),
                      sizeof(double) * a[i].energy.u_star.size()) == 0);
    CHECK(std::memcmp(a[i].promptness.u_star.data(), b[i].promptness.u_star.data(),
                      sizeof(double) * a[i].promptness.u_star.size()) == 0);
    CHECK(a[i].j1_at_promptness == b[i].j1_at_promptness);
    CHECK(a[i].j2_at_energy == b[i].j2_at_energy);
  }
}

TEST_CASE("sweep can attach fronts per cell") {
  SweepOptions opts;
  opts.with_fronts = true;
  opts.front_points = 7;
  const std::vector<SweepCell> cells =
      sweep(hex(), {roll_wrench(0.4)}, {Regime::unidirectional()}, opts);
  REQUIRE(cells.size() == 1);
  REQUIRE(cells[0].has_front);
  CHECK(cells[0].front.complete);
  CHECK(cells[0].front.points.size() >= 2);
  CHECK(cells[0].front.extent > 0.0);
}

}  // TEST_SUITE
