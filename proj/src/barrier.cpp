#include "fiberalloc/barrier.hpp"

#include <cmath>
#include <limits>

namespace fiberalloc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite(double x) { return std::isfinite(x); }

// t*f0(x) - sum_j ln(-f_j(x)); +inf when x violates any constraint.
double barrier_value(const SmoothFunction& f0,
                     const std::vector<SmoothFunction>& cons, double t,
                     const Eigen::VectorXd& x) {
  double val = t * f0.value(x);
  if (!finite(val)) return kInf;
  for (const auto& c : cons) {
    const double fj = c.value(x);
    if (!(fj < 0.0)) return kInf;
    val -= std::log(-fj);
  }
  return val;
}
}  // namespace

SmoothFunction affine_function(Eigen::VectorXd g, double h) {
  SmoothFunction f;
  f.value = [g, h](const Eigen::VectorXd& x) { return g.dot(x) + h; };
  f.gradient = [g](const Eigen::VectorXd&) { return g; };
  f.hessian = nullptr;  // zero
  return f;
}

SmoothFunction ball_function(Eigen::VectorXd center, double radius) {
  SmoothFunction f;
  const double r2 = radius * radius;
  f.value = [center, r2](const Eigen::VectorXd& x) {
    return (x - center).squaredNorm() - r2;
  };
  f.gradient = [center](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(2.0 * (x - center));
  };
  f.hessian = [](const Eigen::VectorXd& x) {
    return Eigen::MatrixXd(2.0 * Eigen::MatrixXd::Identity(x.size(), x.size()));
  };
  return f;
}

BarrierResult minimize_barrier(const SmoothFunction& objective,
                               const std::vector<SmoothFunction>& constraints,
                               const Eigen::VectorXd& x0,
                               const BarrierOptions& opts) {
  const int d = static_cast<int>(x0.size());
  const int mc = static_cast<int>(constraints.size());
  BarrierResult res;
  res.x = x0;
  res.multipliers = Eigen::VectorXd::Zero(mc);

  if (!finite(barrier_value(objective, constraints, 1.0, x0))) {
    res.converged = false;  // x0 not strictly feasible
    return res;
  }

  double t = opts.t_init;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd grad(d), step(d);
  Eigen::MatrixXd H(d, d);
  res.converged = true;

  for (int outer = 0; outer < opts.max_outer; ++outer) {
    for (int it = 0; it < opts.max_newton; ++it) {
      grad = t * objective.gradient(x);
      H.setZero();
      if (objective.hessian) H = t * objective.hessian(x);
      for (const auto& c : constraints) {
        const double fj = c.value(x);
        const Eigen::VectorXd gj = c.gradient(x);
        grad -= gj / fj;
        H += (gj * gj.transpose()) / (fj * fj);
        if (c.hessian) H -= c.hessian(x) / fj;
      }

      double damping = 0.0;
      const double diag_scale = 1.0 + H.diagonal().cwiseAbs().maxCoeff();
      while (true) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(
            damping > 0.0
                ? Eigen::MatrixXd(H + damping * Eigen::MatrixXd::Identity(d, d))
                : H);
        if (ldlt.info() == Eigen::Success) {
          step = ldlt.solve(-grad);
          if (finite(step.squaredNorm()) && grad.dot(step) < 0.0) break;
        }
        damping = (damping == 0.0) ? 1e-10 * diag_scale : damping * 10.0;
        if (damping > 1e10 * diag_scale) {
          res.converged = false;
          break;
        }
      }
      if (!res.converged) break;

      const double decrement2 = -grad.dot(step);
      if (0.5 * decrement2 < opts.newton_tol) break;

      const double phi0 = barrier_value(objective, constraints, t, x);
      const double slope = grad.dot(step);
      double alpha = 1.0;
      bool accepted = false;
      while (alpha >= opts.min_step) {
        const double phi = barrier_value(objective, constraints, t, x + alpha * step);
        if (finite(phi) && phi <= phi0 + 1e-4 * alpha * slope) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) break;  // at numerical resolution for this stage
      x += alpha * step;
      ++res.newton_steps;
      if (opts.stop_when && opts.stop_when(x)) {
        res.stopped_early = true;
        res.x = x;
        for (int j = 0; j < mc; ++j) res.multipliers[j] = -1.0 / (t * constraints[j].value(x));
        res.gap = mc / t;
        return res;
      }
    }
    if (!res.converged) break;
    res.gap = static_cast<double>(mc) / t;
    if (mc == 0 || res.gap <= opts.gap_tol) break;
    t *= opts.mu;
  }

  res.x = x;
  for (int j = 0; j < mc; ++j) res.multipliers[j] = -1.0 / (t * constraints[j].value(x));
  return res;
}

PhaseOneResult phase_one(const std::vector<SmoothFunction>& constraints,
                         const Eigen::VectorXd& x0, double radius,
                         double stop_margin, const BarrierOptions& opts) {
  const int d = static_cast<int>(x0.size());
  PhaseOneResult out;
  out.x = x0;

  auto lift = [d](const SmoothFunction& f) {
    SmoothFunction g;
    g.value = [f, d](const Eigen::VectorXd& y) { return f.value(y.head(d)) - y[d]; };
    g.gradient = [f, d](const Eigen::VectorXd& y) {
      Eigen::VectorXd gr(d + 1);
      gr.head(d) = f.gradient(y.head(d));
      gr[d] = -1.0;
      return gr;
    };
    if (f.hessian) {
      g.hessian = [f, d](const Eigen::VectorXd& y) {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d + 1, d + 1);
        h.topLeftCorner(d, d) = f.hessian(y.head(d));
        return h;
      };
    }
    return g;
  };

  std::vector<SmoothFunction> lifted;
  lifted.reserve(constraints.size() + 1);
  for (const auto& c : constraints) lifted.push_back(lift(c));
  {
    SmoothFunction ball = ball_function(x0, radius);
    SmoothFunction lifted_ball;
    lifted_ball.value = [ball, d](const Eigen::VectorXd& y) { return ball.value(y.head(d)); };
    lifted_ball.gradient = [ball, d](const Eigen::VectorXd& y) {
      Eigen::VectorXd gr = Eigen::VectorXd::Zero(d + 1);
      gr.head(d) = ball.gradient(y.head(d));
      return gr;
    };
    lifted_ball.hessian = [d](const Eigen::VectorXd&) {
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d + 1, d + 1);
      h.topLeftCorner(d, d) = 2.0 * Eigen::MatrixXd::Identity(d, d);
      return h;
    };
    lifted.push_back(lifted_ball);
  }

  double tau0 = 0.0;
  for (const auto& c : constraints) tau0 = std::max(tau0, c.value(x0));
  tau0 += 1.0;

  Eigen::VectorXd y0(d + 1);
  y0.head(d) = x0;
  y0[d] = tau0;

  Eigen::VectorXd e_tau = Eigen::VectorXd::Zero(d + 1);
  e_tau[d] = 1.0;

  BarrierOptions o = opts;
  if (stop_margin > 0.0) {
    o.stop_when = [d, stop_margin](const Eigen::VectorXd& y) { return y[d] <= -stop_margin; };
  }

  const BarrierResult r = minimize_barrier(affine_function(e_tau, 0.0), lifted, y0, o);
  out.x = r.x.head(d);
  out.max_violation = -kInf;
  for (const auto& c : constraints) out.max_violation = std::max(out.max_violation, c.value(out.x));
  if (constraints.empty()) out.max_violation = 0.0;
  out.strictly_feasible = out.max_violation < 0.0;
  out.converged = r.converged || r.stopped_early;
  return out;
}

}  // namespace fiberalloc
