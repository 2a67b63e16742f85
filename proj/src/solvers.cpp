#include "fiberalloc/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "fiberalloc/barrier.hpp"
#include "solver_core.hpp"

namespace fiberalloc::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Per-pattern view of the fiber; sd is the sign pattern as doubles.
struct Slice {
  const FeasibleFiber* fiber;
  Eigen::VectorXd sd;
  double u_scale;
  Eigen::VectorXd u_of(const Eigen::VectorXd& z) const {
    return fiber->u_particular() + fiber->null_basis() * z;
  }
};

Slice make_slice(const FeasibleFiber& fiber, const Eigen::VectorXi& s) {
  Slice sl{&fiber, s.cast<double>(), 1.0 + fiber.u_particular().lpNorm<Eigen::Infinity>()};
  if (fiber.regime().is_box()) sl.u_scale = std::max(sl.u_scale, fiber.regime().bounds().maxCoeff());
  return sl;
}

// sum c_i b_i^{3/2} with b = s o u; NaN off the orthant.
double slice_energy(const Slice& sl, const Eigen::VectorXd& u) {
  const Eigen::VectorXd& c = sl.fiber->system().energy_weights();
  double v = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double b = sl.sd[i] * u[i];
    if (b < 0.0) return kNaN;
    v += c[i] * b * std::sqrt(b);
  }
  return v;
}

Eigen::VectorXd slice_energy_grad_u(const Slice& sl, const Eigen::VectorXd& u) {
  const Eigen::VectorXd& c = sl.fiber->system().energy_weights();
  Eigen::VectorXd g(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    g[i] = 1.5 * c[i] * sl.sd[i] * std::sqrt(std::max(sl.sd[i] * u[i], 0.0));
  }
  return g;
}

Eigen::VectorXd energy_hess_diag(const ActuationSystem& sys, const Eigen::VectorXd& u) {
  Eigen::VectorXd h(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    h[i] = 0.75 * sys.energy_weights()[i] / std::sqrt(std::max(std::abs(u[i]), 1e-300));
  }
  return h;
}

// -1/2 log det S(u); +inf when S fails to factor or has a zero pivot.
double slice_promptness(const ActuationSystem& sys, const Eigen::VectorXd& u) {
  Eigen::LLT<Eigen::MatrixXd> llt(sys.gramian(u));
  if (llt.info() != Eigen::Success) return kInf;
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * logdet;
}

// grad/Hess of -1/2 log det S on the fixed orthant, in u-coordinates.
void promptness_derivs(const ActuationSystem& sys, const Eigen::VectorXd& sd,
                       const Eigen::VectorXd& u, Eigen::VectorXd* grad_u,
                       Eigen::MatrixXd* hess_u) {
  const Eigen::MatrixXd& A = sys.matrix();
  Eigen::LLT<Eigen::MatrixXd> llt(sys.gramian(u));
  const Eigen::MatrixXd M = A.transpose() * llt.solve(A);  // M_ij = a_i^T S^-1 a_j
  if (grad_u) *grad_u = -0.5 * sd.cwiseProduct(M.diagonal());
  if (hess_u) *hess_u = 0.5 * (sd * sd.transpose()).cwiseProduct(M.cwiseProduct(M));
}

double kind_value(Kind kind, const Slice& sl, const Eigen::VectorXd& u) {
  return kind == Kind::Energy ? slice_energy(sl, u) : slice_promptness(sl.fiber->system(), u);
}

Eigen::VectorXd kind_grad_u(Kind kind, const Slice& sl, const Eigen::VectorXd& u) {
  if (kind == Kind::Energy) return slice_energy_grad_u(sl, u);
  Eigen::VectorXd g;
  promptness_derivs(sl.fiber->system(), sl.sd, u, &g, nullptr);
  return g;
}

Eigen::MatrixXd kind_hess_u(Kind kind, const Slice& sl, const Eigen::VectorXd& u) {
  if (kind == Kind::Energy) {
    Eigen::VectorXd h(u.size());
    const Eigen::VectorXd& c = sl.fiber->system().energy_weights();
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      h[i] = 0.75 * c[i] / std::sqrt(std::max(sl.sd[i] * u[i], 1e-300));
    }
    return h.asDiagonal();
  }
  Eigen::MatrixXd H;
  promptness_derivs(sl.fiber->system(), sl.sd, u, nullptr, &H);
  return H;
}

SmoothFunction pattern_objective_z(const Slice& sl, Kind kind) {
  SmoothFunction f;
  f.value = [sl, kind](const Eigen::VectorXd& z) { return kind_value(kind, sl, sl.u_of(z)); };
  f.gradient = [sl, kind](const Eigen::VectorXd& z) {
    return Eigen::VectorXd(sl.fiber->null_basis().transpose() * kind_grad_u(kind, sl, sl.u_of(z)));
  };
  f.hessian = [sl, kind](const Eigen::VectorXd& z) {
    const Eigen::MatrixXd& N = sl.fiber->null_basis();
    return Eigen::MatrixXd(N.transpose() * kind_hess_u(kind, sl, sl.u_of(z)) * N);
  };
  return f;
}

// J1(u(z)) + offset with the everywhere-C1 absolute-value form; used for the
// energy-cap row so feasibility phases work from any orthant.
SmoothFunction abs_energy_z(const FeasibleFiber* fiber, double offset) {
  SmoothFunction f;
  f.value = [fiber, offset](const Eigen::VectorXd& z) {
    return energy_u(fiber->system(), fiber->u_particular() + fiber->null_basis() * z) + offset;
  };
  f.gradient = [fiber](const Eigen::VectorXd& z) {
    const Eigen::MatrixXd& N = fiber->null_basis();
    return Eigen::VectorXd(N.transpose() *
                           energy_grad_u(fiber->system(), fiber->u_particular() + N * z));
  };
  f.hessian = [fiber](const Eigen::VectorXd& z) {
    const Eigen::MatrixXd& N = fiber->null_basis();
    const Eigen::VectorXd u = fiber->u_particular() + N * z;
    return Eigen::MatrixXd(N.transpose() * energy_hess_diag(fiber->system(), u).asDiagonal() * N);
  };
  return f;
}

struct PolishRes {
  Eigen::VectorXd u;
  Eigen::VectorXd nu_w;  // equality multipliers, L = f + nu_w^T (Au - w) + ...
  double nu_cap = 0.0;
  double r_inf = kInf;
  bool ok = false;
};

// Equality-constrained Newton on the face fixed by `pins` (0 free, 1 at
// zero, 2 at the signed box bound). The energy cap joins as a nonlinear
// equality row when with_cap.
std::optional<PolishRes> polish_once(const FeasibleFiber& fiber, Kind kind, const Slice& sl,
                                     const std::vector<int>& pins, bool with_cap, double cap,
                                     Eigen::VectorXd u) {
  const ActuationSystem& sys = fiber.system();
  const Eigen::MatrixXd& A = sys.matrix();
  const int n = sys.actuator_count();
  const int m = sys.task_dim();
  const bool box = fiber.regime().is_box();

  std::vector<int> F;
  for (int i = 0; i < n; ++i) {
    if (pins[i] == 0) {
      F.push_back(i);
    } else {
      u[i] = (pins[i] == 1) ? 0.0 : sl.sd[i] * fiber.regime().bounds()[i];
    }
  }
  const int nf = static_cast<int>(F.size());
  const int p = m + (with_cap ? 1 : 0);
  if (nf < p) return std::nullopt;

  Eigen::MatrixXd AF(m, nf);
  for (int t = 0; t < nf; ++t) AF.col(t) = A.col(F[t]);

  auto restrict_vec = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd r(nf);
    for (int t = 0; t < nf; ++t) r[t] = v[F[t]];
    return r;
  };

  Eigen::VectorXd nu_w;
  double nu_cap = 0.0;
  {
    const Eigen::VectorXd gF = restrict_vec(kind_grad_u(kind, sl, u));
    Eigen::MatrixXd B(nf, p);
    B.leftCols(m) = AF.transpose();
    if (with_cap) B.col(m) = restrict_vec(energy_grad_u(sys, u));
    const Eigen::VectorXd sol = B.colPivHouseholderQr().solve(-gF);
    nu_w = sol.head(m);
    if (with_cap) nu_cap = sol[m];
  }

  auto residual = [&](const Eigen::VectorXd& uu, const Eigen::VectorXd& nw, double nc) {
    Eigen::VectorXd r(nf + p);
    const Eigen::VectorXd g = kind_grad_u(kind, sl, uu);
    Eigen::VectorXd gc;
    if (with_cap) gc = energy_grad_u(sys, uu);
    for (int t = 0; t < nf; ++t) {
      const int i = F[t];
      r[t] = g[i] + A.col(i).dot(nw) + (with_cap ? nc * gc[i] : 0.0);
    }
    r.segment(nf, m) = A * uu - fiber.wrench();
    if (with_cap) r[nf + m] = energy_u(sys, uu) - cap;
    return r;
  };

  const double scale =
      1.0 + kind_grad_u(kind, sl, u).lpNorm<Eigen::Infinity>() + fiber.wrench().lpNorm<Eigen::Infinity>();
  Eigen::VectorXd r = residual(u, nu_w, nu_cap);

  for (int it = 0; it < 60 && r.lpNorm<Eigen::Infinity>() > 1e-13 * scale; ++it) {
    Eigen::MatrixXd Hf = kind_hess_u(kind, sl, u);
    if (with_cap) Hf += nu_cap * Eigen::MatrixXd(energy_hess_diag(sys, u).asDiagonal());
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nf + p, nf + p);
    for (int a = 0; a < nf; ++a) {
      for (int b = 0; b < nf; ++b) K(a, b) = Hf(F[a], F[b]);
    }
    K.block(0, nf, nf, m) = AF.transpose();
    K.block(nf, 0, m, nf) = AF;
    if (with_cap) {
      const Eigen::VectorXd gcF = restrict_vec(energy_grad_u(sys, u));
      K.block(0, nf + m, nf, 1) = gcF;
      K.block(nf + m, 0, 1, nf) = gcF.transpose();
    }
    const Eigen::VectorXd step = K.fullPivLu().solve(-r);
    if (!std::isfinite(step.squaredNorm())) break;

    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
      Eigen::VectorXd u_try = u;
      for (int t = 0; t < nf; ++t) u_try[F[t]] += alpha * step[t];
      bool inside = true;
      for (int t = 0; t < nf && inside; ++t) {
        const double b = sl.sd[F[t]] * u_try[F[t]];
        if (b < 1e-13) inside = false;
        if (box && b > fiber.regime().bounds()[F[t]] - 1e-13) inside = false;
      }
      if (!inside) continue;
      const Eigen::VectorXd nw_try = nu_w + alpha * step.segment(nf, m);
      const double nc_try = nu_cap + (with_cap ? alpha * step[nf + m] : 0.0);
      const Eigen::VectorXd r_try = residual(u_try, nw_try, nc_try);
      if (r_try.norm() <= (1.0 - 1e-4 * alpha) * r.norm() ||
          r_try.lpNorm<Eigen::Infinity>() <= 1e-13 * scale) {
        u = u_try;
        nu_w = nw_try;
        nu_cap = nc_try;
        r = r_try;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }

  PolishRes out;
  out.u = u;
  out.nu_w = nu_w;
  out.nu_cap = nu_cap;
  out.r_inf = r.lpNorm<Eigen::Infinity>();
  out.ok = out.r_inf <= 1e-6 * scale;
  return out;
}

}  // namespace

Eigen::VectorXi pattern_of(const Eigen::VectorXd& u) {
  Eigen::VectorXi s(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) s[i] = u[i] < 0.0 ? -1 : 1;
  return s;
}

std::vector<Eigen::VectorXd> seed_points(const FeasibleFiber& fiber,
                                         std::uint64_t seed, int random_seeds) {
  const int k = fiber.null_dim();
  std::vector<Eigen::VectorXd> out;
  out.push_back(Eigen::VectorXd::Zero(k));

  double r_base;
  if (fiber.regime().is_box()) {
    Eigen::VectorXd b = fiber.regime().bounds();
    std::sort(b.data(), b.data() + b.size());
    const Eigen::Index nb = b.size();
    r_base = (nb % 2 == 1) ? b[nb / 2] : 0.5 * (b[nb / 2 - 1] + b[nb / 2]);
  } else {
    r_base = 1.0 + fiber.u_particular().lpNorm<Eigen::Infinity>();
  }

  for (int j = 0; j < k; ++j) {
    for (const double r : {0.5, 1.0, 2.0, 4.0}) {
      out.push_back(r * r_base * Eigen::VectorXd::Unit(k, j));
      out.push_back(-r * r_base * Eigen::VectorXd::Unit(k, j));
    }
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int t = 0; t < random_seeds; ++t) {
    Eigen::VectorXd z(k);
    for (int attempt = 0; attempt < 64; ++attempt) {
      for (int j = 0; j < k; ++j) z[j] = 2.0 * r_base * dist(rng);
      if (!fiber.regime().is_box()) break;
      if (fiber.regime().residuals(fiber.point_at(z)).maxCoeff() <= 0.0) break;
    }
    out.push_back(z);
  }
  return out;
}

std::vector<std::pair<Eigen::VectorXi, Eigen::VectorXd>> harvest_patterns(
    const FeasibleFiber& fiber, const std::vector<Eigen::VectorXd>& seeds) {
  std::vector<std::pair<Eigen::VectorXi, Eigen::VectorXd>> pats;
  auto add = [&](const Eigen::VectorXi& s, const Eigen::VectorXd& z) {
    for (const auto& [p, zz] : pats) {
      if ((p.array() == s.array()).all()) return;
    }
    pats.emplace_back(s, z);
  };
  const Eigen::VectorXd z_int = fiber.coords_of(fiber.interior_point());
  add(pattern_of(fiber.u_particular()), Eigen::VectorXd::Zero(fiber.null_dim()));
  add(pattern_of(fiber.interior_point()), z_int);
  add(Eigen::VectorXi::Ones(fiber.system().actuator_count()), z_int);
  for (const auto& z : seeds) add(pattern_of(fiber.point_at(z)), z);
  return pats;
}

PatternOutcome solve_pattern(const FeasibleFiber& fiber, Kind kind,
                             const Eigen::VectorXi& s, double energy_cap,
                             const Eigen::VectorXd& z_init) {
  const ActuationSystem& sys = fiber.system();
  const int n = sys.actuator_count();
  const int k = fiber.null_dim();
  const Eigen::MatrixXd& N = fiber.null_basis();
  const Eigen::VectorXd& up = fiber.u_particular();
  const Eigen::MatrixXd& A = sys.matrix();
  const int m = sys.task_dim();
  const bool box = fiber.regime().is_box();
  const bool has_cap = std::isfinite(energy_cap);
  const Slice sl = make_slice(fiber, s);

  PatternOutcome out;

  enum class RowType { OrthantLo, BoxHi, Ball, Cap };
  struct RowInfo {
    RowType type;
    int actuator;
  };
  std::vector<SmoothFunction> cons;
  std::vector<RowInfo> rows;
  for (int i = 0; i < n; ++i) {
    cons.push_back(affine_function(Eigen::VectorXd(-sl.sd[i] * N.row(i).transpose()), -sl.sd[i] * up[i]));
    rows.push_back({RowType::OrthantLo, i});
  }
  if (box) {
    const Eigen::VectorXd& ub = fiber.regime().bounds();
    for (int i = 0; i < n; ++i) {
      cons.push_back(affine_function(Eigen::VectorXd(sl.sd[i] * N.row(i).transpose()), sl.sd[i] * up[i] - ub[i]));
      rows.push_back({RowType::BoxHi, i});
    }
  }
  double trust_radius = 0.0;
  if (!box) {
    trust_radius = 1e4 * sl.u_scale;
    cons.push_back(ball_function(Eigen::VectorXd::Zero(k), trust_radius));
    rows.push_back({RowType::Ball, -1});
  }
  if (has_cap) {
    cons.push_back(abs_energy_z(&fiber, -energy_cap));
    rows.push_back({RowType::Cap, -1});
  }

  auto max_violation = [&](const Eigen::VectorXd& z) {
    double worst = -kInf;
    for (const auto& c : cons) {
      const double v = c.value(z);
      if (std::isnan(v)) return kInf;
      worst = std::max(worst, v);
    }
    return worst;
  };

  Eigen::VectorXd z = z_init;
  if (!(max_violation(z) < -1e-9)) {
    const PhaseOneResult ph = phase_one(cons, z_init, 100.0 * (sl.u_scale + z_init.norm() + 1.0),
                                        1e-3 * std::min(1.0, sl.u_scale));
    if (!(ph.max_violation < -1e-9)) return out;  // slice has no interior
    z = ph.x;
  }

  const BarrierResult br = minimize_barrier(pattern_objective_z(sl, kind), cons, z);
  z = br.x;
  out.newton_steps = br.newton_steps;
  out.usable = true;
  if (!box) out.trust_active = z.norm() > 0.9 * trust_radius;

  Eigen::VectorXd u = sl.u_of(z);
  const double barrier_exact = (kind == Kind::Energy) ? energy_u(sys, u) : slice_promptness(sys, u);

  // active-face polish with multiplier-sign refinement
  const double act_slack = 1e-5 * sl.u_scale;
  std::vector<int> pins(n, 0);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j].type == RowType::OrthantLo && -cons[j].value(z) < act_slack) pins[rows[j].actuator] = 1;
    if (rows[j].type == RowType::BoxHi && -cons[j].value(z) < act_slack) pins[rows[j].actuator] = 2;
  }
  bool cap_on = false;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j].type == RowType::Cap && -cons[j].value(z) < 1e-5 * (1.0 + std::abs(energy_cap))) cap_on = true;
  }

  bool polished = false;
  Eigen::VectorXd nu_w = Eigen::VectorXd::Zero(m);
  double nu_cap = 0.0;
  std::vector<double> mu_pin(n, 0.0);
  std::vector<int> pins_final = pins;

  if (!out.trust_active) {
    for (int round = 0; round < 4 && !polished; ++round) {
      const auto pr = polish_once(fiber, kind, sl, pins, cap_on, energy_cap, u);
      if (!pr || !pr->ok) break;

      const Eigen::VectorXd g = kind_grad_u(kind, sl, pr->u);
      Eigen::VectorXd gc;
      if (cap_on) gc = energy_grad_u(sys, pr->u);
      const double mtol = 1e-8 * (1.0 + g.lpNorm<Eigen::Infinity>());
      bool changed = false;
      std::vector<double> mu_now(n, 0.0);
      for (int i = 0; i < n; ++i) {
        if (pins[i] == 0) continue;
        const double rfull = g[i] + A.col(i).dot(pr->nu_w) + (cap_on ? pr->nu_cap * gc[i] : 0.0);
        const double mu = (pins[i] == 1) ? sl.sd[i] * rfull : -sl.sd[i] * rfull;
        if (mu < -mtol) {
          pins[i] = 0;
          changed = true;
        } else {
          mu_now[i] = std::max(mu, 0.0);
        }
      }
      if (cap_on && pr->nu_cap < -mtol) {
        cap_on = false;
        changed = true;
      }
      if (changed) continue;

      const double exact = (kind == Kind::Energy) ? energy_u(sys, pr->u) : slice_promptness(sys, pr->u);
      const bool feas = fiber.regime().residuals(pr->u).maxCoeff() <= kFeasTol &&
                        (sl.sd.cwiseProduct(pr->u).minCoeff() >= -kFeasTol) &&
                        (A * pr->u - fiber.wrench()).lpNorm<Eigen::Infinity>() <=
                            1e-9 * (1.0 + fiber.wrench().lpNorm<Eigen::Infinity>()) &&
                        !(has_cap && energy_u(sys, pr->u) > energy_cap + 1e-7 * (1.0 + std::abs(energy_cap)));
      if (feas && exact <= barrier_exact + 1e-7 * (1.0 + std::abs(barrier_exact))) {
        u = pr->u;
        nu_w = pr->nu_w;
        nu_cap = cap_on ? pr->nu_cap : 0.0;
        mu_pin = mu_now;
        pins_final = pins;
        polished = true;
      } else {
        break;
      }
    }
  }

  out.u = u;
  out.value = (kind == Kind::Energy) ? energy_u(sys, u) : slice_promptness(sys, u);

  const int regime_rows = fiber.regime().constraint_count(n);
  out.mu_regime = Eigen::VectorXd::Zero(regime_rows);
  if (polished) {
    out.lambda = -nu_w;
    out.mu_cap = std::max(nu_cap, 0.0);
    for (int i = 0; i < n; ++i) {
      if (pins_final[i] == 1 && !box) out.mu_regime[i] = mu_pin[i];
      if (pins_final[i] == 2) out.mu_regime[sl.sd[i] > 0 ? i : n + i] = mu_pin[i];
    }
    out.converged = true;
  } else {
    // fall back to the barrier's path multipliers and a least-squares lambda
    Eigen::VectorXd gc;
    if (has_cap) gc = energy_grad_u(sys, u);
    Eigen::VectorXd v = kind_grad_u(kind, sl, u);
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const double muj = std::max(br.multipliers.size() > static_cast<Eigen::Index>(j)
                                      ? br.multipliers[j]
                                      : 0.0,
                                  0.0);
      switch (rows[j].type) {
        case RowType::OrthantLo:
          v[rows[j].actuator] -= muj * sl.sd[rows[j].actuator];
          if (!box) out.mu_regime[rows[j].actuator] = muj;
          break;
        case RowType::BoxHi:
          v[rows[j].actuator] += muj * sl.sd[rows[j].actuator];
          out.mu_regime[sl.sd[rows[j].actuator] > 0 ? rows[j].actuator : n + rows[j].actuator] = muj;
          break;
        case RowType::Cap:
          v += muj * gc;
          out.mu_cap = muj;
          break;
        case RowType::Ball:
          break;  // null-space-only row; does not enter the wrench multipliers
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(A * A.transpose());
    out.lambda = llt.solve(A * v);
    out.converged = br.converged && !out.trust_active;
  }
  return out;
}

std::vector<Eigen::VectorXi> smoothed_energy_patterns(const FeasibleFiber& fiber) {
  if (!fiber.regime().is_box()) return {};
  const ActuationSystem& sys = fiber.system();
  const Eigen::MatrixXd& N = fiber.null_basis();
  const Eigen::VectorXd& up = fiber.u_particular();
  const Eigen::VectorXd& ub = fiber.regime().bounds();
  const int n = sys.actuator_count();

  double u_scale = 1.0 + up.lpNorm<Eigen::Infinity>();
  u_scale = std::max(u_scale, ub.maxCoeff());
  const double delta = 1e-5 * u_scale;

  std::vector<SmoothFunction> cons;
  for (int i = 0; i < n; ++i) {
    cons.push_back(affine_function(Eigen::VectorXd(N.row(i).transpose()), up[i] - ub[i]));
    cons.push_back(affine_function(Eigen::VectorXd(-N.row(i).transpose()), -up[i] - ub[i]));
  }

  Eigen::VectorXd z0 = fiber.coords_of(fiber.interior_point());
  double worst = -kInf;
  for (const auto& c : cons) worst = std::max(worst, c.value(z0));
  if (!(worst < -1e-9)) {
    const PhaseOneResult ph = phase_one(cons, z0, 100.0 * u_scale, 1e-3);
    if (!(ph.max_violation < -1e-9)) return {};
    z0 = ph.x;
  }

  const Eigen::VectorXd c = sys.energy_weights();
  SmoothFunction f;
  auto u_of = [&fiber](const Eigen::VectorXd& z) {
    return Eigen::VectorXd(fiber.u_particular() + fiber.null_basis() * z);
  };
  f.value = [c, u_of, delta](const Eigen::VectorXd& z) {
    const Eigen::VectorXd u = u_of(z);
    return (c.array() * (u.array().square() + delta * delta).pow(0.75)).sum();
  };
  f.gradient = [c, u_of, delta, &N](const Eigen::VectorXd& z) {
    const Eigen::VectorXd u = u_of(z);
    const Eigen::ArrayXd t = (u.array().square() + delta * delta);
    return Eigen::VectorXd(N.transpose() * (1.5 * c.array() * u.array() * t.pow(-0.25)).matrix());
  };
  f.hessian = [c, u_of, delta, &N](const Eigen::VectorXd& z) {
    const Eigen::VectorXd u = u_of(z);
    const Eigen::ArrayXd t = (u.array().square() + delta * delta);
    const Eigen::ArrayXd h = 1.5 * c.array() * (t.pow(-0.25) - 0.5 * u.array().square() * t.pow(-1.25));
    return Eigen::MatrixXd(N.transpose() * h.matrix().asDiagonal() * N);
  };

  BarrierOptions bo;
  bo.gap_tol = 1e-9;
  const BarrierResult br = minimize_barrier(f, cons, z0, bo);
  const Eigen::VectorXd u_star = u_of(br.x);

  std::vector<Eigen::VectorXi> pats;
  pats.push_back(pattern_of(u_star));
  Eigen::VectorXi flipped = pats[0];
  bool any = false;
  for (int i = 0; i < n; ++i) {
    if (std::abs(u_star[i]) <= 10.0 * delta) {
      flipped[i] = -flipped[i];
      any = true;
    }
  }
  if (any) pats.push_back(flipped);
  return pats;
}

std::optional<Eigen::VectorXd> singleton_point(const FeasibleFiber& fiber) {
  if (fiber.interior_slack() > 1e-9) return std::nullopt;
  const int k = fiber.null_dim();
  const int n = fiber.system().actuator_count();
  const Eigen::MatrixXd& N = fiber.null_basis();
  const Eigen::VectorXd& up = fiber.u_particular();
  const bool box = fiber.regime().is_box();

  const Eigen::VectorXd r0 = fiber.regime().residuals(fiber.interior_point());
  std::vector<int> tight;
  for (int j = 0; j < r0.size(); ++j) {
    if (r0[j] > -1e-7) tight.push_back(j);
  }
  if (static_cast<int>(tight.size()) < k) return std::nullopt;

  Eigen::MatrixXd T(tight.size(), k);
  Eigen::VectorXd rhs(tight.size());
  for (std::size_t t = 0; t < tight.size(); ++t) {
    const int j = tight[t];
    if (!box) {
      T.row(t) = -N.row(j);
      rhs[t] = up[j];
    } else if (j < n) {
      T.row(t) = N.row(j);
      rhs[t] = fiber.regime().bounds()[j] - up[j];
    } else {
      T.row(t) = -N.row(j - n);
      rhs[t] = up[j - n] + fiber.regime().bounds()[j - n];
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
  qr.setThreshold(1e-9);
  qr.compute(T);
  if (qr.rank() < k) return std::nullopt;
  const Eigen::VectorXd z = qr.solve(rhs);
  const Eigen::VectorXd u = up + N * z;
  if (fiber.regime().residuals(u).maxCoeff() > kFeasTol) return std::nullopt;
  return u;
}

double kkt_scale_of(const FeasibleFiber& fiber) {
  return 1.0 + energy_grad_u(fiber.system(), fiber.u_particular()).norm();
}

double kkt_residual(const FeasibleFiber& fiber, Kind kind, const Eigen::VectorXd& u,
                    const Eigen::VectorXd& lambda, const Eigen::VectorXd& mu_regime,
                    double mu_cap, double energy_cap) {
  const ActuationSystem& sys = fiber.system();
  const Eigen::MatrixXd& A = sys.matrix();
  const int n = sys.actuator_count();
  const bool box = fiber.regime().is_box();
  const bool has_cap = std::isfinite(energy_cap);

  Eigen::VectorXd gf, q;
  if (kind == Kind::Energy) {
    gf = energy_grad_u(sys, u);
  } else {
    const PromptnessGradient pg = promptness_grad_u(sys, u);  // throws on singular S
    gf = pg.grad;
    q = 2.0 * pg.grad.cwiseAbs();  // a_i^T S^{-1} a_i
  }
  Eigen::VectorXd gc;
  if (has_cap) gc = energy_grad_u(sys, u);

  Eigen::VectorXd stat = gf - A.transpose() * lambda;
  if (has_cap) stat += mu_cap * gc;
  if (!box) {
    stat -= mu_regime;
  } else {
    stat += mu_regime.head(n);
    stat -= mu_regime.tail(n);
  }

  double r = 0.0;
  for (int i = 0; i < n; ++i) {
    if (kind == Kind::Promptness && std::abs(u[i]) <= kSmoothnessTol) {
      // kink row: stationarity means 0 in [other - q/2, other + q/2]
      const double other = stat[i] - gf[i];
      r = std::max(r, std::max(0.0, std::abs(other) - 0.5 * q[i]));
    } else {
      r = std::max(r, std::abs(stat[i]));
    }
  }
  r = std::max(r, (A * u - fiber.wrench()).lpNorm<Eigen::Infinity>());

  const Eigen::VectorXd g = fiber.regime().residuals(u);
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    r = std::max(r, g[j]);
    r = std::max(r, -mu_regime[j]);
    r = std::max(r, std::abs(mu_regime[j] * g[j]));
  }
  if (has_cap) {
    const double capres = energy_u(sys, u) - energy_cap;
    r = std::max(r, capres);
    r = std::max(r, -mu_cap);
    r = std::max(r, std::abs(mu_cap * capres));
  }
  return r;
}

}  // namespace fiberalloc::detail

namespace fiberalloc {

namespace {

using detail::Kind;
using detail::PatternOutcome;

bool lex_less_rounded(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double da = std::nearbyint(a[i] * 1e9);
    const double db = std::nearbyint(b[i] * 1e9);
    if (da != db) return da < db;
  }
  return false;
}

const PatternOutcome* select_best(const std::vector<PatternOutcome>& cands) {
  const PatternOutcome* best = nullptr;
  for (const auto& c : cands) {
    if (!c.usable || !std::isfinite(c.value)) continue;
    if (!best) {
      best = &c;
      continue;
    }
    // Tie window covers solver noise between symmetric or duplicate optima
    // (~1e-15 relative); genuine improvements, e.g. from seam refinement,
    // can be as small as a few 1e-9 and must win on value.
    const double tol = 1e-12 * (1.0 + std::abs(best->value));
    if (c.value < best->value - tol) {
      best = &c;
    } else if (c.value <= best->value + tol) {
      if (c.converged != best->converged) {
        if (c.converged) best = &c;
      } else if (lex_less_rounded(c.u, best->u)) {
        best = &c;
      }
    }
  }
  return best;
}

void fill_active_set(const FeasibleFiber& fiber, const SolveOptions& opts, SolveReport* rep) {
  rep->active_set.clear();
  if (rep->u_star.size() == 0) return;
  const int n = fiber.system().actuator_count();
  for (int i = 0; i < n; ++i) {
    const double slack = fiber.regime().is_box()
                             ? fiber.regime().bounds()[i] - std::abs(rep->u_star[i])
                             : rep->u_star[i];
    if (slack <= opts.active_tol) rep->active_set.push_back(i);
  }
}

SolveReport singleton_report(const FeasibleFiber& fiber, Kind kind, const Eigen::VectorXd& u0,
                             const SolveOptions& opts) {
  const ActuationSystem& sys = fiber.system();
  if (kind == Kind::Promptness && promptness_u(sys, u0).singular) {
    throw std::domain_error(
        "max_promptness: the only feasible point has a rank-deficient Gramian");
  }
  SolveReport rep;
  rep.kkt_scale = detail::kkt_scale_of(fiber);
  rep.u_star = u0;
  rep.objective = evaluate_objectives(sys, u0);

  Eigen::VectorXd gf = (kind == Kind::Energy) ? energy_grad_u(sys, u0)
                                              : promptness_grad_u(sys, u0).grad;
  const Eigen::MatrixXd& A = sys.matrix();
  Eigen::LLT<Eigen::MatrixXd> llt(A * A.transpose());
  const Eigen::VectorXd lambda = llt.solve(A * gf);
  const Eigen::VectorXd rho = gf - A.transpose() * lambda;

  const int n = sys.actuator_count();
  rep.bound_multipliers = Eigen::VectorXd::Zero(fiber.regime().constraint_count(n));
  const Eigen::VectorXd res = fiber.regime().residuals(u0);
  if (!fiber.regime().is_box()) {
    for (int i = 0; i < n; ++i) {
      if (res[i] > -1e-7) rep.bound_multipliers[i] = std::max(rho[i], 0.0);
    }
  } else {
    for (int i = 0; i < n; ++i) {
      if (res[i] > -1e-7) rep.bound_multipliers[i] = std::max(-rho[i], 0.0);
      if (res[n + i] > -1e-7) rep.bound_multipliers[n + i] = std::max(rho[i], 0.0);
    }
  }
  rep.multipliers = (kind == Kind::Energy) ? lambda : Eigen::VectorXd(-2.0 * lambda);
  rep.kkt_residual = detail::kkt_residual(fiber, kind, u0, lambda, rep.bound_multipliers, 0.0,
                                          std::numeric_limits<double>::quiet_NaN());
  fill_active_set(fiber, opts, &rep);
  rep.converged = rep.kkt_residual < opts.kkt_tol * rep.kkt_scale;
  rep.message = "feasible set is a single point";
  return rep;
}

SolveReport assemble_report(const FeasibleFiber& fiber, Kind kind,
                            const std::vector<PatternOutcome>& cands, int seeds_tried,
                            const SolveOptions& opts) {
  SolveReport rep;
  rep.kkt_scale = detail::kkt_scale_of(fiber);
  rep.seeds_tried = seeds_tried;
  for (const auto& c : cands) rep.iterations += c.newton_steps;

  const PatternOutcome* best = select_best(cands);
  if (!best) {
    if (kind == Kind::Promptness) {
      throw std::domain_error(
          "max_promptness: no feasible point with positive-definite Gramian (no sign slice has interior)");
    }
    rep.converged = false;
    rep.message = "no sign slice with interior produced a candidate";
    return rep;
  }

  rep.u_star = best->u;
  rep.objective = evaluate_objectives(fiber.system(), best->u);
  rep.bound_multipliers = best->mu_regime;
  rep.multipliers = (kind == Kind::Energy) ? best->lambda : Eigen::VectorXd(-2.0 * best->lambda);
  rep.kkt_residual = detail::kkt_residual(fiber, kind, best->u, best->lambda, best->mu_regime,
                                          0.0, std::numeric_limits<double>::quiet_NaN());
  fill_active_set(fiber, opts, &rep);
  rep.converged = best->converged && rep.kkt_residual < opts.kkt_tol * rep.kkt_scale &&
                  is_feasible(fiber, best->u).feasible;
  if (best->trust_active) {
    rep.converged = false;
    rep.message = "trust region active; objective appears unbounded on this fiber";
  }
  return rep;
}

void throw_if_empty(const FeasibleFiber& fiber, const char* who) {
  if (fiber.empty()) {
    throw std::invalid_argument(std::string(who) + ": fiber is empty (best achievable bound violation " +
                                std::to_string(fiber.infeasibility()) + ")");
  }
}

std::vector<PatternOutcome> run_patterns(const FeasibleFiber& fiber, Kind kind,
                                         const SolveOptions& opts, int* seeds_tried) {
  std::vector<PatternOutcome> cands;
  if (!fiber.regime().is_box()) {
    *seeds_tried = 1;
    const Eigen::VectorXi ones = Eigen::VectorXi::Ones(fiber.system().actuator_count());
    cands.push_back(detail::solve_pattern(fiber, kind, ones,
                                          std::numeric_limits<double>::quiet_NaN(),
                                          fiber.coords_of(fiber.interior_point())));
    return cands;
  }
  const auto seeds = detail::seed_points(fiber, opts.seed, opts.random_seeds);
  *seeds_tried = static_cast<int>(seeds.size());
  auto pats = detail::harvest_patterns(fiber, seeds);
  if (kind == Kind::Energy) {
    const Eigen::VectorXd z_int = fiber.coords_of(fiber.interior_point());
    for (const auto& sp : detail::smoothed_energy_patterns(fiber)) {
      bool seen = false;
      for (const auto& [p, z] : pats) {
        if ((p.array() == sp.array()).all()) seen = true;
      }
      if (!seen) pats.emplace_back(sp, z_int);
    }
  }
  for (const auto& [s, z] : pats) {
    cands.push_back(detail::solve_pattern(fiber, kind, s,
                                          std::numeric_limits<double>::quiet_NaN(), z));
  }
  return cands;
}

// The energy density has zero slope at u_i = 0, so a coordinate resting on the
// seam between sign slices is optimal only if its reduced gradient vanishes.
// Otherwise the true optimum sits just across the seam (|u_i| = (2|g_i|/3c_i)^2,
// often microscopic), which the pattern harvest can miss. Flip the offending
// signs and re-solve until every seam coordinate is stationary.
void refine_energy_seams(const FeasibleFiber& fiber, const SolveOptions& opts,
                         std::vector<PatternOutcome>* cands) {
  if (!fiber.regime().is_box()) return;
  const int n = fiber.system().actuator_count();
  const Eigen::MatrixXd& A = fiber.system().matrix();
  const double flip_tol = 0.5 * opts.kkt_tol * detail::kkt_scale_of(fiber);
  std::vector<Eigen::VectorXi> tried;
  for (int round = 0; round < 2 * n; ++round) {
    const PatternOutcome* best = select_best(*cands);
    if (!best || best->trust_active) return;
    const Eigen::VectorXd g = A.transpose() * best->lambda;
    Eigen::VectorXi s(n);
    bool flip = false;
    for (int i = 0; i < n; ++i) {
      if (std::abs(best->u[i]) > kSmoothnessTol) {
        s[i] = best->u[i] > 0.0 ? 1 : -1;
      } else if (std::abs(g[i]) > flip_tol) {
        s[i] = g[i] > 0.0 ? 1 : -1;
        flip = true;
      } else {
        s[i] = 1;
      }
    }
    if (!flip) return;
    bool seen = false;
    for (const auto& t : tried) {
      if ((t.array() == s.array()).all()) seen = true;
    }
    if (seen) return;
    tried.push_back(s);
    cands->push_back(detail::solve_pattern(fiber, Kind::Energy, s,
                                           std::numeric_limits<double>::quiet_NaN(),
                                           fiber.coords_of(best->u)));
  }
}

}  // namespace

SolveReport min_energy(const FeasibleFiber& fiber, const SolveOptions& opts) {
  throw_if_empty(fiber, "min_energy");
  if (const auto u0 = detail::singleton_point(fiber)) {
    return singleton_report(fiber, Kind::Energy, *u0, opts);
  }
  int seeds_tried = 0;
  auto cands = run_patterns(fiber, Kind::Energy, opts, &seeds_tried);
  refine_energy_seams(fiber, opts, &cands);
  return assemble_report(fiber, Kind::Energy, cands, seeds_tried, opts);
}

SolveReport max_promptness(const FeasibleFiber& fiber, const SolveOptions& opts) {
  throw_if_empty(fiber, "max_promptness");
  if (const auto u0 = detail::singleton_point(fiber)) {
    return singleton_report(fiber, Kind::Promptness, *u0, opts);
  }
  int seeds_tried = 0;
  const auto cands = run_patterns(fiber, Kind::Promptness, opts, &seeds_tried);
  return assemble_report(fiber, Kind::Promptness, cands, seeds_tried, opts);
}

double kkt_residual_energy(const FeasibleFiber& fiber, const Eigen::VectorXd& u,
                           const Eigen::VectorXd& lambda,
                           const Eigen::VectorXd& bound_multipliers) {
  if (lambda.size() != fiber.system().task_dim()) {
    throw std::invalid_argument("kkt_residual_energy: multiplier length must match task dimension");
  }
  if (bound_multipliers.size() != fiber.regime().constraint_count(fiber.system().actuator_count())) {
    throw std::invalid_argument("kkt_residual_energy: bound multiplier count does not match regime");
  }
  return detail::kkt_residual(fiber, Kind::Energy, u, lambda, bound_multipliers, 0.0,
                              std::numeric_limits<double>::quiet_NaN());
}

double kkt_residual_promptness(const FeasibleFiber& fiber, const Eigen::VectorXd& u,
                               const Eigen::VectorXd& eta,
                               const Eigen::VectorXd& bound_multipliers) {
  if (eta.size() != fiber.system().task_dim()) {
    throw std::invalid_argument("kkt_residual_promptness: multiplier length must match task dimension");
  }
  if (bound_multipliers.size() != fiber.regime().constraint_count(fiber.system().actuator_count())) {
    throw std::invalid_argument("kkt_residual_promptness: bound multiplier count does not match regime");
  }
  return detail::kkt_residual(fiber, Kind::Promptness, u, Eigen::VectorXd(-0.5 * eta),
                              bound_multipliers, 0.0, std::numeric_limits<double>::quiet_NaN());
}

}  // namespace fiberalloc
