#include "fiberalloc/actuation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fiberalloc {

Eigen::VectorXd speed_to_effort(const Eigen::VectorXd& v) {
  return v.cwiseProduct(v.cwiseAbs());
}

Eigen::VectorXd effort_to_speed(const Eigen::VectorXd& u) {
  Eigen::VectorXd v(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    v[i] = std::copysign(std::sqrt(std::abs(u[i])), u[i]);
  }
  return v;
}

ActuationSystem::ActuationSystem(Eigen::MatrixXd A, Eigen::VectorXd energy_weights)
    : A_(std::move(A)), c_(std::move(energy_weights)) {
  m_ = static_cast<int>(A_.rows());
  n_ = static_cast<int>(A_.cols());
  if (m_ < 1 || n_ <= m_) {
    throw std::invalid_argument("ActuationSystem: need more actuators than task dimensions, got " +
                                std::to_string(m_) + "x" + std::to_string(n_));
  }
  if (c_.size() == 0) c_ = Eigen::VectorXd::Ones(n_);
  if (c_.size() != n_) {
    throw std::invalid_argument("ActuationSystem: energy weight count does not match actuator count");
  }
  if ((c_.array() <= 0.0).any()) {
    throw std::invalid_argument("ActuationSystem: energy weights must be strictly positive");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A_);
  const double sigma_max = svd.singularValues()[0];
  const double rank_tol = 1e-9 * sigma_max;
  if (sigma_max == 0.0 || svd.singularValues()[m_ - 1] <= rank_tol) {
    throw std::invalid_argument("ActuationSystem: effort-to-wrench map is row rank deficient (sigma_min = " +
                                std::to_string(svd.singularValues()[m_ - 1]) + ")");
  }
}

Eigen::VectorXd ActuationSystem::wrench_of(const Eigen::VectorXd& u) const {
  return A_ * u;
}

Eigen::MatrixXd ActuationSystem::jacobian(const Eigen::VectorXd& v) const {
  return 2.0 * A_ * v.cwiseAbs().asDiagonal();
}

Eigen::MatrixXd ActuationSystem::gramian(const Eigen::VectorXd& u) const {
  return A_ * u.cwiseAbs().asDiagonal() * A_.transpose();
}

ActuationSystem build_from_geometry(const RotorGeometry& geometry,
                                    const Eigen::VectorXd& energy_weights) {
  const int n = static_cast<int>(geometry.positions.cols());
  if (geometry.spins.size() != n) {
    throw std::invalid_argument("build_from_geometry: need one spin sign per rotor");
  }
  for (int i = 0; i < n; ++i) {
    if (geometry.spins[i] != 1 && geometry.spins[i] != -1) {
      throw std::invalid_argument("build_from_geometry: spin signs must be +1 or -1");
    }
  }
  Eigen::MatrixXd A(4, n);
  for (int i = 0; i < n; ++i) {
    A(0, i) = geometry.k_f * geometry.positions(1, i);
    A(1, i) = -geometry.k_f * geometry.positions(0, i);
    A(2, i) = geometry.k_m * static_cast<double>(geometry.spins[i]);
    A(3, i) = geometry.k_f;
  }
  return ActuationSystem(std::move(A), energy_weights);
}

RotorGeometry hexarotor_geometry(double arm_radius_m, double k_f, double k_m,
                                 double angle_offset_rad,
                                 const std::vector<int>& spin_pattern) {
  if (arm_radius_m <= 0.0) throw std::invalid_argument("hexarotor_geometry: arm radius must be positive");
  if (k_f <= 0.0 || k_m <= 0.0) throw std::invalid_argument("hexarotor_geometry: coefficients must be positive");
  if (!spin_pattern.empty() && spin_pattern.size() != 6) {
    throw std::invalid_argument("hexarotor_geometry: spin pattern must have 6 entries");
  }
  RotorGeometry g;
  g.positions.resize(2, 6);
  g.spins.resize(6);
  g.k_f = k_f;
  g.k_m = k_m;
  for (int i = 0; i < 6; ++i) {
    const double phi = angle_offset_rad + i * M_PI / 3.0;
    g.positions(0, i) = arm_radius_m * std::cos(phi);
    g.positions(1, i) = arm_radius_m * std::sin(phi);
    g.spins[i] = spin_pattern.empty() ? (i % 2 == 0 ? 1 : -1) : spin_pattern[i];
  }
  return g;
}

ActuationSystem build_hexarotor(double mass_kg, double arm_radius_m,
                                double k_f, double k_m,
                                double angle_offset_rad,
                                const std::vector<int>& spin_pattern,
                                const Eigen::VectorXd& energy_weights) {
  if (mass_kg <= 0.0) throw std::invalid_argument("build_hexarotor: mass must be positive");
  return build_from_geometry(
      hexarotor_geometry(arm_radius_m, k_f, k_m, angle_offset_rad, spin_pattern),
      energy_weights);
}

double hover_thrust(double mass_kg) {
  if (mass_kg <= 0.0) throw std::invalid_argument("hover_thrust: mass must be positive");
  return mass_kg * kGravity;
}

}  // namespace fiberalloc
