#pragma once

#include <Eigen/Dense>
#include <vector>

namespace fiberalloc {

inline constexpr double kGravity = 9.81;  // m/s^2

// Rotor speeds are signed (bidirectional props); the effort coordinate
// u_i = v_i*|v_i| makes thrust linear in u while keeping the sign.
Eigen::VectorXd speed_to_effort(const Eigen::VectorXd& v);
Eigen::VectorXd effort_to_speed(const Eigen::VectorXd& u);

// Planar rotor layout for a coplanar multirotor: column i of `positions`
// is the arm tip (x_i, y_i) in the body frame, spins[i] in {+1,-1} is the
// drag-torque sign, k_f and k_m are thrust and drag coefficients per unit
// effort.
struct RotorGeometry {
  Eigen::Matrix2Xd positions;
  Eigen::VectorXi spins;
  double k_f = 1.0;
  double k_m = 1.0;
};

// Linear effort-to-wrench map w = A u together with the per-actuator
// energy weights c_i > 0. A must have full row rank and strictly more
// columns than rows; both are checked at construction.
class ActuationSystem {
 public:
  ActuationSystem(Eigen::MatrixXd A, Eigen::VectorXd energy_weights);

  const Eigen::MatrixXd& matrix() const { return A_; }
  const Eigen::VectorXd& energy_weights() const { return c_; }
  int actuator_count() const { return n_; }
  int task_dim() const { return m_; }

  // w = A u.
  Eigen::VectorXd wrench_of(const Eigen::VectorXd& u) const;

  // Jacobian of v -> A (v.*|v|), i.e. 2 A diag(|v|). Continuous extension
  // at v_i = 0 (zero column).
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& v) const;

  // Control Gramian S(u) = A diag(|u|) A^T. Satisfies J(v) J(v)^T = 4 S(u(v)).
  Eigen::MatrixXd gramian(const Eigen::VectorXd& u) const;

 private:
  Eigen::MatrixXd A_;
  Eigen::VectorXd c_;
  int m_ = 0;
  int n_ = 0;
};

// Stacks rows [k_f*y_i; -k_f*x_i; k_m*sigma_i; k_f] for a coplanar craft
// controlling (roll torque, pitch torque, yaw torque, total thrust).
// Empty weights means c = 1.
ActuationSystem build_from_geometry(const RotorGeometry& geometry,
                                    const Eigen::VectorXd& energy_weights = {});

// Regular hexarotor: rotor i at angle offset + i*pi/3 on a circle of radius
// arm_radius_m, spins alternating +1,-1,... unless a 6-entry pattern is
// given. mass_kg only validates > 0; use hover_thrust(mass) for the wrench.
ActuationSystem build_hexarotor(double mass_kg, double arm_radius_m,
                                double k_f, double k_m,
                                double angle_offset_rad = 0.0,
                                const std::vector<int>& spin_pattern = {},
                                const Eigen::VectorXd& energy_weights = {});

RotorGeometry hexarotor_geometry(double arm_radius_m, double k_f, double k_m,
                                 double angle_offset_rad = 0.0,
                                 const std::vector<int>& spin_pattern = {});

// Total thrust that balances gravity: mass * g.
double hover_thrust(double mass_kg);

}  // namespace fiberalloc
