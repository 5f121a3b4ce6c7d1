// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <Eigen/Core>

#include <utility>

#include "irw/track.hpp"

namespace irw {

using StateVector = Eigen::Matrix<double, 6, 1>;
using InputMatrix = Eigen::Matrix<double, 6, 2>;
using StateMatrix = Eigen::Matrix<double, 6, 6>;

/// Control-model state of one running gear.
///
/// Sign conventions: the track frame has x forward, y to the right and z
/// down, so a positive yaw turns right. Wheel spin is positive for forward
/// rolling and positive motor torque drives the vehicle forward.
struct GearState {
  double x = 0.0;          // position along the track [m]
  double psi_ax = 0.0;     // absolute axle yaw [rad]
  double xdot = 0.0;       // [m/s]
  double psidot_ax = 0.0;  // [rad/s]
  double y = 0.0;          // lateral offset from the track centre line (y_TrAx) [m]
  double psi_rel = 0.0;    // yaw relative to the track (psi_TrAx) [rad]

  [[nodiscard]] StateVector vec() const {
    StateVector v;
    v << x, psi_ax, xdot, psidot_ax, y, psi_rel;
    return v;
  }
  static GearState from(const StateVector& v) { return {v[0], v[1], v[2], v[3], v[4], v[5]}; }
};

/// Motor torques, ordered as in the input vector [tau_ri, tau_le].
struct ControlInput {
  double tau_ri = 0.0;  // [N m]
  double tau_le = 0.0;  // [N m]
};

struct VehicleParams {
  double m = 3000.0;          // wheel carrier + wheels [kg]
  double m_cb = 32000.0;      // car body [kg]
  double j_ax_x = 1200.0;     // carrier roll inertia [kg m^2]
  double j_ax_z = 1500.0;     // carrier yaw inertia [kg m^2]
  double j_w_x = 35.0;        // wheel inertia about the longitudinal axis [kg m^2]
  double j_w_y = 60.0;        // wheel spin inertia [kg m^2]
  double j_w_z = 35.0;        // wheel inertia about the vertical axis [kg m^2]
  double k_s_x = 1e6;         // roll stiffness [N m/rad]
  double k_s_z = 5e5;         // yaw stiffness towards the car body [N m/rad]
  double k_d_x = 1e4;         // roll damping [N m s/rad]
  double k_d_z = 5e4;         // yaw damping [N m s/rad]
  double r0 = 0.46;           // nominal wheel radius [m]
  double delta0 = 0.025;      // cone / contact angle [rad]
  double gauge = kDefaultGauge;
  double car_body_length = 17.0;  // distance between front and rear running gear [m]
  double g = kGravity;
  double tau_min = -10000.0;  // [N m]
  double tau_max = 10000.0;   // [N m]
  double cg_height = 1.0;     // lever arm for curve load transfer (plant only) [m]

  /// Conic-wheel geometry factor tan(d0) / (b/2 - r0 tan(d0)).
  [[nodiscard]] double gamma() const;
  /// Longitudinal mass m + m_cb/2 for a given car body mass.
  [[nodiscard]] double mx(double car_body_mass) const { return m + 0.5 * car_body_mass; }
  [[nodiscard]] double mx() const { return mx(m_cb); }
  /// Throws std::invalid_argument if any parameter is out of range.
  void validate() const;
};

/// Varying model parameters: local track data plus the car body mass.
struct ModelTheta {
  TrackLocal track;
  double car_body_mass = 32000.0;
};

ModelTheta theta_at(const TrackGeometry& track, double p, const VehicleParams& params);

/// Dependent quantities of conic wheels on line-shaped rails.
struct DependentGeometry {
  double phi_track_axle = 0.0;  // [rad]
  double z_track_axle = 0.0;    // [m], positive down
  double r_le = 0.0, r_ri = 0.0;  // rolling radii [m]
  double y_le = 0.0, y_ri = 0.0;  // lateral distance carrier centre to contact [m]
};

/// Radii follow r = r0 -/+ tan(d0) y (left/right); the right wheel rolls on a
/// larger radius when the carrier moves right. Lateral distances are
/// y_le = b/2 + y and y_ri = b/2 - y.
/// Throws std::domain_error for |psi_rel| >= pi/2.
DependentGeometry dependent_geometry(double y, double psi_rel, double phi_track,
                                     const VehicleParams& params);

/// Ideal-rolling wheel speeds (omega_ri, omega_le), positive forward.
std::pair<double, double> wheel_speeds(const GearState& state, double psi_rate_track,
                                       const DependentGeometry& geom);

/// Generalized forces on [x, psi_ax] produced by the motor torques.
Eigen::Vector2d generalized_forces(const ControlInput& u, const DependentGeometry& geom);

/// Time derivative of the control-model state. Throws std::domain_error
/// below the 0.1 m/s validity floor.
StateVector continuous_dynamics(const GearState& state, const ControlInput& u,
                                const ModelTheta& theta, const VehicleParams& params);

/// Explicit Euler step x + T f(x, u). Throws std::invalid_argument for T <= 0.
GearState discrete_step(const GearState& state, const ControlInput& u, const ModelTheta& theta,
                        const VehicleParams& params, double step);

struct Linearization {
  StateMatrix a;
  InputMatrix b;
  StateVector next;  // f_d(x_lin, u_lin)
};

/// Jacobians of the Euler-discretised model (complex-step differentiation).
Linearization linearize(const GearState& x_lin, const ControlInput& u_lin,
                        const ModelTheta& theta, const VehicleParams& params, double step);

namespace detail {

/// Unchecked state derivative used inside prediction loops.
StateVector model_derivative(const StateVector& x, const ControlInput& u,
                             const ModelTheta& theta, const VehicleParams& params);

/// Accelerations [xddot, psiddot_ax] for given generalized forces. With
/// spin_coupled = false the wheel spin inertia is left out (the wheels are
/// separate bodies, as in the plant).
Eigen::Vector2d reduced_accelerations(const StateVector& x, const ModelTheta& theta,
                                      const VehicleParams& params, double force_lon,
                                      double moment_yaw, bool spin_coupled);

}  // namespace detail

}  // namespace irw
