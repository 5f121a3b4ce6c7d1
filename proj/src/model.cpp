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

#include "irw/model.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace irw {

namespace {

constexpr double kVelocityFloor = 0.1;  // [m/s]

template <class S>
using Vec3 = std::array<S, 3>;

template <class S>
S dot3(const Vec3<S>& a, const Vec3<S>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

// Equations of motion of the reduced running-gear model.
//
// The carrier is described by the coordinates (x, psi_ax, y) with the
// rolling constraint ydot = xdot sin(psi_rel) and psi_rel = psi_ax - psi_tr(x)
// (up to a constant). Each kinetic-energy contribution is written as
// 1/2 w (c . qdot)^2 with qdot = (xdot, psidot_ax, ydot) and c depending on
// (x, psi_ax, y); J holds the total partials of c with respect to x, psi_ax
// and y. The constrained equations are projected onto the admissible
// velocities (Maggi form), so the constraint force does no work. Ideal
// rolling of the wheels is treated the same way.
template <class S>
std::array<S, 2> accelerations(const std::array<S, 6>& x, const ModelTheta& theta,
                               const VehicleParams& p, const S& force_lon, const S& moment_yaw,
                               bool spin_coupled) {
  using std::cos;
  using std::sin;

  const TrackLocal& tr = theta.track;
  const S& psi_ax = x[1];
  const S& v = x[2];
  const S& w = x[3];
  const S& y = x[4];
  const S& s = x[5];

  const double kap = tr.kappa;
  const double kap1 = tr.dkappa;
  const double phi1 = tr.dphi;
  const double phi2 = tr.ddphi;
  const double gam = p.gamma();
  const double tcone = std::tan(p.delta0);
  const double c1 = 0.5 * p.delta0 * p.gauge;
  const double mx = p.mx(theta.car_body_mass);
  const double jz = p.j_ax_z + 2.0 * p.j_w_z;
  const double jx = p.j_ax_x + 2.0 * p.j_w_x;

  const S ss = sin(s);
  const S cs = cos(s);
  const S sec = 1.0 / cs;
  const S tn = ss / cs;
  const S gz = c1 * sec * tn;                     // dz/dpsi_rel
  const S gz_s = c1 * sec * (tn * tn + sec * sec);  // d^2 z/dpsi_rel^2

  const S ydot = v * ss;
  const S sdot = w - kap * v;
  const Vec3<S> qd{v, w, ydot};

  S mass[3][3] = {};
  Vec3<S> h{};
  Vec3<S> grad_t{};

  // A rate c . qdot that is the time derivative of a coordinate (holonomic)
  // contributes the full Lagrangian terms. Wheel spin is not integrable; the
  // wheel angles are kept as hidden coordinates and only their inertial
  // force J (c . qddot + cdot . qdot) is projected back onto qdot.
  auto add = [&](double weight, const Vec3<S>& c, const Vec3<S>& jx_col, const Vec3<S>& ja_col,
                 const Vec3<S>& jy_col, bool holonomic = true) {
    const S u = dot3(c, qd);
    Vec3<S> cdot;
    for (int i = 0; i < 3; ++i) cdot[i] = jx_col[i] * v + ja_col[i] * w + jy_col[i] * ydot;
    const S cdot_q = dot3(cdot, qd);
    for (int i = 0; i < 3; ++i) {
      h[i] += weight * cdot_q * c[i];
      if (holonomic) h[i] += weight * u * cdot[i];
      for (int j = 0; j < 3; ++j) mass[i][j] += weight * c[i] * c[j];
    }
    if (!holonomic) return;
    grad_t[0] += weight * u * dot3(jx_col, qd);
    grad_t[1] += weight * u * dot3(ja_col, qd);
    grad_t[2] += weight * u * dot3(jy_col, qd);
  };

  const S zero{};
  const Vec3<S> none{zero, zero, zero};

  // Longitudinal translation including half the car body.
  add(mx, {S(1.0), zero, zero}, none, none, none);
  // Lateral translation.
  add(p.m, {zero, zero, S(1.0)}, none, none, none);
  // Vertical: zdot = gz (psidot_ax - kappa xdot) - 2 Gamma y ydot.
  add(p.m, {-gz * kap, gz, -2.0 * gam * y},
      {-gz * kap1 + kap * kap * gz_s, -kap * gz_s, zero}, {-gz_s * kap, gz_s, zero},
      {zero, zero, S(-2.0 * gam)});
  // Yaw of carrier and both wheels.
  add(jz, {zero, S(1.0), zero}, none, none, none);
  // Roll: phidot_TrAx = phi' xdot - Gamma ydot.
  add(jx, {S(phi1), zero, S(-gam)}, {S(phi2), zero, zero}, none, none);

  const S r_le = p.r0 - tcone * y;
  const S r_ri = p.r0 + tcone * y;
  const S y_le = 0.5 * p.gauge + y;
  const S y_ri = 0.5 * p.gauge - y;

  if (spin_coupled) {
    // omega_ri = (xdot - y_ri (kappa xdot + psidot_ax)) / r_ri
    const S a_ri = (1.0 - y_ri * kap) / r_ri;
    const S b_ri = -y_ri / r_ri;
    const S a_ri_y = (kap * r_ri - (1.0 - y_ri * kap) * tcone) / (r_ri * r_ri);
    const S b_ri_y = (r_ri + y_ri * tcone) / (r_ri * r_ri);
    add(p.j_w_y, {a_ri, b_ri, zero}, {-y_ri * kap1 / r_ri, zero, zero}, none,
        {a_ri_y, b_ri_y, zero}, false);
    // omega_le = (xdot + y_le (kappa xdot + psidot_ax)) / r_le
    const S a_le = (1.0 + y_le * kap) / r_le;
    const S b_le = y_le / r_le;
    const S a_le_y = (kap * r_le + tcone * (1.0 + y_le * kap)) / (r_le * r_le);
    const S b_le_y = (r_le + y_le * tcone) / (r_le * r_le);
    add(p.j_w_y, {a_le, b_le, zero}, {y_le * kap1 / r_le, zero, zero}, none,
        {a_le_y, b_le_y, zero}, false);
  }

  // Potential: yaw spring to the car body, roll spring, gravity on z.
  const double psi_cb = 0.5 * (tr.psi + tr.psi_rear);
  const double kap_cb = 0.5 * (kap + tr.kappa_rear);
  const S dev = psi_ax - psi_cb;
  const S phi_ax = -gam * y + tr.phi;
  const Vec3<S> grad_v{-p.k_s_z * dev * kap_cb + p.k_s_x * phi_ax * phi1 + p.m * p.g * gz * kap,
                       p.k_s_z * dev - p.m * p.g * gz,
                       -gam * p.k_s_x * phi_ax + 2.0 * p.m * p.g * gam * y};

  // Dissipation.
  const S yaw_rate_dev = w - kap_cb * v;
  const S phidot_ax = phi1 * v - gam * ydot;
  const Vec3<S> grad_d{-kap_cb * p.k_d_z * yaw_rate_dev + p.k_d_x * phidot_ax * phi1,
                       p.k_d_z * yaw_rate_dev, -gam * p.k_d_x * phidot_ax};

  // qddot_3 = S qddot + (0, 0, cos(s) sdot xdot).
  const S ydd_bias = cs * sdot * v;
  Vec3<S> rhs;
  const Vec3<S> force{force_lon, moment_yaw, zero};
  for (int i = 0; i < 3; ++i)
    rhs[i] = force[i] - grad_d[i] + grad_t[i] - grad_v[i] - h[i] - mass[i][2] * ydd_bias;

  const S m00 = mass[0][0] + 2.0 * ss * mass[0][2] + ss * ss * mass[2][2];
  const S m01 = mass[0][1] + ss * mass[2][1];
  const S m11 = mass[1][1];
  const S r0 = rhs[0] + ss * rhs[2];
  const S r1 = rhs[1];
  const S det = m00 * m11 - m01 * m01;
  return {(m11 * r0 - m01 * r1) / det, (m00 * r1 - m01 * r0) / det};
}

template <class S>
std::array<S, 6> derivative(const std::array<S, 6>& x, const S& tau_ri, const S& tau_le,
                            const ModelTheta& theta, const VehicleParams& p) {
  using std::sin;
  const double tcone = std::tan(p.delta0);
  const S r_le = p.r0 - tcone * x[4];
  const S r_ri = p.r0 + tcone * x[4];
  const S y_le = 0.5 * p.gauge + x[4];
  const S y_ri = 0.5 * p.gauge - x[4];
  const S f_lon = tau_le / r_le + tau_ri / r_ri;
  const S m_yaw = y_le * tau_le / r_le - y_ri * tau_ri / r_ri;
  const auto acc = accelerations(x, theta, p, f_lon, m_yaw, true);
  return {x[2], x[3], acc[0], acc[1], x[2] * sin(x[5]), x[3] - theta.track.kappa * x[2]};
}

std::array<double, 6> to_array(const StateVector& v) {
  return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

}  // namespace

double VehicleParams::gamma() const {
  const double t = std::tan(delta0);
  return t / (0.5 * gauge - r0 * t);
}

void VehicleParams::validate() const {
  if (!(m > 0 && m_cb >= 0 && j_ax_x > 0 && j_ax_z > 0 && j_w_x >= 0 && j_w_y > 0 && j_w_z >= 0))
    throw std::invalid_argument("vehicle masses and inertias must be positive");
  if (!(r0 > 0 && gauge > 0 && delta0 > 0)) throw std::invalid_argument("invalid wheel geometry");
  if (!(0.5 * gauge > r0 * std::tan(delta0)))
    throw std::invalid_argument("conic geometry requires b/2 > r0 tan(delta0)");
  if (!(k_s_x >= 0 && k_s_z >= 0 && k_d_x >= 0 && k_d_z >= 0))
    throw std::invalid_argument("spring and damper constants must be non-negative");
  if (!(tau_min < 0 && tau_max > 0)) throw std::invalid_argument("torque limits must bracket 0");
  if (!(car_body_length > 0)) throw std::invalid_argument("car body length must be positive");
}

ModelTheta theta_at(const TrackGeometry& track, double p, const VehicleParams& params) {
  return ModelTheta{track.local(p, params.car_body_length), params.m_cb};
}

DependentGeometry dependent_geometry(double y, double psi_rel, double phi_track,
                                     const VehicleParams& params) {
  if (!(std::abs(psi_rel) < 0.5 * std::numbers::pi))
    throw std::domain_error("relative yaw must satisfy |psi_TrAx| < pi/2");
  const double gam = params.gamma();
  const double t = std::tan(params.delta0);
  DependentGeometry g;
  g.phi_track_axle = -gam * y + phi_track;
  g.z_track_axle = 0.5 * params.delta0 * params.gauge * (1.0 / std::cos(psi_rel) - 1.0) -
                   gam * y * y - params.r0;
  g.r_le = params.r0 - t * y;
  g.r_ri = params.r0 + t * y;
  g.y_le = 0.5 * params.gauge + y;
  g.y_ri = 0.5 * params.gauge - y;
  return g;
}

std::pair<double, double> wheel_speeds(const GearState& state, double psi_rate_track,
                                       const DependentGeometry& geom) {
  const double yaw_rate = psi_rate_track + state.psidot_ax;
  return {(state.xdot - geom.y_ri * yaw_rate) / geom.r_ri,
          (state.xdot + geom.y_le * yaw_rate) / geom.r_le};
}

Eigen::Vector2d generalized_forces(const ControlInput& u, const DependentGeometry& geom) {
  return {u.tau_le / geom.r_le + u.tau_ri / geom.r_ri,
          geom.y_le * u.tau_le / geom.r_le - geom.y_ri * u.tau_ri / geom.r_ri};
}

StateVector continuous_dynamics(const GearState& state, const ControlInput& u,
                                const ModelTheta& theta, const VehicleParams& params) {
  if (!(state.xdot > kVelocityFloor))
    throw std::domain_error("control model is valid only for xdot > 0.1 m/s");
  if (!(std::abs(state.psi_rel) < 0.5 * std::numbers::pi))
    throw std::domain_error("relative yaw must satisfy |psi_TrAx| < pi/2");
  return detail::model_derivative(state.vec(), u, theta, params);
}

GearState discrete_step(const GearState& state, const ControlInput& u, const ModelTheta& theta,
                        const VehicleParams& params, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("discretisation step must be positive");
  const StateVector x = state.vec();
  return GearState::from(x + step * continuous_dynamics(state, u, theta, params));
}

Linearization linearize(const GearState& x_lin, const ControlInput& u_lin,
                        const ModelTheta& theta, const VehicleParams& params, double step) {
  using C = std::complex<double>;
  constexpr double kH = 1e-30;

  const StateVector x0 = x_lin.vec();
  Linearization lin;
  lin.next = x0 + step * detail::model_derivative(x0, u_lin, theta, params);

  std::array<C, 6> xc;
  for (int j = 0; j < 8; ++j) {
    for (int i = 0; i < 6; ++i) xc[i] = C(x0[i], 0.0);
    C tau_ri(u_lin.tau_ri, 0.0);
    C tau_le(u_lin.tau_le, 0.0);
    if (j < 6) {
      xc[j] += C(0.0, kH);
    } else if (j == 6) {
      tau_ri += C(0.0, kH);
    } else {
      tau_le += C(0.0, kH);
    }
    const auto f = derivative(xc, tau_ri, tau_le, theta, params);
    for (int i = 0; i < 6; ++i) {
      const double df = f[i].imag() / kH;
      const double dx = (i == j) ? 1.0 : 0.0;
      if (j < 6) {
        lin.a(i, j) = dx + step * df;
      } else {
        lin.b(i, j - 6) = step * df;
      }
    }
  }
  return lin;
}

namespace detail {

StateVector model_derivative(const StateVector& x, const ControlInput& u,
                             const ModelTheta& theta, const VehicleParams& params) {
  const auto f = derivative(to_array(x), u.tau_ri, u.tau_le, theta, params);
  StateVector out;
  out << f[0], f[1], f[2], f[3], f[4], f[5];
  return out;
}

Eigen::Vector2d reduced_accelerations(const StateVector& x, const ModelTheta& theta,
                                      const VehicleParams& params, double force_lon,
                                      double moment_yaw, bool spin_coupled) {
  const auto acc = accelerations(to_array(x), theta, params, force_lon, moment_yaw, spin_coupled);
  return {acc[0], acc[1]};
}

}  // namespace detail

}  // namespace irw
