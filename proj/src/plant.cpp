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

#include "irw/plant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace irw {

namespace {

constexpr double kSpeedFloor = 0.1;  // [m/s]
constexpr int kMaxSubsteps = 20000;

using PlantVector = Eigen::Matrix<double, 8, 1>;  // gear states, omega_le, omega_ri

struct ContactForces {
  WheelContact le, ri;
  double force_le = 0.0, force_ri = 0.0;  // longitudinal, forward positive [N]
  double r_le = 0.0, r_ri = 0.0;
  double y_le = 0.0, y_ri = 0.0;
  double contact_speed_le = 0.0, contact_speed_ri = 0.0;
};

ContactForces contacts(const PlantVector& z, const TrackLocal& tr, double car_body_mass,
                       const AdhesionCurveParams& adh, const VehicleParams& p) {
  const double v = z[2];
  const double w = z[3];
  const double y = z[4];
  const double t = std::tan(p.delta0);

  ContactForces c;
  c.r_le = p.r0 - t * y;
  c.r_ri = p.r0 + t * y;
  c.y_le = 0.5 * p.gauge + y;
  c.y_ri = 0.5 * p.gauge - y;

  const double yaw_rate = tr.kappa * v + w;
  c.contact_speed_le = v + c.y_le * yaw_rate;
  c.contact_speed_ri = v - c.y_ri * yaw_rate;

  // Quasi-static loads: weight and centrifugal force resolved in the track
  // plane, lateral part transferred to the outer wheel.
  const double m_tot = p.m + 0.5 * car_body_mass;
  const double v2k = v * v * tr.kappa;
  const double cphi = std::cos(tr.phi);
  const double sphi = std::sin(tr.phi);
  const double normal = m_tot * (p.g * cphi + v2k * sphi);
  const double lateral_accel = v2k * cphi - p.g * sphi;
  const double transfer = m_tot * lateral_accel * p.cg_height / p.gauge;
  const double min_load = 1e-3 * normal;
  c.le.normal_force = std::max(0.5 * normal + transfer, min_load);
  c.ri.normal_force = std::max(0.5 * normal - transfer, min_load);

  const double lateral_demand = m_tot * lateral_accel / (c.le.normal_force + c.ri.normal_force);
  const double slip_y = lateral_demand / adh.k0;

  auto wheel = [&](WheelContact& wc, double contact_speed, double omega, double r) {
    const double vc = std::max(std::abs(contact_speed), kSpeedFloor);
    wc.slip_x = (contact_speed - omega * r) / vc;
    wc.slip_y = slip_y;
    const double total = std::hypot(wc.slip_x, wc.slip_y);
    if (total > 0.0) {
      const double f = adhesion_curve(total, adh);
      wc.adhesion_x = -f * wc.slip_x / total;
      wc.adhesion_y = f * wc.slip_y / total;
    } else {
      wc.adhesion_x = 0.0;
      wc.adhesion_y = 0.0;
    }
  };
  wheel(c.le, c.contact_speed_le, z[6], c.r_le);
  wheel(c.ri, c.contact_speed_ri, z[7], c.r_ri);
  c.force_le = c.le.normal_force * c.le.adhesion_x;
  c.force_ri = c.ri.normal_force * c.ri.adhesion_x;
  return c;
}

PlantVector derivative(const PlantVector& z, const ControlInput& u, const TrackGeometry& track,
                       const AdhesionSchedule& schedule, const VehicleParams& p,
                       const PlantOptions& options) {
  const ModelTheta theta = theta_at(track, z[0], p);
  const ContactForces c = contacts(z, theta.track, theta.car_body_mass, schedule.at(z[0]), p);

  const StateVector gear = z.head<6>();
  const double force_lon = c.force_le + c.force_ri;
  const double moment = c.y_le * c.force_le - c.y_ri * c.force_ri;
  const Eigen::Vector2d acc =
      detail::reduced_accelerations(gear, theta, p, force_lon, moment, false);

  PlantVector dz;
  dz[0] = z[2];
  dz[1] = z[3];
  dz[2] = options.hold_speed ? 0.0 : acc[0];
  dz[3] = acc[1];
  dz[4] = z[2] * std::sin(z[5]);
  dz[5] = z[3] - theta.track.kappa * z[2];
  dz[6] = (u.tau_le - c.r_le * c.force_le) / p.j_w_y;
  dz[7] = (u.tau_ri - c.r_ri * c.force_ri) / p.j_w_y;
  return dz;
}

PlantVector pack(const PlantState& s) {
  PlantVector z;
  z.head<6>() = s.gear.vec();
  z[6] = s.omega_le;
  z[7] = s.omega_ri;
  return z;
}

void refresh_outputs(PlantState& s, const TrackGeometry& track, const AdhesionSchedule& schedule,
                     const VehicleParams& p) {
  const ModelTheta theta = theta_at(track, s.gear.x, p);
  const ContactForces c =
      contacts(pack(s), theta.track, theta.car_body_mass, schedule.at(s.gear.x), p);
  s.le = c.le;
  s.ri = c.ri;
  if (std::abs(c.le.slip_x) > 1.0 || std::abs(c.ri.slip_x) > 1.0) s.unstable_contact = true;
}

}  // namespace

AdhesionCurveParams AdhesionCurveParams::preset(const std::string& name) {
  if (name == "good") return good();
  if (name == "poor") return poor();
  throw std::invalid_argument("unknown adhesion preset '" + name + "'");
}

void AdhesionCurveParams::validate() const {
  if (!(f_max > 0.0 && s_peak > 0.0 && k0 > 0.0 && shape >= 1.0 && decay >= 0.0))
    throw std::invalid_argument("adhesion curve parameters must be positive");
  if (!(k0 * s_peak > f_max))
    throw std::invalid_argument("adhesion curve needs k0 * s_peak > f_max");
  if (!(decay > std::pow(f_max / (k0 * s_peak), shape)))
    throw std::invalid_argument("adhesion curve decay too small for a peak at s_peak");
}

double adhesion_curve(double s, const AdhesionCurveParams& c) {
  const double a = std::abs(s);
  if (a == 0.0) return 0.0;
  const double n = c.shape;
  const double lin_peak = c.k0 * c.s_peak;
  const double scale = lin_peak / std::pow(std::pow(lin_peak / c.f_max, n) - 1.0, 1.0 / n);
  const double lin = c.k0 * a;
  double f = lin / std::pow(1.0 + std::pow(lin / scale, n), 1.0 / n);
  if (a > c.s_peak) f /= 1.0 + c.decay * (a - c.s_peak) / c.s_peak;
  return std::copysign(f, s);
}

double slip(double xdot, double omega, double r) {
  if (!(xdot >= kSpeedFloor)) throw std::domain_error("slip undefined below 0.1 m/s (standstill)");
  return (xdot - omega * r) / xdot;
}

AdhesionSchedule::AdhesionSchedule(AdhesionCurveParams uniform)
    : AdhesionSchedule(std::vector<Segment>{{0.0, uniform}}) {}

AdhesionSchedule::AdhesionSchedule(std::vector<Segment> segments) : segments_(std::move(segments)) {
  if (segments_.empty() || segments_.front().start != 0.0)
    throw std::invalid_argument("adhesion schedule must start at p = 0");
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    segments_[i].params.validate();
    if (i > 0 && !(segments_[i].start > segments_[i - 1].start))
      throw std::invalid_argument("adhesion schedule segments must be strictly increasing");
  }
}

const AdhesionCurveParams& AdhesionSchedule::at(double p) const {
  auto it = std::upper_bound(segments_.begin(), segments_.end(), p,
                             [](double v, const Segment& s) { return v < s.start; });
  return (it == segments_.begin()) ? segments_.front().params : std::prev(it)->params;
}

PlantState initial_plant_state(const GearState& gear, const TrackGeometry& track,
                               const AdhesionSchedule& schedule, const VehicleParams& params) {
  PlantState s;
  s.gear = gear;
  const DependentGeometry g = dependent_geometry(gear.y, gear.psi_rel, 0.0, params);
  const double track_rate = theta_at(track, gear.x, params).track.kappa * gear.xdot;
  const auto [w_ri, w_le] = wheel_speeds(gear, track_rate, g);
  s.omega_ri = w_ri;
  s.omega_le = w_le;
  s.standstill = gear.xdot < kSpeedFloor;
  refresh_outputs(s, track, schedule, params);
  return s;
}

PlantState plant_step(const PlantState& state, const ControlInput& u, const TrackGeometry& track,
                      const AdhesionSchedule& schedule, const VehicleParams& params, double dt,
                      const PlantOptions& options) {
  if (!(dt > 0.0)) throw std::invalid_argument("plant step must be positive");
  PlantState out = state;
  if (state.standstill || state.gear.xdot < kSpeedFloor) {
    out.standstill = true;
    return out;
  }

  PlantVector z = pack(state);
  auto f = [&](const PlantVector& s) { return derivative(s, u, track, schedule, params, options); };

  // Wheel-spin eigenvalue of the linearized contact: r^2 F_N k0 / (J v).
  const ModelTheta theta = theta_at(track, z[0], params);
  const AdhesionCurveParams& adh = schedule.at(z[0]);
  const ContactForces c = contacts(z, theta.track, theta.car_body_mass, adh, params);
  const double lam = std::max(
      c.r_le * c.r_le * c.le.normal_force / std::max(std::abs(c.contact_speed_le), kSpeedFloor),
      c.r_ri * c.r_ri * c.ri.normal_force / std::max(std::abs(c.contact_speed_ri), kSpeedFloor)) *
                     adh.k0 / params.j_w_y;
  const int n = std::clamp(static_cast<int>(std::ceil(dt * lam / options.stiffness_step)), 1,
                           kMaxSubsteps);
  const double h = dt / n;

  for (int i = 0; i < n; ++i) {
    const PlantVector k1 = f(z);
    const PlantVector k2 = f(z + 0.5 * h * k1);
    const PlantVector k3 = f(z + 0.5 * h * k2);
    const PlantVector k4 = f(z + h * k3);
    z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (z[2] < kSpeedFloor) break;
  }

  out.gear = GearState::from(z.head<6>());
  out.omega_le = z[6];
  out.omega_ri = z[7];
  out.standstill = out.gear.xdot < kSpeedFloor;
  refresh_outputs(out, track, schedule, params);
  return out;
}

Measurement measure(const PlantState& s) {
  Measurement m;
  m.x = s.gear;
  m.adhesion_le = s.le.adhesion_x;
  m.adhesion_ri = s.ri.adhesion_x;
  m.slip_le = s.le.slip_x;
  m.slip_ri = s.ri.slip_x;
  m.normal_le = s.le.normal_force;
  m.normal_ri = s.ri.normal_force;
  return m;
}

}  // namespace irw
