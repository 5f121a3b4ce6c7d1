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

// Model correctness figures against the Lagrange reference, shared by the
// acceptance binary and `irwsim model-check`. Every figure is a worst-case
// relative error; smaller is better.

#include <algorithm>
#include <cmath>
#include <random>

#include "irw/model.hpp"
#include "oracle/lagrange.hpp"

namespace oracle {

struct ModelPoint {
  irw::GearState x;
  irw::ControlInput u;
  irw::ModelTheta theta;
};

inline ModelPoint random_model_point(std::mt19937_64& rng) {
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  ModelPoint r;
  irw::TrackLocal& t = r.theta.track;
  t.psi = uni(-0.5, 0.5);
  t.kappa = uni(-1.0 / 150.0, 1.0 / 150.0);
  t.dkappa = uni(-1e-5, 1e-5);
  t.phi = uni(-0.12, 0.12);
  t.dphi = uni(-1e-3, 1e-3);
  t.ddphi = uni(-1e-5, 1e-5);
  t.psi_rear = t.psi - 17.0 * t.kappa + uni(-1e-3, 1e-3);
  t.kappa_rear = uni(-1.0 / 150.0, 1.0 / 150.0);
  r.theta.car_body_mass = uni(20000.0, 40000.0);
  r.x.x = uni(0.0, 1500.0);
  r.x.xdot = uni(2.0, 115.0);
  r.x.psidot_ax = uni(-0.05, 0.05);
  r.x.y = uni(-0.007, 0.007);
  r.x.psi_rel = uni(-0.05, 0.05);
  r.x.psi_ax = r.x.psi_rel + t.psi;
  r.u.tau_ri = uni(-10000.0, 10000.0);
  r.u.tau_le = uni(-10000.0, 10000.0);
  return r;
}

// Excess of |a - b| over an absolute floor, relative to the larger magnitude.
inline double rel_excess(double a, double b, double abs_floor) {
  const double d = std::max(0.0, std::abs(a - b) - abs_floor);
  const double m = std::max(std::abs(a), std::abs(b));
  return d == 0.0 ? 0.0 : d / m;
}

/// Accelerations of the hand-expanded model against the reference.
inline double lagrange_error(const irw::VehicleParams& p, int points, unsigned long seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int k = 0; k < points; ++k) {
    const ModelPoint r = random_model_point(rng);
    const irw::StateVector f = irw::continuous_dynamics(r.x, r.u, r.theta, p);
    const irw::DependentGeometry g = irw::dependent_geometry(r.x.y, r.x.psi_rel, r.theta.track.phi, p);
    const Eigen::Vector2d gen = irw::generalized_forces(r.u, g);
    const Energies e{p, r.theta.car_body_mass, LocalTrack{r.x.x, r.theta.track}};
    const Eigen::Vector2d ref = accelerations(e, r.x, Eigen::Vector3d(gen[0], gen[1], 0.0));
    worst = std::max({worst, rel_excess(f[2], ref[0], 1e-12), rel_excess(f[3], ref[1], 1e-12)});
  }
  return worst;
}

/// Largest relative drift of the reference energy over `seconds` of RK4 on
/// straight track with dissipation and input off.
inline double energy_drift(irw::VehicleParams p, double seconds) {
  p.k_d_x = 0.0;
  p.k_d_z = 0.0;
  const irw::ModelTheta theta{irw::TrackLocal{}, p.m_cb};
  irw::GearState x;
  x.xdot = 30.0;
  x.psidot_ax = 0.02;
  x.y = 0.003;
  x.psi_rel = 0.004;
  x.psi_ax = x.psi_rel;
  const irw::ControlInput u;
  auto energy = [&](const irw::StateVector& s) {
    return total_energy(Energies{p, theta.car_body_mass, LocalTrack{s[0], theta.track}}, irw::GearState::from(s));
  };
  auto f = [&](const irw::StateVector& s) { return irw::detail::model_derivative(s, u, theta, p); };
  irw::StateVector s = x.vec();
  const double e0 = energy(s);
  const double h = 1e-3;
  double worst = 0.0;
  const int n = static_cast<int>(std::lround(seconds / h));
  for (int k = 0; k < n; ++k) {
    const irw::StateVector k1 = f(s);
    const irw::StateVector k2 = f(s + 0.5 * h * k1);
    const irw::StateVector k3 = f(s + 0.5 * h * k2);
    const irw::StateVector k4 = f(s + h * k3);
    s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    worst = std::max(worst, std::abs(energy(s) - e0) / std::abs(e0));
  }
  return worst;
}

/// Discrete Jacobians against central differences of discrete_step. Entries
/// below 1e-9 of the block's largest entry only count above that floor.
inline double linearization_error(const irw::VehicleParams& p, int points, unsigned long seed) {
  std::mt19937_64 rng(seed);
  const double step = 0.01;
  const double hx[6] = {1e-3, 1e-5, 1e-3, 1e-5, 1e-5, 1e-5};
  double worst = 0.0;
  for (int k = 0; k < points; ++k) {
    const ModelPoint r = random_model_point(rng);
    const irw::Linearization lin = irw::linearize(r.x, r.u, r.theta, p, step);
    const irw::StateVector x0 = r.x.vec();
    Eigen::Matrix<double, 6, 8> fd;
    for (int j = 0; j < 6; ++j) {
      irw::StateVector xp = x0, xm = x0;
      xp[j] += hx[j];
      xm[j] -= hx[j];
      fd.col(j) = (irw::discrete_step(irw::GearState::from(xp), r.u, r.theta, p, step).vec() -
                   irw::discrete_step(irw::GearState::from(xm), r.u, r.theta, p, step).vec()) /
                  (2.0 * hx[j]);
    }
    for (int j = 0; j < 2; ++j) {
      irw::ControlInput up = r.u, um = r.u;
      (j == 0 ? up.tau_ri : up.tau_le) += 1.0;
      (j == 0 ? um.tau_ri : um.tau_le) -= 1.0;
      fd.col(6 + j) = (irw::discrete_step(r.x, up, r.theta, p, step).vec() -
                       irw::discrete_step(r.x, um, r.theta, p, step).vec()) /
                      2.0;
    }
    const double scale_a = lin.a.cwiseAbs().maxCoeff();
    const double scale_b = lin.b.cwiseAbs().maxCoeff();
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 8; ++j) {
        const double an = j < 6 ? lin.a(i, j) : lin.b(i, j - 6);
        worst = std::max(worst, rel_excess(an, fd(i, j), 1e-9 * (j < 6 ? scale_a : scale_b)));
      }
  }
  return worst;
}

}  // namespace oracle
