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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "irw/model.hpp"
#include "oracle/lagrange.hpp"

using namespace irw;

namespace {

struct RandomPoint {
  GearState x;
  ControlInput u;
  ModelTheta theta;
};

RandomPoint random_point(std::mt19937_64& rng) {
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  RandomPoint r;
  TrackLocal& t = r.theta.track;
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

oracle::Energies energies(const VehicleParams& p, const ModelTheta& theta, double x0) {
  return oracle::Energies{p, theta.car_body_mass, oracle::LocalTrack{x0, theta.track}};
}

bool close_rel(double a, double b, double rel, double abs_floor) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

}  // namespace

TEST_CASE("accelerations match the Lagrange oracle at random points") {
  const VehicleParams p;
  std::mt19937_64 rng(20240611);
  for (int k = 0; k < 100; ++k) {
    const RandomPoint r = random_point(rng);
    const StateVector f = continuous_dynamics(r.x, r.u, r.theta, p);
    const DependentGeometry g = dependent_geometry(r.x.y, r.x.psi_rel, r.theta.track.phi, p);
    const Eigen::Vector2d gen = generalized_forces(r.u, g);
    const Eigen::Vector2d ref =
        oracle::accelerations(energies(p, r.theta, r.x.x), r.x, Eigen::Vector3d(gen[0], gen[1], 0));
    INFO("point " << k << " xddot " << f[2] << " vs " << ref[0] << ", psiddot " << f[3] << " vs "
                  << ref[1]);
    CHECK(close_rel(f[2], ref[0], 1e-6, 1e-12));
    CHECK(close_rel(f[3], ref[1], 1e-6, 1e-12));
    CHECK(f[0] == r.x.xdot);
    CHECK(f[1] == r.x.psidot_ax);
    CHECK(f[4] == doctest::Approx(r.x.xdot * std::sin(r.x.psi_rel)));
    CHECK(f[5] == doctest::Approx(r.x.psidot_ax - r.theta.track.kappa * r.x.xdot));
  }
}

TEST_CASE("spin-free accelerations match the oracle without wheel spin inertia") {
  VehicleParams p;
  std::mt19937_64 rng(99);
  for (int k = 0; k < 20; ++k) {
    const RandomPoint r = random_point(rng);
    const Eigen::Vector2d a = detail::reduced_accelerations(r.x.vec(), r.theta, p, 1234.0, -321.0, false);
    VehicleParams q = p;
    q.j_w_y = 0.0;
    const Eigen::Vector2d ref =
        oracle::accelerations(energies(q, r.theta, r.x.x), r.x, Eigen::Vector3d(1234.0, -321.0, 0));
    CHECK(close_rel(a[0], ref[0], 1e-6, 1e-12));
    CHECK(close_rel(a[1], ref[1], 1e-6, 1e-12));
  }
}

TEST_CASE("energy is conserved without dissipation and input") {
  VehicleParams p;
  p.k_d_x = 0.0;
  p.k_d_z = 0.0;
  const ModelTheta theta{TrackLocal{}, p.m_cb};
  GearState x;
  x.xdot = 30.0;
  x.psidot_ax = 0.02;
  x.y = 0.003;
  x.psi_rel = 0.004;
  x.psi_ax = x.psi_rel;
  const ControlInput u;

  auto energy = [&](const StateVector& s) {
    return oracle::total_energy(energies(p, theta, s[0]), GearState::from(s));
  };
  auto f = [&](const StateVector& s) { return detail::model_derivative(s, u, theta, p); };

  StateVector s = x.vec();
  const double e0 = energy(s);
  const double h = 1e-3;
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const StateVector k1 = f(s);
    const StateVector k2 = f(s + 0.5 * h * k1);
    const StateVector k3 = f(s + 0.5 * h * k2);
    const StateVector k4 = f(s + h * k3);
    s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    worst = std::max(worst, std::abs(energy(s) - e0) / std::abs(e0));
  }
  CHECK(worst <= 1e-6);

  // The exchange between lateral, yaw and longitudinal energy is real: the
  // speed changes while the total stays put.
  CHECK(std::abs(s[2] - 30.0) > 0.0);
}

TEST_CASE("energy balance of the lateral modes alone") {
  // Same check with the carrier's translational energy removed from the
  // budget, which makes the tolerance meaningful for the small modes.
  VehicleParams p;
  p.k_d_x = 0.0;
  p.k_d_z = 0.0;
  const ModelTheta theta{TrackLocal{}, p.m_cb};
  GearState x;
  x.xdot = 10.0;
  x.psidot_ax = 0.03;
  x.y = 0.004;
  x.psi_rel = 0.006;
  x.psi_ax = x.psi_rel;
  const ControlInput u;
  auto energy = [&](const StateVector& s) {
    return oracle::total_energy(energies(p, theta, s[0]), GearState::from(s));
  };
  auto f = [&](const StateVector& s) { return detail::model_derivative(s, u, theta, p); };
  StateVector s = x.vec();
  const double e0 = energy(s);
  const double mx = p.mx(theta.car_body_mass);
  const double modal = e0 - 0.5 * mx * s[2] * s[2] -
                       0.5 * 2.0 * p.j_w_y * std::pow(s[2] / p.r0, 2);
  const double h = 2e-4;
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const StateVector k1 = f(s);
    const StateVector k2 = f(s + 0.5 * h * k1);
    const StateVector k3 = f(s + 0.5 * h * k2);
    const StateVector k4 = f(s + h * k3);
    s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    worst = std::max(worst, std::abs(energy(s) - e0));
  }
  CHECK(worst <= 1e-6 * std::abs(modal));
}

TEST_CASE("linearization agrees with central finite differences") {
  const VehicleParams p;
  std::mt19937_64 rng(7);
  const double step = 0.01;
  const double hx[6] = {1e-3, 1e-5, 1e-3, 1e-5, 1e-5, 1e-5};
  for (int k = 0; k < 25; ++k) {
    const RandomPoint r = random_point(rng);
    const Linearization lin = linearize(r.x, r.u, r.theta, p, step);
    const StateVector x0 = r.x.vec();
    CHECK((lin.next - discrete_step(r.x, r.u, r.theta, p, step).vec()).norm() == 0.0);

    Eigen::Matrix<double, 6, 8> fd;
    for (int j = 0; j < 6; ++j) {
      StateVector xp = x0, xm = x0;
      xp[j] += hx[j];
      xm[j] -= hx[j];
      fd.col(j) = (discrete_step(GearState::from(xp), r.u, r.theta, p, step).vec() -
                   discrete_step(GearState::from(xm), r.u, r.theta, p, step).vec()) /
                  (2.0 * hx[j]);
    }
    for (int j = 0; j < 2; ++j) {
      ControlInput up = r.u, um = r.u;
      (j == 0 ? up.tau_ri : up.tau_le) += 1.0;
      (j == 0 ? um.tau_ri : um.tau_le) -= 1.0;
      fd.col(6 + j) = (discrete_step(r.x, up, r.theta, p, step).vec() -
                       discrete_step(r.x, um, r.theta, p, step).vec()) /
                      2.0;
    }
    Eigen::Matrix<double, 6, 8> an;
    an << lin.a, lin.b;
    const double scale_a = lin.a.cwiseAbs().maxCoeff();
    const double scale_b = lin.b.cwiseAbs().maxCoeff();
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 8; ++j) {
        const double floor = 1e-9 * (j < 6 ? scale_a : scale_b);
        INFO("point " << k << " entry (" << i << "," << j << ") " << an(i, j) << " vs " << fd(i, j));
        CHECK(close_rel(an(i, j), fd(i, j), 1e-6, floor));
      }
    }
  }
}

TEST_CASE("Euler structure of the discrete Jacobian") {
  const VehicleParams p;
  GearState x;
  x.xdot = 40.0;
  const ModelTheta theta{TrackLocal{}, p.m_cb};
  const Linearization lin = linearize(x, ControlInput{}, theta, p, 0.01);
  CHECK(lin.a(0, 2) == doctest::Approx(0.01));
  CHECK(lin.a(1, 3) == doctest::Approx(0.01));
  CHECK(lin.a(0, 0) == 1.0);
  // ydot = xdot sin(psi_rel) gives d y_next / d psi_rel = T xdot at the centre.
  CHECK(lin.a(4, 5) == doctest::Approx(0.01 * 40.0));
}

TEST_CASE("dependent geometry and wheel speeds at the centre") {
  const VehicleParams p;
  const DependentGeometry g = dependent_geometry(0.0, 0.0, 0.0, p);
  CHECK(g.r_le == p.r0);
  CHECK(g.r_ri == p.r0);
  CHECK(g.y_le == 0.5 * p.gauge);
  CHECK(g.y_ri == 0.5 * p.gauge);
  CHECK(g.phi_track_axle == 0.0);
  CHECK(g.z_track_axle == -p.r0);

  GearState s;
  s.xdot = 50.0;
  const auto [w_ri, w_le] = wheel_speeds(s, 0.0, g);
  CHECK(w_ri == 50.0 / p.r0);
  CHECK(w_le == 50.0 / p.r0);

  // Moving right rolls the right wheel on a larger radius.
  const DependentGeometry r = dependent_geometry(0.004, 0.0, 0.0, p);
  CHECK(r.r_ri > r.r_le);
  CHECK(r.y_ri < r.y_le);
  CHECK(r.phi_track_axle == doctest::Approx(-p.gamma() * 0.004));

  // In a right-hand curve the left (outer) wheel turns faster.
  const auto [c_ri, c_le] = wheel_speeds(s, 50.0 / 1000.0, g);
  CHECK(c_le > c_ri);

  CHECK_THROWS_AS(dependent_geometry(0.0, 1.6, 0.0, p), std::domain_error);
}

TEST_CASE("common and differential torque decouple at the centre") {
  const VehicleParams p;
  GearState x;
  x.xdot = 60.0;
  const ModelTheta theta{TrackLocal{}, p.m_cb};

  const StateVector diff = continuous_dynamics(x, ControlInput{500.0, -500.0}, theta, p);
  CHECK(std::abs(diff[2]) < 1e-12);
  CHECK(std::abs(diff[3]) > 1e-3);

  const StateVector common = continuous_dynamics(x, ControlInput{500.0, 500.0}, theta, p);
  CHECK(std::abs(common[3]) < 1e-12);
  CHECK(common[2] > 0.0);
  // Common torque accelerates the whole vehicle including the spin inertia.
  const double expected = 2.0 * 500.0 / p.r0 / (p.mx() + 2.0 * p.j_w_y / (p.r0 * p.r0));
  CHECK(common[2] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("model validity checks") {
  const VehicleParams p;
  const ModelTheta theta{TrackLocal{}, p.m_cb};
  GearState slow;
  slow.xdot = 0.05;
  CHECK_THROWS_AS(continuous_dynamics(slow, {}, theta, p), std::domain_error);
  GearState ok;
  ok.xdot = 1.0;
  CHECK_THROWS_AS(discrete_step(ok, {}, theta, p, 0.0), std::invalid_argument);
  VehicleParams bad = p;
  bad.tau_max = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_NOTHROW(p.validate());
}
