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
#include <sstream>

#include <Eigen/LU>

#include "irw/track.hpp"

using namespace irw;

namespace {

// Closed-form yaw of the straight/clothoid/curve layout.
double analytic_yaw(double p, double l0, double lc, double radius) {
  if (p <= l0) return 0.0;
  if (p <= l0 + lc) return (p - l0) * (p - l0) / (2.0 * radius * lc);
  return lc / (2.0 * radius) + (p - l0 - lc) / radius;
}

}  // namespace

TEST_CASE("superelevation of the four curved evaluation tracks") {
  const double expected[] = {0.108, 0.168, 0.151, 0.123};
  for (int i = 1; i <= 4; ++i) {
    const TrackSpec s = evaluation_track(i);
    const double h = superelevation_from_design(s.design_velocity, s.curve_radius,
                                                s.design_lateral_accel, s.gauge);
    CHECK(std::abs(h - expected[i - 1]) <= 0.001);
  }
}

TEST_CASE("superelevation edge cases") {
  CHECK(superelevation_from_design(30.0, std::numeric_limits<double>::infinity(), 0.0) == 0.0);
  CHECK(superelevation_from_design(30.0, 0.0, 0.0) == 0.0);
  // v^2/R = a gives a level curve.
  CHECK(std::abs(superelevation_from_design(20.0, 400.0, 1.0)) < 1e-15);
  CHECK_THROWS_AS(superelevation_from_design(100.0, 10.0, 0.0), std::domain_error);
}

TEST_CASE("straight track has all channels zero") {
  const TrackGeometry t = build_track(evaluation_track(5, 800.0));
  CHECK(t.total_length() == doctest::Approx(800.0));
  for (double p = 0.0; p <= 800.0; p += 13.7) {
    const TrackSample s = t.sample(p, 50.0);
    CHECK(s.psi == 0.0);
    CHECK(s.phi == 0.0);
    CHECK(s.eps == 0.0);
    CHECK(s.psi_rate == 0.0);
  }
}

TEST_CASE("sample outside the track throws") {
  const TrackGeometry t = build_track(evaluation_track(5, 100.0));
  CHECK_THROWS_AS((void)t.sample(-0.1, 1.0), std::out_of_range);
  CHECK_THROWS_AS((void)t.sample(100.1, 1.0), std::out_of_range);
  CHECK_NOTHROW((void)t.sample(100.0, 1.0));
  CHECK_NOTHROW((void)t.sample(0.0, 1.0));
}

TEST_CASE("tabulated yaw matches the closed-form layout") {
  for (int i = 1; i <= 4; ++i) {
    const TrackSpec spec = evaluation_track(i, 1500.0);
    const TrackGeometry t = build_track(spec);
    const double lc = default_clothoid_length(spec);
    std::mt19937_64 rng(17 + i);
    std::uniform_real_distribution<double> pos(0.0, 1500.0);
    double worst = 0.0;
    for (int k = 0; k < 5000; ++k) {
      const double p = pos(rng);
      worst = std::max(worst, std::abs(t.at(p).psi -
                                       analytic_yaw(p, spec.lead_in, lc, spec.curve_radius)));
    }
    INFO("track T" << i);
    CHECK(worst <= 1e-7);
  }
}

TEST_CASE("curvature channel is the derivative of yaw") {
  const TrackSpec spec = evaluation_track(2, 1500.0);
  const TrackGeometry t = build_track(spec);
  const double lc = default_clothoid_length(spec);
  const double h = 1e-3;
  for (double p : {spec.lead_in + 0.3 * lc, spec.lead_in + 0.77 * lc, spec.lead_in + lc + 100.0}) {
    const double numeric = (analytic_yaw(p + h, spec.lead_in, lc, spec.curve_radius) -
                            analytic_yaw(p - h, spec.lead_in, lc, spec.curve_radius)) /
                           (2.0 * h);
    CHECK(std::abs(t.at(p).dpsi_dp - numeric) <= 1e-6);
  }
}

TEST_CASE("superelevation ramps linearly over the clothoid and is constant in the curve") {
  const TrackSpec spec = evaluation_track(3, 1500.0);
  const TrackGeometry t = build_track(spec);
  const double lc = default_clothoid_length(spec);
  const double phi_end =
      superelevation_angle(spec.design_velocity, spec.curve_radius, spec.design_lateral_accel);
  CHECK(t.at(spec.lead_in + 0.5 * lc).phi == doctest::Approx(0.5 * phi_end).epsilon(1e-9));
  CHECK(t.at(spec.lead_in + lc + 50.0).phi == doctest::Approx(phi_end).epsilon(1e-12));
  CHECK(t.at(spec.lead_in + 0.5 * lc).dphi_dp == doctest::Approx(phi_end / lc).epsilon(1e-12));
  CHECK(t.at(spec.lead_in + lc + 50.0).dphi_dp == 0.0);
  CHECK(t.at(spec.lead_in * 0.5).phi == 0.0);
}

TEST_CASE("default clothoid length respects the ramp rate") {
  const TrackSpec spec = evaluation_track(4);
  const double lc = default_clothoid_length(spec);
  const double h = superelevation_from_design(spec.design_velocity, spec.curve_radius,
                                              spec.design_lateral_accel);
  CHECK(h / (lc / spec.design_velocity) <= spec.max_ramp_rate + 1e-12);
  CHECK(default_clothoid_length(evaluation_track(5)) == 0.0);
}

TEST_CASE("local data at the rear gear clamps to the track start") {
  const TrackSpec spec = evaluation_track(1, 600.0);
  const TrackGeometry t = build_track(spec);
  const TrackLocal near_start = t.local(5.0, 17.0);
  CHECK(near_start.psi_rear == 0.0);
  const double p = 400.0;
  const TrackLocal l = t.local(p, 17.0);
  CHECK(l.psi_rear == doctest::Approx(t.at(p - 17.0).psi));
  CHECK(l.kappa == doctest::Approx(1.0 / spec.curve_radius));
  const auto [yaw, rate] = car_body_yaw(t, p, 10.0, 17.0);
  CHECK(yaw == doctest::Approx(0.5 * (l.psi + l.psi_rear)));
  CHECK(rate == doctest::Approx(10.0 / spec.curve_radius));
}

TEST_CASE("frame rotations are proper rotations") {
  TrackSample s;
  s.psi = 0.3;
  s.phi = 0.1;
  s.eps = 0.02;
  const FrameRotations r = frame_rotations(s, 0.01, -0.004);
  for (const Eigen::Matrix3d& m : {r.world_track, r.track_axle}) {
    CHECK((m * m.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-14);
    CHECK(m.determinant() == doctest::Approx(1.0));
  }
  // Pure yaw maps the track x axis onto (cos psi, sin psi, 0).
  TrackSample yaw_only;
  yaw_only.psi = 0.3;
  const Eigen::Vector3d ex = frame_rotations(yaw_only, 0, 0).world_track * Eigen::Vector3d::UnitX();
  CHECK(ex.x() == doctest::Approx(std::cos(0.3)));
  CHECK(ex.y() == doctest::Approx(std::sin(0.3)));
}

TEST_CASE("csv export lists every knot") {
  const TrackGeometry t = build_track(evaluation_track(5, 10.0));
  std::ostringstream os;
  t.write_csv(os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "p,psi,dpsi_dp,phi,dphi_dp,eps,deps_dp");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == static_cast<int>(t.knots().size()));
}

TEST_CASE("invalid track specs are rejected") {
  TrackSpec spec = evaluation_track(1, 30.0);
  CHECK_THROWS_AS(build_track(spec), std::invalid_argument);
  CHECK_THROWS_AS(evaluation_track(0), std::invalid_argument);
  CHECK_THROWS_AS(TrackGeometry({TrackKnot{0.0}}, 1.5), std::invalid_argument);
}
