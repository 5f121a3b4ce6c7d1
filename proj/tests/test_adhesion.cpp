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
#include <limits>
#include <random>
#include <vector>

#include "irw/adhesion.hpp"
#include "irw/plant.hpp"

using namespace irw;

namespace {

// Primes the filter at (f, s) so the next step sees zero rates.
AdhesionCtrlState primed(double f, double s, double torque) {
  AdhesionCtrlState st;
  st.primed = true;
  st.f_filt = f;
  st.s_filt = s;
  st.torque = torque;
  return st;
}

}  // namespace

TEST_CASE("set point conversion") {
  CHECK(force_to_adhesion_setpoint(0.0, 1e5) == 0.0);
  CHECK(force_to_adhesion_setpoint(1e4, 1e5) == doctest::Approx(0.1));
  CHECK(force_to_adhesion_setpoint(-1e4, 1e5) < 0.0);
  CHECK_THROWS_AS(force_to_adhesion_setpoint(1.0, 0.0), std::domain_error);
}

TEST_CASE("switching function classifies the branch") {
  CHECK(switching_function(0.5, 0.2) == doctest::Approx(0.1));
  CHECK(switching_function(-0.5, 0.2) == doctest::Approx(-0.1));
  CHECK(switching_function(0.0, 3.0) == 0.0);
}

TEST_CASE("decision table") {
  const AdhesionConfig cfg;

  SUBCASE("inside the corridor the torque is held") {
    for (double off : {-0.5 * cfg.tol_f, 0.5 * cfg.tol_f}) {
      AdhesionCtrlState st = primed(0.05 + off, 0.004, 1000.0);
      CHECK(adhesion_step(0.05, 0.05 + off, 0.004, st, cfg) == 1000.0);
      CHECK(st.segment == AdhesionSegment::kHold);
    }
  }
  SUBCASE("below the set point on the stable branch the torque rises by p2") {
    AdhesionCtrlState st = primed(0.01, 0.001, 1000.0);
    CHECK(adhesion_step(0.05, 0.01, 0.001, st, cfg) == 1000.0 + cfg.p2);
    CHECK(st.segment == AdhesionSegment::kIncrease);
  }
  SUBCASE("falling adhesion at rising slip triggers the retreat") {
    AdhesionCtrlState st = primed(0.09, 0.03, 4000.0);
    CHECK(adhesion_step(0.15, 0.08, 0.04, st, cfg) == 4000.0 - cfg.p1);
    CHECK(st.sigma < 0.0);
    CHECK(st.segment == AdhesionSegment::kRetreat);
  }
  SUBCASE("above the corridor the torque backs off") {
    AdhesionCtrlState st = primed(0.08, 0.004, 3000.0);
    CHECK(adhesion_step(0.05, 0.08, 0.004, st, cfg) == 3000.0 - cfg.p_back);
    CHECK(st.segment == AdhesionSegment::kBackOff);
  }
  SUBCASE("zero set point with positive adhesion backs off toward zero") {
    AdhesionCtrlState st = primed(0.02, 0.001, 500.0);
    CHECK(adhesion_step(0.0, 0.02, 0.001, st, cfg) == 500.0 - cfg.p_back);
  }
  SUBCASE("braking mirrors traction") {
    AdhesionCtrlState st = primed(-0.01, -0.001, -1000.0);
    CHECK(adhesion_step(-0.05, -0.01, -0.001, st, cfg) == -1000.0 - cfg.p2);
  }
}

TEST_CASE("torque saturates at the limits") {
  AdhesionConfig cfg;
  AdhesionCtrlState st = primed(0.0, 0.0, cfg.tau_max - 1.0);
  CHECK(adhesion_step(0.3, 0.0, 0.0, st, cfg) == cfg.tau_max);
  CHECK(adhesion_step(0.3, 0.0, 0.0, st, cfg) == cfg.tau_max);
}

TEST_CASE("NaN input holds the previous torque") {
  const AdhesionConfig cfg;
  AdhesionCtrlState st = primed(0.01, 0.001, 1234.0);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK(adhesion_step(0.05, nan, 0.001, st, cfg) == 1234.0);
  CHECK(st.fault);
  CHECK(adhesion_step(0.05, 0.01, 0.001, st, cfg) == 1234.0 + cfg.p2);
  CHECK_FALSE(st.fault);
}

TEST_CASE("increments are rate limited and braking is the odd mirror") {
  const AdhesionConfig cfg;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> f(-0.2, 0.2), s(-0.05, 0.05), fs(0.0, 0.2);
  AdhesionCtrlState trac, brake;
  double prev = 0.0;
  for (int k = 0; k < 100000; ++k) {
    const double target = fs(rng), fh = f(rng), sh = s(rng);
    const double a = adhesion_step(target, fh, sh, trac, cfg);
    const double b = adhesion_step(-target, -fh, -sh, brake, cfg);
    CHECK(std::abs(a - prev) <= std::max({cfg.p1, cfg.p2, cfg.p_back}));
    CHECK(a >= cfg.tau_min);
    CHECK(a <= cfg.tau_max);
    REQUIRE(std::abs(a + b) <= 1e-9);
    prev = a;
  }
}

TEST_CASE("configuration validation") {
  AdhesionConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.p1 = 5.0;  // below p2
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = AdhesionConfig{};
  cfg.tol_f = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("closed loop on a roller rig reaches the corridor") {
  const VehicleParams p;
  const TrackGeometry track = build_track(evaluation_track(5, 3000.0));
  for (const AdhesionCurveParams& curve : {AdhesionCurveParams::good(), AdhesionCurveParams::poor()}) {
    const AdhesionSchedule adh(curve);
    AdhesionConfig cfg;
    GearState g;
    g.xdot = 50.0;
    PlantState s = initial_plant_state(g, track, adh, p);
    PlantOptions opt;
    opt.hold_speed = true;
    AdhesionCtrlState st;
    const double f_star = 0.6 * curve.f_max;
    double entered = -1.0;
    bool stayed = true;
    for (int k = 1; k <= 4000; ++k) {
      const Measurement m = measure(s);
      const bool left = std::abs(m.slip_le) >= std::abs(m.slip_ri);
      const double f_hat = left ? m.adhesion_le : m.adhesion_ri;
      const double s_hat = -(left ? m.slip_le : m.slip_ri);
      const double u = adhesion_step(f_star, f_hat, s_hat, st, cfg);
      s = plant_step(s, ControlInput{u, u}, track, adh, p, cfg.period, opt);
      const double err = std::abs(measure(s).adhesion_le - f_star);
      if (entered < 0.0 && err <= cfg.tol_f) entered = k * cfg.period;
      if (entered >= 0.0 && err > cfg.tol_f) stayed = false;
    }
    INFO("f_max " << curve.f_max << " entered at " << entered);
    CHECK(entered >= 0.0);
    CHECK(entered <= 2.0);
    CHECK(stayed);
  }
}
