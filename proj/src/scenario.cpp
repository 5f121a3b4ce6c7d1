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

#include "irw/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace irw {

void ScenarioSpec::sync() {
  mpc.tau_min = adhesion_ctrl.tau_min = vehicle.tau_min;
  mpc.tau_max = adhesion_ctrl.tau_max = vehicle.tau_max;
  mpc.period = rates.slow_period;
  adhesion_ctrl.period = rates.fast_period;
}

void ScenarioSpec::validate() const {
  if (track_id < 0 || track_id > 5) throw std::invalid_argument("track id must be 0..5");
  if (!(v0 > 0.0)) throw std::invalid_argument("v0 must be positive");
  if (!(start >= 0.0 && distance > 0.0 && duration >= 0.0))
    throw std::invalid_argument("run start, distance and duration must be nonnegative");
  if (!(min_lateral_speed >= 0.1)) throw std::invalid_argument("min_lateral_speed must be at least 0.1 m/s");
  const double amp = setpoint.kind == SetpointSpec::Kind::kConstant ? std::abs(setpoint.value)
                                                                    : std::abs(setpoint.amplitude);
  if (amp > mpc.y_limit) throw std::invalid_argument("set point exceeds the lateral limit");
  if (setpoint.kind == SetpointSpec::Kind::kSine && !(setpoint.period > 0.0))
    throw std::invalid_argument("sine period must be positive");
  if (setpoint.kind == SetpointSpec::Kind::kSweep && !(setpoint.period_start > 0.0 && setpoint.period_end > 0.0))
    throw std::invalid_argument("sweep periods must be positive");
  if (!(demand.onset >= 0.0)) throw std::invalid_argument("demand onset must be nonnegative");
  if (!(noise.y >= 0.0 && noise.psi >= 0.0 && noise.adhesion >= 0.0 && noise.slip >= 0.0))
    throw std::invalid_argument("noise levels must be nonnegative");
  (void)AdhesionSchedule(adhesion);
  vehicle.validate();
  mpc.validate();
  adhesion_ctrl.validate();
  rates.validate();
  if (std::abs(mpc.period - rates.slow_period) > 1e-12 ||
      std::abs(adhesion_ctrl.period - rates.fast_period) > 1e-12)
    throw std::invalid_argument("controller periods disagree with the rates");
  if (mpc.tau_min != vehicle.tau_min || mpc.tau_max != vehicle.tau_max ||
      adhesion_ctrl.tau_min != vehicle.tau_min || adhesion_ctrl.tau_max != vehicle.tau_max)
    throw std::invalid_argument("controller torque limits disagree with the vehicle");
}

std::function<double(double)> make_setpoint(const SetpointSpec& s, double run_start, double run_end) {
  switch (s.kind) {
    case SetpointSpec::Kind::kConstant: {
      const double v = s.value;
      return [v](double) { return v; };
    }
    case SetpointSpec::Kind::kSine: {
      const double a = s.amplitude, w = 2.0 * M_PI / s.period;
      return [a, w](double p) { return a * std::sin(w * p); };
    }
    case SetpointSpec::Kind::kSweep: {
      const double p0 = s.start >= 0.0 ? s.start : run_start;
      const double p1 = s.end > p0 ? s.end : std::max(run_end, p0 + 1.0);
      const double a = s.amplitude, P0 = s.period_start, P1 = s.period_end;
      const double slope = (P1 - P0) / (p1 - p0);
      // Phase is 2 pi times the integral of 1/P(p); the period is held at its
      // end values outside the sweep range.
      auto phase = [=](double p) {
        const double q = std::clamp(p, p0, p1);
        double cycles = std::abs(slope) < 1e-12 ? (q - p0) / P0 : std::log((P0 + slope * (q - p0)) / P0) / slope;
        if (p > p1) cycles += (p - p1) / P1;
        if (p < p0) cycles -= (p0 - p) / P0;
        return 2.0 * M_PI * cycles;
      };
      return [a, phase](double p) { return a * std::sin(phase(p)); };
    }
  }
  throw std::invalid_argument("unknown set point kind");
}

TrackGeometry scenario_track(const ScenarioSpec& spec) {
  TrackSpec ts = spec.track_id == 0 ? spec.track : evaluation_track(spec.track_id);
  const double needed = spec.start + spec.distance + spec.v0 * spec.mpc.horizon() * 2.0 + 100.0;
  ts.total_length = std::max(ts.total_length, needed);
  return build_track(ts);
}

GearState initial_state(const ScenarioSpec& spec, const TrackGeometry& track) {
  const TrackLocal tr = track.local(spec.start, spec.vehicle.car_body_length);
  GearState g;
  g.x = spec.start;
  g.xdot = spec.v0;
  g.psi_ax = tr.psi;
  g.psidot_ax = tr.kappa * spec.v0;
  return g;
}

const char* to_string(LateralController c) {
  switch (c) {
    case LateralController::kNone: return "none";
    case LateralController::kNmpc: return "nmpc";
    case LateralController::kLtv: return "ltv";
  }
  return "?";
}

}  // namespace irw
