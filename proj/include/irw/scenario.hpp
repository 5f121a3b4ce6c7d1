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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "irw/adhesion.hpp"
#include "irw/integration.hpp"
#include "irw/mpc.hpp"
#include "irw/plant.hpp"
#include "irw/track.hpp"

namespace irw {

/// Lateral set point y* as a function of track position.
struct SetpointSpec {
  enum class Kind { kConstant, kSine, kSweep };
  Kind kind = Kind::kConstant;
  double value = 0.0;       // constant [m]
  double amplitude = 0.0;   // sine and sweep [m]
  double period = 150.0;    // sine [m]
  double period_start = 200.0, period_end = 50.0;  // sweep, linear in position [m]
  double start = -1.0, end = -1.0;  // sweep range; negative selects the run range
};

/// Longitudinal demand handed to the adhesion controller.
struct DemandSpec {
  enum class Kind { kNone, kForce, kAdhesion };
  Kind kind = Kind::kNone;
  double value = 0.0;  // total force [N] or adhesion set point [-]
  double onset = 0.0;  // [s]
};

struct NoiseSpec {
  double y = 0.0;         // std of the lateral offset measurement [m]
  double psi = 0.0;       // std of the yaw measurements [rad]
  double adhesion = 0.0;  // std of the adhesion estimate
  double slip = 0.0;      // std of the slip estimate
};

enum class LateralController { kNone, kNmpc, kLtv };

struct ScenarioSpec {
  std::string name = "scenario";
  std::uint64_t seed = 1;

  int track_id = 5;  // 1..5, or 0 for the custom `track`
  TrackSpec track;

  double v0 = 50.0;        // [m/s]
  double start = 0.0;      // [m]
  double distance = 1000;  // [m]; the run ends after this distance
  double duration = 0.0;   // [s]; 0 means no time limit
  bool hold_speed = false; // roller-rig mode
  double min_lateral_speed = 2.0;  // lateral control is skipped below this [m/s]

  SetpointSpec setpoint;
  DemandSpec demand;
  std::vector<AdhesionSchedule::Segment> adhesion{{0.0, AdhesionCurveParams::good()}};
  NoiseSpec noise;

  LateralController lateral = LateralController::kNmpc;
  MpcConfig mpc;
  AdhesionConfig adhesion_ctrl;
  RateConfig rates;
  bool enforce_deadline = false;
  VehicleParams vehicle;

  /// Copies the vehicle torque limits and the slow period into the
  /// controller configs so that there is a single source for each.
  void sync();
  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
};

std::function<double(double)> make_setpoint(const SetpointSpec& spec, double run_start,
                                            double run_end);

/// Evaluation track (or the custom one) long enough for the run plus the
/// preview horizon.
TrackGeometry scenario_track(const ScenarioSpec& spec);

/// Centred gear at the start position, aligned with the track.
GearState initial_state(const ScenarioSpec& spec, const TrackGeometry& track);

const char* to_string(LateralController c);

}  // namespace irw
