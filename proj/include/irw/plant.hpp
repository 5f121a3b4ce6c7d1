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

#include <string>
#include <vector>

#include "irw/model.hpp"
#include "irw/track.hpp"

namespace irw {

/// Lumped adhesion-slip characteristic of one contact.
///
/// f(s) = sgn(s) S(|s|) D(|s|) with a saturating rise
///   S(s) = k0 s / (1 + (k0 s / F)^n)^(1/n)
/// scaled so that S(s_peak) = f_max, and a post-peak decay
///   D(s) = 1 / (1 + decay (s - s_peak) / s_peak) for s > s_peak.
/// The rise deviates from k0 s by less than (k0 s / F)^n / n, which keeps the
/// micro-slip range linear.
struct AdhesionCurveParams {
  double f_max = 0.35;
  double s_peak = 0.01;
  double k0 = 70.0;
  double shape = 4.0;   // n
  double decay = 0.15;  // must exceed (f_max / (k0 s_peak))^n for a peak at s_peak

  static AdhesionCurveParams good() { return {0.35, 0.01, 70.0}; }
  static AdhesionCurveParams poor() { return {0.10, 0.02, 10.0}; }
  /// "good" or "poor"; throws std::invalid_argument otherwise.
  static AdhesionCurveParams preset(const std::string& name);

  /// Throws std::invalid_argument unless the curve peaks at s_peak with value f_max.
  void validate() const;
};

double adhesion_curve(double s, const AdhesionCurveParams& params);

/// Longitudinal slip (xdot - omega r) / xdot; negative in traction.
/// Throws std::domain_error below the 0.1 m/s floor.
double slip(double xdot, double omega, double r);

/// Piecewise-constant contact conditions along the track. Each segment holds
/// from its start position to the next segment's start.
class AdhesionSchedule {
 public:
  struct Segment {
    double start = 0.0;  // [m]
    AdhesionCurveParams params;
  };

  explicit AdhesionSchedule(AdhesionCurveParams uniform = AdhesionCurveParams::good());
  /// Segments must start at 0 and be strictly increasing.
  explicit AdhesionSchedule(std::vector<Segment> segments);

  [[nodiscard]] const AdhesionCurveParams& at(double p) const;
  [[nodiscard]] const std::vector<Segment>& segments() const { return segments_; }

 private:
  std::vector<Segment> segments_;
};

struct WheelContact {
  double normal_force = 0.0;  // [N]
  double slip_x = 0.0;
  double adhesion_x = 0.0;    // F_x / F_N, positive when pushing forward
  double slip_y = 0.0;
  double adhesion_y = 0.0;
};

struct PlantState {
  GearState gear;
  double omega_le = 0.0;  // [rad/s]
  double omega_ri = 0.0;
  WheelContact le, ri;
  bool standstill = false;
  bool unstable_contact = false;  // latched once |s| > 1 on either wheel
};

struct PlantOptions {
  /// Roller-rig mode: the longitudinal speed is held by the test stand and
  /// only wheel spin and lateral motion evolve.
  bool hold_speed = false;
  /// RK4 substep bound relative to the fastest wheel-spin time constant.
  double stiffness_step = 0.5;
};

/// Plant state with wheel spins matched to ideal rolling.
PlantState initial_plant_state(const GearState& gear, const TrackGeometry& track,
                               const AdhesionSchedule& schedule, const VehicleParams& params);

/// Advances the plant by dt with RK4 substeps. Once the speed falls below
/// 0.1 m/s the state is frozen and flagged as standstill.
PlantState plant_step(const PlantState& state, const ControlInput& u, const TrackGeometry& track,
                      const AdhesionSchedule& schedule, const VehicleParams& params, double dt,
                      const PlantOptions& options = {});

struct Measurement {
  GearState x;
  double adhesion_le = 0.0, adhesion_ri = 0.0;
  double slip_le = 0.0, slip_ri = 0.0;
  double normal_le = 0.0, normal_ri = 0.0;
};

Measurement measure(const PlantState& state);

}  // namespace irw
