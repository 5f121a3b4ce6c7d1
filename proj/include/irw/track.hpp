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

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace irw {

inline constexpr double kGravity = 9.81;      // [m/s^2]
inline constexpr double kDefaultGauge = 1.5;  // [m]

enum class TrackShape { kStraight, kStraightClothoidCurve };

/// Parametric description of an evaluation track.
struct TrackSpec {
  TrackShape shape = TrackShape::kStraight;
  double design_velocity = 0.0;      // [m/s]
  double design_lateral_accel = 0.0; // unbalanced lateral acceleration [m/s^2]
  double curve_radius = 0.0;         // [m], ignored for straight tracks
  double lead_in = 25.0;             // straight section before the clothoid [m]
  double clothoid_length = 0.0;      // [m]; <= 0 selects the ramp-rate default
  double total_length = 1500.0;      // [m]
  double gauge = kDefaultGauge;      // [m]
  double max_ramp_rate = 0.035;      // superelevation ramp rate for the default clothoid [m/s]
  double step = 0.5;                 // upper bound on the tabulation step [m]
};

/// One knot of the tabulated geometry.
struct TrackKnot {
  double p = 0.0;
  double psi = 0.0, dpsi_dp = 0.0;
  double phi = 0.0, dphi_dp = 0.0;
  double eps = 0.0, deps_dp = 0.0;
};

/// Track channels and their time rates at one position.
struct TrackSample {
  double psi = 0.0, psi_rate = 0.0;  // [rad], [rad/s]
  double phi = 0.0, phi_rate = 0.0;
  double eps = 0.0, eps_rate = 0.0;
};

/// Channels at one position together with their spatial slopes, as consumed
/// by the prediction model and the plant.
struct TrackLocal {
  double psi = 0.0;       // yaw angle [rad]
  double kappa = 0.0;     // d psi / dp [1/m]
  double dkappa = 0.0;    // d kappa / dp [1/m^2]
  double phi = 0.0;       // superelevation angle [rad]
  double dphi = 0.0;      // d phi / dp [rad/m]
  double ddphi = 0.0;     // d^2 phi / dp^2 [rad/m^2]
  double psi_rear = 0.0;  // yaw angle at the rear running gear [rad]
  double kappa_rear = 0.0;
};

/// Immutable tabulated track geometry.
class TrackGeometry {
 public:
  TrackGeometry(std::vector<TrackKnot> knots, double gauge);

  [[nodiscard]] const std::vector<TrackKnot>& knots() const { return knots_; }
  [[nodiscard]] double total_length() const { return knots_.back().p; }
  [[nodiscard]] double gauge() const { return gauge_; }

  /// Linear interpolation of all channels at p; rates are spatial slopes times xdot.
  /// Throws std::out_of_range outside [0, total_length].
  [[nodiscard]] TrackSample sample(double p, double xdot) const;

  /// Interpolated knot (channels and spatial derivatives) at p.
  [[nodiscard]] TrackKnot at(double p) const;

  /// Local data for the model at the front gear position p; the rear gear sits
  /// at p - car_body_length, clamped to the start of the track.
  /// Positions past either end are clamped to the end values.
  [[nodiscard]] TrackLocal local(double p, double car_body_length) const;

  void write_csv(std::ostream& os) const;

 private:
  [[nodiscard]] std::size_t segment(double p) const;

  std::vector<TrackKnot> knots_;
  double gauge_;
};

/// Superelevation height from design speed, curve radius and unbalanced
/// lateral acceleration: b * sin(phi) with phi = asin((v^2/R - a)/g). R <= 0 or infinite
/// radius means a straight track. Throws std::domain_error when the asin
/// argument leaves [-1, 1].
double superelevation_from_design(double v, double radius, double lateral_accel,
                                  double gauge = kDefaultGauge);

/// Steady superelevation angle asin((v^2/R - a)/g).
double superelevation_angle(double v, double radius, double lateral_accel);

/// Clothoid length used when TrackSpec::clothoid_length is not set.
double default_clothoid_length(const TrackSpec& spec);

TrackGeometry build_track(const TrackSpec& spec);

/// Evaluation tracks T1..T5 (index 1..5) sized to total_length.
TrackSpec evaluation_track(int index, double total_length = 1500.0);

/// Mean track yaw angle and rate between front (p) and rear (p - L_CB) gear.
std::pair<double, double> car_body_yaw(const TrackGeometry& track, double p, double xdot,
                                       double car_body_length);

struct FrameRotations {
  Eigen::Matrix3d world_track;  // R_0Tr
  Eigen::Matrix3d track_axle;   // R_TrAx
};

/// Rotation from the track frame to the world frame (yaw, pitch, roll order)
/// and from the axle frame to the track frame (yaw, roll order).
FrameRotations frame_rotations(const TrackSample& sample, double psi_track_axle,
                               double phi_track_axle);

}  // namespace irw
