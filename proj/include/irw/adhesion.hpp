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

// Incremental sliding-mode adhesion controller with maximum seeking.
//
// The controller knows nothing about the contact law; it sees only the
// adhesion estimate and the slip, both force-aligned (positive when the
// wheel pushes the vehicle forward).

namespace irw {

struct AdhesionConfig {
  double p1 = 20.0;         // retreat increment on the unstable branch [N m/step]
  double p2 = 10.0;         // regular tracking increment [N m/step]
  double p_back = 10.0;     // increment when above the corridor [N m/step]
  double tol_f = 0.005;     // corridor half-width
  double filter_tc = 0.002; // low-pass time constant on adhesion and slip [s]
  double period = 1e-3;     // [s]
  double deadband = 1e-9;   // |sigma| below this counts as zero
  double tau_min = -10000.0;
  double tau_max = 10000.0;

  /// Throws std::invalid_argument unless p1 > p2 > 0, p_back > 0, tol_f > 0
  /// and the filter and period are positive.
  void validate() const;
};

enum class AdhesionSegment : int {
  kNone = 0,
  kIncrease = 1,  // stable branch below the set point
  kHold = 2,      // inside the corridor
  kRetreat = 3,   // unstable branch
  kBackOff = 4,   // above the corridor on the stable branch
};

struct AdhesionCtrlState {
  double torque = 0.0;  // u^d of the previous step [N m]
  double f_filt = 0.0, s_filt = 0.0;
  double f_rate = 0.0, s_rate = 0.0;  // [1/s]
  double sigma = 0.0;
  bool primed = false;
  bool fault = false;  // last input contained NaN
  AdhesionSegment segment = AdhesionSegment::kNone;
};

/// f* = F_x* / F_N. Throws std::domain_error for F_N <= 0.
double force_to_adhesion_setpoint(double force, double normal_force);

inline double switching_function(double f_rate, double s_rate) { return f_rate * s_rate; }

/// One controller step. Braking set points are handled by odd mirroring of
/// the traction decision table. Returns the new base torque u^d, always
/// within [tau_min, tau_max] and within max(p1, p2, p_back) of the previous.
double adhesion_step(double f_star, double f_hat, double s_hat, AdhesionCtrlState& state,
                     const AdhesionConfig& cfg);

}  // namespace irw
