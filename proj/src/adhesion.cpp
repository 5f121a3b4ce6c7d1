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

#include "irw/adhesion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace irw {

namespace {

double sgn(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

}  // namespace

void AdhesionConfig::validate() const {
  if (!(p2 > 0.0 && p1 > p2 && p_back > 0.0))
    throw std::invalid_argument("adhesion gains need p1 > p2 > 0 and p_back > 0");
  if (!(tol_f > 0.0)) throw std::invalid_argument("adhesion corridor must be positive");
  if (!(filter_tc > 0.0 && period > 0.0))
    throw std::invalid_argument("adhesion filter and period must be positive");
  if (!(tau_min < 0.0 && tau_max > 0.0))
    throw std::invalid_argument("torque limits must bracket 0");
}

double force_to_adhesion_setpoint(double force, double normal_force) {
  if (!(normal_force > 0.0)) throw std::domain_error("normal force must be positive");
  return force / normal_force;
}

double adhesion_step(double f_star, double f_hat, double s_hat, AdhesionCtrlState& st,
                     const AdhesionConfig& cfg) {
  if (std::isnan(f_star) || std::isnan(f_hat) || std::isnan(s_hat)) {
    st.fault = true;
    st.segment = AdhesionSegment::kNone;
    return st.torque;
  }
  st.fault = false;

  // Filtered estimates and their backward differences.
  const double a = cfg.period / (cfg.filter_tc + cfg.period);
  if (!st.primed) {
    st.f_filt = f_hat;
    st.s_filt = s_hat;
    st.primed = true;
  }
  const double f_new = st.f_filt + a * (f_hat - st.f_filt);
  const double s_new = st.s_filt + a * (s_hat - st.s_filt);
  st.f_rate = (f_new - st.f_filt) / cfg.period;
  st.s_rate = (s_new - st.s_filt) / cfg.period;
  st.f_filt = f_new;
  st.s_filt = s_new;
  st.sigma = switching_function(st.f_rate, st.s_rate);

  // Decide in the traction frame; braking is the odd mirror image. sigma is
  // invariant under the mirror.
  const double m = (f_star < 0.0) ? -1.0 : 1.0;
  const double target = m * f_star;
  const double f = m * f_hat;
  const double u_prev = m * st.torque;

  double du = 0.0;
  if (std::abs(target - f) <= cfg.tol_f) {
    st.segment = AdhesionSegment::kHold;
  } else if (st.sigma < -cfg.deadband) {
    st.segment = AdhesionSegment::kRetreat;
    du = -cfg.p1 * sgn(u_prev);
  } else if (f < target - cfg.tol_f) {
    st.segment = AdhesionSegment::kIncrease;
    du = cfg.p2;
  } else {
    st.segment = AdhesionSegment::kBackOff;
    du = -cfg.p_back;
  }

  st.torque = std::clamp(m * (u_prev + du), cfg.tau_min, cfg.tau_max);
  return st.torque;
}

}  // namespace irw
