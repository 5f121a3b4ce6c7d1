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

#include "irw/integration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace irw {

void TorqueLimits::validate() const {
  if (!(tau_min < 0.0 && tau_max > 0.0)) throw std::invalid_argument("torque limits must bracket 0");
}

IntegratedTorque integrate(double base, double delta, const TorqueLimits& lim) {
  IntegratedTorque r;
  // Beyond this bound one wheel would leave the limits whatever the common mode.
  const double bound = std::min(lim.tau_max, -lim.tau_min);
  r.delta = std::clamp(delta, -bound, bound);
  r.clamped = r.delta != delta;
  const double mag = std::abs(r.delta);
  r.common = base > 0.0 ? std::min(base, lim.tau_max - mag) : std::max(base, lim.tau_min + mag);
  // (tau_min + |du|) - |du| may round one ulp past the limit.
  r.torque = ControlInput{std::clamp(r.common + r.delta, lim.tau_min, lim.tau_max),
                          std::clamp(r.common - r.delta, lim.tau_min, lim.tau_max)};
  return r;
}

void RateConfig::validate() const {
  if (!(fast_period > 0.0 && slow_period > 0.0))
    throw std::invalid_argument("control periods must be positive");
  const double q = slow_period / fast_period;
  if (!(q >= 1.0 - 1e-9) || std::abs(q - std::round(q)) > 1e-9 * q)
    throw std::invalid_argument("slow period must be an integer multiple of the fast period");
}

int RateConfig::ratio() const { return static_cast<int>(std::lround(slow_period / fast_period)); }

Scheduler::Scheduler(RateConfig rates, TorqueLimits limits) : rates_(rates), limits_(limits) {
  rates_.validate();
  limits_.validate();
  ratio_ = rates_.ratio();
}

SchedulerTick Scheduler::step(const std::function<double()>& base,
                              const std::function<LateralUpdate(double)>& lateral) {
  SchedulerTick tick;
  tick.base = base();
  if (ticks_ % ratio_ == 0) {
    const LateralUpdate upd = lateral(tick.base);
    ++solves_;
    tick.slow_tick = true;
    const std::int64_t slow_index = ticks_ / ratio_;
    tick.deadline_miss = (inject_ && inject_(slow_index)) ||
                         (enforce_deadline_ && upd.solve_time > rates_.slow_period);
    if (tick.deadline_miss) {
      ++misses_;
    } else {
      held_ = upd;
    }
  }
  ++ticks_;
  tick.lateral = held_;
  tick.out = integrate(tick.base, held_.delta_u, limits_);
  return tick;
}

}  // namespace irw
