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

#include "irw/model.hpp"

namespace irw {

struct TorqueLimits {
  double tau_min = -10000.0;  // [N m]
  double tau_max = 10000.0;
  /// Throws std::invalid_argument unless tau_min < 0 < tau_max.
  void validate() const;
};

struct IntegratedTorque {
  ControlInput torque;  // [tau_long + du, tau_long - du]
  double common = 0.0;  // tau_long
  double delta = 0.0;   // du actually applied
  bool clamped = false; // |du| exceeded min(tau_max, -tau_min)
};

/// Combines the base torque and the differential torque. The differential
/// part has priority: saturation only shaves the common mode. u^d = 0 uses
/// the braking branch.
IntegratedTorque integrate(double base, double delta, const TorqueLimits& limits);

struct RateConfig {
  double fast_period = 1e-3;  // adhesion control [s]
  double slow_period = 1e-2;  // lateral control [s]
  /// Throws std::invalid_argument unless the slow period is a positive
  /// integer multiple of the fast one.
  void validate() const;
  [[nodiscard]] int ratio() const;
};

/// Result of one lateral solve.
struct LateralUpdate {
  double delta_u = 0.0;
  double solve_time = 0.0;  // [s]
  int iterations = 0;
  std::uint32_t flags = 0;
};

struct SchedulerTick {
  IntegratedTorque out;
  double base = 0.0;
  bool slow_tick = false;      // a lateral solve ran on this tick
  bool deadline_miss = false;  // its result was discarded, the old one held
  LateralUpdate lateral;       // last accepted solve
};

/// Runs the fast longitudinal loop every tick and the lateral loop every
/// ratio() ticks, holding its differential torque in between.
class Scheduler {
 public:
  Scheduler(RateConfig rates, TorqueLimits limits);

  /// A solve whose wall time exceeds the slow period counts as a deadline
  /// miss. Off by default so that runs do not depend on host speed.
  void enforce_deadline(bool on) { enforce_deadline_ = on; }
  /// Test hook: returns true for slow ticks that must miss.
  void inject_deadline_miss(std::function<bool(std::int64_t)> hook) { inject_ = std::move(hook); }

  /// One fast tick. `base` produces u^d; `lateral` receives u^d and is only
  /// called on slow ticks.
  SchedulerTick step(const std::function<double()>& base,
                     const std::function<LateralUpdate(double)>& lateral);

  [[nodiscard]] std::int64_t ticks() const { return ticks_; }
  [[nodiscard]] std::int64_t solves() const { return solves_; }
  [[nodiscard]] std::int64_t deadline_misses() const { return misses_; }
  [[nodiscard]] double held_delta() const { return held_.delta_u; }

 private:
  RateConfig rates_;
  TorqueLimits limits_;
  int ratio_;
  bool enforce_deadline_ = false;
  std::function<bool(std::int64_t)> inject_;
  LateralUpdate held_;
  std::int64_t ticks_ = 0, solves_ = 0, misses_ = 0;
};

}  // namespace irw
