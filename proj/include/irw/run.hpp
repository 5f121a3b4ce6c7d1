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

// Closed-loop execution of a scenario: plant, adhesion controller, lateral
// controller and the torque integration, all on the fast tick.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "irw/scenario.hpp"

namespace irw {

/// Bits of the CSV flags column above the MPC flags.
enum RunFlag : std::uint32_t {
  kRunDeadlineMiss = 1u << 8,     // lateral result discarded on this tick
  kRunUnstableContact = 1u << 9,  // latched once |s| > 1
  kRunLateralIdle = 1u << 10,     // below min_lateral_speed, du forced to 0
  kRunTorqueClamped = 1u << 11,   // |du| exceeded the torque range
  kRunSolveTick = 1u << 12,       // a lateral solve ran on this tick
};

/// One fast tick: the state at t and the input applied over [t, t + dt).
struct RunRow {
  double t = 0.0, p = 0.0;
  GearState x;
  double omega_le = 0.0, omega_ri = 0.0;
  double s_le = 0.0, s_ri = 0.0;
  double f_le = 0.0, f_ri = 0.0;
  double u_d = 0.0, delta_u = 0.0;
  double tau_le = 0.0, tau_ri = 0.0;
  int segment = 0;
  int solver_iters = 0;
  double solver_time = 0.0;
  std::uint32_t flags = 0;
  double y_star = 0.0;  // not part of the CSV
};

struct SolveStats {
  std::int64_t count = 0;
  double mean = 0.0, median = 0.0, p95 = 0.0, max = 0.0;  // [s]
  double mean_iterations = 0.0;
};

struct RunResult {
  std::vector<RunRow> rows;
  double rmse = 0.0;  // y_TrAx - y* over all fast ticks [m]
  double braking_distance = -1.0;  // demand onset to standstill [m]; -1 if not reached
  double mean_abs_delta_u = 0.0;   // applied [N m]
  SolveStats solves;
  std::int64_t deadline_misses = 0;
  std::int64_t undelivered = 0;  // ticks where a feasible du was not applied exactly
  std::uint32_t flags = 0;       // OR over all rows
  bool unstable_contact = false;
  bool unstable = false;        // aborted: |y| > 0.05 m, |psi_rel| > 0.5 rad or non-finite
  bool solver_failure = false;  // aborted on a hard solver failure
  std::string abort_reason;
};

struct RunOptions {
  bool keep_rows = true;
  /// Called before each lateral solve with the estimate and u^d.
  std::function<void(const GearState&, double)> on_solve;
  std::function<bool(std::int64_t)> inject_deadline_miss;
};

/// Runs until the distance, the duration or standstill. Deterministic for a
/// given spec unless deadline enforcement is on. Throws std::invalid_argument
/// for an invalid spec.
RunResult run_scenario(const ScenarioSpec& spec, const RunOptions& options = {});

/// Fixed column order; with timing == false the solver_time column is left
/// out so that two runs compare byte for byte.
void write_csv(std::ostream& out, const RunResult& result, bool timing = true);
void write_summary(std::ostream& out, const ScenarioSpec& spec, const RunResult& result);

}  // namespace irw
