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

// Replays closed-loop solver inputs through both lateral solvers.

#include <iosfwd>
#include <vector>

#include "irw/scenario.hpp"

namespace irw {

struct SolverTiming {
  std::vector<double> times;  // [s], one per replayed solve
  double mean = 0.0, median = 0.0, p95 = 0.0;
  double mean_iterations = 0.0;
};

struct BenchReport {
  int solves = 0;
  SolverTiming nmpc;       // warm started along the replay
  SolverTiming nmpc_cold;
  SolverTiming ltv;
  double ratio = 0.0;  // LTV median / warm NMPC median
  std::vector<std::vector<double>> nmpc_delta_u, ltv_delta_u;
};

/// Records the estimates and base torques seen by the scenario's closed loop
/// over n_solves lateral updates, then re-solves each with warm NMPC, cold
/// NMPC and LTV. The three solvers alternate their order per sample so that
/// cache effects do not favour one of them. Throws std::invalid_argument for
/// n_solves < 1 or a scenario without lateral control.
BenchReport bench_solvers(const ScenarioSpec& spec, int n_solves);

void write_bench(std::ostream& out, const BenchReport& report);

}  // namespace irw
