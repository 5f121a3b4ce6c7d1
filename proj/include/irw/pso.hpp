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

// Global-best particle swarm with inertia weight, and the controller tuning
// built on it.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "irw/config.hpp"
#include "irw/scenario.hpp"

namespace irw {

struct PsoOptions {
  int particles = 12;
  int iterations = 20;
  double inertia_start = 0.9;  // decreases linearly to inertia_end
  double inertia_end = 0.4;
  double cognitive = 1.5;
  double social = 1.5;
  double max_velocity = 0.2;  // fraction of the box width per iteration
  std::uint64_t seed = 1;
  int threads = 0;  // 0 uses the hardware concurrency
  /// Particle 0 starts here; the box centre if unset.
  std::optional<std::vector<double>> initial;
};

struct PsoResult {
  std::vector<double> best;
  double fitness = 0.0;
  int evaluations = 0;
  bool all_infeasible = false;  // no finite fitness seen; best is the initial point
  std::vector<double> history;  // best fitness after each iteration, initial swarm first
};

/// A non-finite value or an exception from the fitness marks the point
/// infeasible. The swarm evolves identically for a given seed regardless of
/// the thread count. Throws std::invalid_argument for an empty or inverted
/// box or fewer than one particle.
PsoResult pso_minimize(const std::function<double(const std::vector<double>&)>& fitness,
                       const std::vector<double>& lower, const std::vector<double>& upper,
                       const PsoOptions& options = {});

constexpr double kTuningInputWeight = 1e-6;  // [m / (N m)]

/// Sum over scenarios of RMSE + lambda mean|du|, with the MPC settings of
/// each scenario replaced by `mpc`. Infinite if any run aborts.
double tuning_fitness(const std::vector<ScenarioSpec>& scenarios, const MpcConfig& mpc,
                      double lambda = kTuningInputWeight);

struct TuneResult {
  MpcConfig best;
  std::vector<double> values;  // in design-space order
  double fitness = 0.0;
  double default_fitness = 0.0;  // of the first scenario's MPC settings
  PsoResult swarm;
};

/// Starts particle 0 from the first scenario's settings clamped into the box.
TuneResult tune_pso(const std::vector<DesignParameter>& space, const std::vector<ScenarioSpec>& scenarios,
                    const PsoOptions& options = {}, double lambda = kTuningInputWeight);

}  // namespace irw
