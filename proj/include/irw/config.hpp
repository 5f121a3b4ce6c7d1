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

// YAML scenario files. Every key mirrors a ScenarioSpec field; unknown keys
// are rejected so that typos do not silently fall back to defaults. See the
// README for the schema.

#include <stdexcept>
#include <string>
#include <vector>

#include "irw/scenario.hpp"

namespace irw {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses and validates a scenario. Throws ConfigError.
ScenarioSpec parse_scenario(const std::string& yaml_text);
ScenarioSpec load_scenario(const std::string& path);

/// One tunable MPC parameter with its search interval.
struct DesignParameter {
  std::string name;  // weight.<channel>, input_weight, terminal_weight, horizon, step
  double lower = 0.0, upper = 0.0;
  bool log = false;  // search log10 of the value; needs lower > 0
};

/// Mapping from parameter name to [lower, upper] or [lower, upper, log].
/// Throws ConfigError.
std::vector<DesignParameter> parse_design_space(const std::string& yaml_text);
std::vector<DesignParameter> load_design_space(const std::string& path);

/// Writes the value of a design parameter into an MPC configuration.
/// Throws ConfigError for unknown names.
void apply_parameter(MpcConfig& cfg, const std::string& name, double value);
double read_parameter(const MpcConfig& cfg, const std::string& name);

}  // namespace irw
