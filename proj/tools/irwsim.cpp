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

// Command-line front end: simulate, tune, bench, model-check, tracks export.
// Exit codes: 0 ok, 1 configuration error, 2 solver hard failure,
// 3 instability detected.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "irw/bench.hpp"
#include "irw/config.hpp"
#include "irw/pso.hpp"
#include "irw/run.hpp"
#include "oracle/model_suite.hpp"

namespace {

enum Exit : int { kOk = 0, kConfig = 1, kSolver = 2, kUnstable = 3 };

int simulate(const std::string& config, const std::string& out_path, const std::string& summary_path,
             bool timing) {
  const irw::ScenarioSpec spec = irw::load_scenario(config);
  const irw::RunResult r = irw::run_scenario(spec);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw irw::ConfigError("cannot write '" + out_path + "'");
    irw::write_csv(out, r, timing);
  }
  if (summary_path.empty()) {
    irw::write_summary(std::cout, spec, r);
  } else {
    std::ofstream out(summary_path);
    if (!out) throw irw::ConfigError("cannot write '" + summary_path + "'");
    irw::write_summary(out, spec, r);
  }
  if (r.solver_failure) return kSolver;
  if (r.unstable) return kUnstable;
  return kOk;
}

int tune(const std::string& space_path, const std::vector<std::string>& scenario_paths, const irw::PsoOptions& opt,
         double lambda) {
  const auto space = irw::load_design_space(space_path);
  std::vector<irw::ScenarioSpec> scenarios;
  for (const auto& p : scenario_paths) scenarios.push_back(irw::load_scenario(p));
  const irw::TuneResult t = irw::tune_pso(space, scenarios, opt, lambda);
  std::cout << std::setprecision(10);
  std::cout << "default_fitness: " << t.default_fitness << '\n'
            << "fitness: " << t.fitness << '\n'
            << "evaluations: " << t.swarm.evaluations << '\n';
  if (t.swarm.all_infeasible) {
    std::cout << "all_infeasible: true  # returned the initial point\n";
    return kUnstable;
  }
  std::cout << "best:\n";
  for (std::size_t i = 0; i < space.size(); ++i) std::cout << "  " << space[i].name << ": " << t.values[i] << '\n';
  return kOk;
}

int bench(const std::string& config, int n) {
  if (n < 100) throw irw::ConfigError("bench needs --n >= 100");
  const irw::ScenarioSpec spec = irw::load_scenario(config);
  if (spec.lateral == irw::LateralController::kNone) throw irw::ConfigError("bench needs a lateral controller");
  irw::write_bench(std::cout, irw::bench_solvers(spec, n));
  return kOk;
}

int model_check(const std::string& config) {
  const irw::VehicleParams p = config.empty() ? irw::VehicleParams{} : irw::load_scenario(config).vehicle;
  p.validate();
  struct Row {
    const char* name;
    double value, limit;
  };
  const Row rows[] = {
      {"lagrange", oracle::lagrange_error(p, 100, 20240611), 1e-6},
      {"energy", oracle::energy_drift(p, 10.0), 1e-6},
      {"linearize", oracle::linearization_error(p, 100, 7), 1e-6},
  };
  bool ok = true;
  for (const Row& r : rows) {
    const bool pass = r.value <= r.limit;
    ok = ok && pass;
    std::printf("%-10s %s  worst relative error %.3e (limit %.0e)\n", r.name, pass ? "PASS" : "FAIL", r.value,
                r.limit);
  }
  return ok ? kOk : kConfig;
}

int tracks_export(int id, const std::string& config, const std::string& out_path, const std::string& dir) {
  auto write = [](const irw::TrackGeometry& t, const std::string& path) {
    if (path == "-") {
      t.write_csv(std::cout);
      return;
    }
    std::ofstream out(path);
    if (!out) throw irw::ConfigError("cannot write '" + path + "'");
    t.write_csv(out);
  };
  if (!config.empty()) {
    write(irw::scenario_track(irw::load_scenario(config)), out_path.empty() ? "-" : out_path);
    return kOk;
  }
  if (id != 0) {
    if (id < 1 || id > 5) throw irw::ConfigError("--id must be 1..5");
    write(irw::build_track(irw::evaluation_track(id)), out_path.empty() ? "-" : out_path);
    return kOk;
  }
  std::filesystem::create_directories(dir);
  std::printf("track  v[km/h]  a[m/s^2]  R[m]   superelevation[m]\n");
  for (int i = 1; i <= 5; ++i) {
    const irw::TrackSpec s = irw::evaluation_track(i);
    const std::string path = (std::filesystem::path(dir) / ("T" + std::to_string(i) + ".csv")).string();
    write(irw::build_track(s), path);
    const bool curved = s.shape != irw::TrackShape::kStraight;
    std::printf("T%d     %7.0f  %8.4f  %5.0f  %.3f\n", i, s.design_velocity * 3.6, s.design_lateral_accel,
                curved ? s.curve_radius : 0.0,
                curved ? irw::superelevation_from_design(s.design_velocity, s.curve_radius, s.design_lateral_accel,
                                                         s.gauge)
                       : 0.0);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lateral guidance and adhesion control simulator for independently rotating wheels"};
  app.require_subcommand(1);

  std::string config, out_path, summary_path, space_path, dir = ".";
  std::vector<std::string> scenario_paths;
  bool no_timing = false;
  int n = 500, id = 0;
  double lambda = irw::kTuningInputWeight;
  irw::PsoOptions pso;

  auto* sim = app.add_subcommand("simulate", "run one scenario and write the CSV log");
  sim->add_option("config", config, "scenario file (YAML)")->required();
  sim->add_option("--out", out_path, "CSV log path");
  sim->add_option("--summary", summary_path, "summary path (default stdout)");
  sim->add_flag("--no-timing", no_timing, "leave out the solver_time column");

  auto* tun = app.add_subcommand("tune", "particle swarm search over MPC settings");
  tun->add_option("space", space_path, "design space file (YAML)")->required();
  tun->add_option("scenarios", scenario_paths, "scenario files")->required();
  tun->add_option("--particles", pso.particles)->check(CLI::PositiveNumber);
  tun->add_option("--iterations", pso.iterations)->check(CLI::NonNegativeNumber);
  tun->add_option("--seed", pso.seed);
  tun->add_option("--threads", pso.threads, "0 uses all cores")->check(CLI::NonNegativeNumber);
  tun->add_option("--lambda", lambda, "weight of mean |du| in the fitness [m/(N m)]");

  auto* ben = app.add_subcommand("bench", "replay closed-loop solves through both MPC solvers");
  ben->add_option("config", config, "scenario file (YAML)")->required();
  ben->add_option("--n", n, "number of solves (>= 100)");

  auto* chk = app.add_subcommand("model-check", "compare the model against the Lagrange reference");
  chk->add_option("--config", config, "take the vehicle parameters from this scenario");

  auto* trk = app.add_subcommand("tracks", "track utilities");
  trk->require_subcommand(1);
  auto* exp = trk->add_subcommand("export", "write tabulated track channels as CSV");
  exp->add_option("--id", id, "evaluation track 1..5");
  exp->add_option("--config", config, "export the track of this scenario");
  exp->add_option("--out", out_path, "output file, '-' for stdout");
  exp->add_option("--dir", dir, "directory for T1..T5.csv when neither --id nor --config is given");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  try {
    if (*sim) return simulate(config, out_path, summary_path, !no_timing);
    if (*tun) return tune(space_path, scenario_paths, pso, lambda);
    if (*ben) return bench(config, n);
    if (*chk) return model_check(config);
    if (*exp) return tracks_export(id, config, out_path, dir);
  } catch (const irw::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolver;
  }
  return kOk;
}
