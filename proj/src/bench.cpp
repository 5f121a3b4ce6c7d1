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

#include "irw/bench.hpp"

#include <optional>
#include <ostream>
#include <stdexcept>

#include "irw/metrics.hpp"
#include "irw/run.hpp"

namespace irw {

namespace {

struct Sample {
  GearState estimate;
  double base = 0.0;
};

void summarize(SolverTiming& s, double iterations) {
  s.mean = mean(s.times);
  s.median = percentile(s.times, 0.5);
  s.p95 = percentile(s.times, 0.95);
  s.mean_iterations = iterations / static_cast<double>(s.times.size());
}

}  // namespace

BenchReport bench_solvers(const ScenarioSpec& spec_in, int n_solves) {
  if (n_solves < 1) throw std::invalid_argument("bench needs at least one solve");
  if (spec_in.lateral == LateralController::kNone)
    throw std::invalid_argument("bench needs a lateral controller in the scenario");
  ScenarioSpec spec = spec_in;
  spec.sync();
  spec.enforce_deadline = false;
  // Long enough for n_solves updates plus slack.
  spec.duration = (n_solves + 0.5) * spec.rates.slow_period;
  spec.distance = std::max(spec.distance, 1.2 * spec.v0 * spec.duration + 10.0);

  std::vector<Sample> samples;
  RunOptions ro;
  ro.keep_rows = false;
  ro.on_solve = [&](const GearState& x, double u_d) { samples.push_back({x, u_d}); };
  const RunResult rec = run_scenario(spec, ro);
  if (rec.unstable || rec.solver_failure) throw std::runtime_error("bench recording aborted: " + rec.abort_reason);
  if (samples.size() > static_cast<std::size_t>(n_solves)) samples.resize(n_solves);

  const TrackGeometry track = scenario_track(spec);
  PreviewInputs preview;
  preview.setpoint = make_setpoint(spec.setpoint, spec.start, spec.start + spec.distance);
  preview.track = &track;
  preview.car_body_mass = spec.vehicle.m_cb;

  BenchReport rep;
  rep.solves = static_cast<int>(samples.size());
  std::optional<MpcSolution> warm;
  double it_warm = 0.0, it_cold = 0.0, it_ltv = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    preview.base_torque.assign(static_cast<std::size_t>(spec.mpc.steps), samples[i].base);
    const GearState& x = samples[i].estimate;
    auto run_warm = [&]() {
      MpcSolution s = solve_nmpc(x, preview, spec.vehicle, spec.mpc, warm ? &*warm : nullptr);
      rep.nmpc.times.push_back(s.solve_time);
      it_warm += s.iterations;
      rep.nmpc_delta_u.push_back(s.delta_u);
      warm = std::move(s);
    };
    auto run_cold = [&]() {
      const MpcSolution s = solve_nmpc(x, preview, spec.vehicle, spec.mpc);
      rep.nmpc_cold.times.push_back(s.solve_time);
      it_cold += s.iterations;
    };
    auto run_ltv = [&]() {
      MpcSolution s = solve_ltv_mpc(x, preview, spec.vehicle, spec.mpc);
      rep.ltv.times.push_back(s.solve_time);
      it_ltv += s.iterations;
      rep.ltv_delta_u.push_back(std::move(s.delta_u));
    };
    switch (i % 3) {
      case 0: run_warm(); run_ltv(); run_cold(); break;
      case 1: run_ltv(); run_cold(); run_warm(); break;
      default: run_cold(); run_warm(); run_ltv(); break;
    }
  }
  if (samples.empty()) throw std::runtime_error("bench recorded no lateral solves");
  summarize(rep.nmpc, it_warm);
  summarize(rep.nmpc_cold, it_cold);
  summarize(rep.ltv, it_ltv);
  rep.ratio = rep.ltv.median / rep.nmpc.median;
  return rep;
}

void write_bench(std::ostream& out, const BenchReport& r) {
  out << "solves: " << r.solves << '\n';
  auto row = [&](const char* name, const SolverTiming& s) {
    out << name << ": {mean_s: " << s.mean << ", median_s: " << s.median << ", p95_s: " << s.p95
        << ", mean_iterations: " << s.mean_iterations << "}\n";
  };
  row("nmpc_warm", r.nmpc);
  row("nmpc_cold", r.nmpc_cold);
  row("ltv", r.ltv);
  out << "ratio_ltv_over_nmpc_median: " << r.ratio << '\n';
}

}  // namespace irw
