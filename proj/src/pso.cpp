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

#include "irw/pso.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include "irw/run.hpp"

namespace irw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Evaluates all points; results land by index so the order of completion
// does not matter.
std::vector<double> evaluate(const std::function<double(const std::vector<double>&)>& fitness,
                             const std::vector<std::vector<double>>& points, int threads) {
  std::vector<double> out(points.size(), kInf);
  auto one = [&](std::size_t i) {
    try {
      const double f = fitness(points[i]);
      out[i] = std::isfinite(f) ? f : kInf;
    } catch (const std::exception&) {
      out[i] = kInf;
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(points.size(), threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency()));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < points.size(); ++i) one(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n_threads; ++t)
    pool.emplace_back([&]() {
      for (std::size_t i = next++; i < points.size(); i = next++) one(i);
    });
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace

PsoResult pso_minimize(const std::function<double(const std::vector<double>&)>& fitness,
                       const std::vector<double>& lower, const std::vector<double>& upper,
                       const PsoOptions& opt) {
  const std::size_t dim = lower.size();
  if (dim == 0 || upper.size() != dim) throw std::invalid_argument("pso needs a non-empty box");
  for (std::size_t d = 0; d < dim; ++d)
    if (!(lower[d] <= upper[d])) throw std::invalid_argument("pso box has lower > upper");
  if (opt.particles < 1 || opt.iterations < 0) throw std::invalid_argument("pso needs at least one particle");

  std::vector<double> start(dim);
  for (std::size_t d = 0; d < dim; ++d) start[d] = 0.5 * (lower[d] + upper[d]);
  if (opt.initial) {
    if (opt.initial->size() != dim) throw std::invalid_argument("pso initial point has the wrong size");
    for (std::size_t d = 0; d < dim; ++d) start[d] = std::clamp((*opt.initial)[d], lower[d], upper[d]);
  }

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = static_cast<std::size_t>(opt.particles);
  std::vector<std::vector<double>> pos(n, start), vel(n, std::vector<double>(dim, 0.0));
  std::vector<double> vmax(dim);
  for (std::size_t d = 0; d < dim; ++d) vmax[d] = opt.max_velocity * (upper[d] - lower[d]);
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t d = 0; d < dim; ++d) {
      pos[i][d] = lower[d] + unit(rng) * (upper[d] - lower[d]);
      vel[i][d] = (2.0 * unit(rng) - 1.0) * vmax[d];
    }

  PsoResult res;
  std::vector<double> fit = evaluate(fitness, pos, opt.threads);
  res.evaluations = static_cast<int>(n);
  std::vector<std::vector<double>> pbest = pos;
  std::vector<double> pbest_f = fit;
  std::size_t g = static_cast<std::size_t>(std::min_element(fit.begin(), fit.end()) - fit.begin());
  std::vector<double> gbest = pos[g];
  double gbest_f = fit[g];
  res.history.push_back(gbest_f);

  for (int it = 0; it < opt.iterations; ++it) {
    const double w = opt.iterations > 1
                         ? opt.inertia_start + (opt.inertia_end - opt.inertia_start) * it / (opt.iterations - 1)
                         : opt.inertia_start;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < dim; ++d) {
        const double r1 = unit(rng), r2 = unit(rng);
        double v = w * vel[i][d] + opt.cognitive * r1 * (pbest[i][d] - pos[i][d]) +
                   opt.social * r2 * (gbest[d] - pos[i][d]);
        v = std::clamp(v, -vmax[d], vmax[d]);
        double x = pos[i][d] + v;
        // Stop at the wall rather than bounce.
        if (x < lower[d] || x > upper[d]) {
          x = std::clamp(x, lower[d], upper[d]);
          v = 0.0;
        }
        pos[i][d] = x;
        vel[i][d] = v;
      }
    fit = evaluate(fitness, pos, opt.threads);
    res.evaluations += static_cast<int>(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (fit[i] < pbest_f[i]) {
        pbest_f[i] = fit[i];
        pbest[i] = pos[i];
      }
      if (fit[i] < gbest_f) {
        gbest_f = fit[i];
        gbest = pos[i];
      }
    }
    res.history.push_back(gbest_f);
  }

  if (!std::isfinite(gbest_f)) {
    res.all_infeasible = true;
    res.best = start;
    res.fitness = kInf;
    return res;
  }
  res.best = gbest;
  res.fitness = gbest_f;
  return res;
}

double tuning_fitness(const std::vector<ScenarioSpec>& scenarios, const MpcConfig& mpc, double lambda) {
  double total = 0.0;
  RunOptions ro;
  ro.keep_rows = false;
  for (ScenarioSpec s : scenarios) {
    const double period = s.mpc.period, lo = s.mpc.tau_min, hi = s.mpc.tau_max;
    s.mpc = mpc;
    s.mpc.period = period;
    s.mpc.tau_min = lo;
    s.mpc.tau_max = hi;
    const RunResult r = run_scenario(s, ro);
    if (r.unstable || r.solver_failure) return kInf;
    total += r.rmse + lambda * r.mean_abs_delta_u;
  }
  return total;
}

TuneResult tune_pso(const std::vector<DesignParameter>& space, const std::vector<ScenarioSpec>& scenarios,
                    const PsoOptions& options, double lambda) {
  if (space.empty()) throw std::invalid_argument("tuning needs at least one design parameter");
  if (scenarios.empty()) throw std::invalid_argument("tuning needs at least one scenario");
  const MpcConfig base = scenarios.front().mpc;

  // Search coordinates are log10 for log-scaled parameters.
  auto to_search = [&](std::size_t i, double v) { return space[i].log ? std::log10(v) : v; };
  auto from_search = [&](std::size_t i, double c) { return space[i].log ? std::pow(10.0, c) : c; };
  auto config_at = [&](const std::vector<double>& c) {
    MpcConfig m = base;
    for (std::size_t i = 0; i < space.size(); ++i) apply_parameter(m, space[i].name, from_search(i, c[i]));
    return m;
  };

  std::vector<double> lo, hi, init;
  for (std::size_t i = 0; i < space.size(); ++i) {
    lo.push_back(to_search(i, space[i].lower));
    hi.push_back(to_search(i, space[i].upper));
    const double v = std::clamp(read_parameter(base, space[i].name), space[i].lower, space[i].upper);
    init.push_back(to_search(i, v));
  }
  PsoOptions opt = options;
  if (!opt.initial) opt.initial = init;

  TuneResult out;
  out.default_fitness = tuning_fitness(scenarios, base, lambda);
  out.swarm = pso_minimize([&](const std::vector<double>& c) { return tuning_fitness(scenarios, config_at(c), lambda); },
                           lo, hi, opt);
  out.best = config_at(out.swarm.best);
  for (std::size_t i = 0; i < space.size(); ++i) out.values.push_back(from_search(i, out.swarm.best[i]));
  out.fitness = out.swarm.fitness;
  return out;
}

}  // namespace irw
