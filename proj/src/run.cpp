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

#include "irw/run.hpp"

#include <charconv>
#include <cmath>
#include <optional>
#include <ostream>
#include <random>

#include "irw/metrics.hpp"

namespace irw {

namespace {

constexpr double kStandstill = 0.1;  // [m/s]
constexpr double kYAbort = 0.05;     // [m]
constexpr double kPsiAbort = 0.5;    // [rad]
constexpr double kDeliveryTol = 1e-9; // [N m]

// Gaussian measurement noise; one stream per run, drawn in a fixed order.
class Noise {
 public:
  Noise(const NoiseSpec& spec, std::uint64_t seed) : spec_(spec), rng_(seed) {}
  Measurement apply(Measurement m) {
    m.x.y += draw(spec_.y);
    m.x.psi_rel += draw(spec_.psi);
    m.x.psi_ax += draw(spec_.psi);
    m.adhesion_le += draw(spec_.adhesion);
    m.adhesion_ri += draw(spec_.adhesion);
    m.slip_le += draw(spec_.slip);
    m.slip_ri += draw(spec_.slip);
    return m;
  }

 private:
  double draw(double sd) { return sd > 0.0 ? sd * normal_(rng_) : 0.0; }
  NoiseSpec spec_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
};

bool finite(const PlantState& s) {
  return s.gear.vec().allFinite() && std::isfinite(s.omega_le) && std::isfinite(s.omega_ri);
}

void put(std::ostream& out, double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, r.ptr - buf);
}

}  // namespace

RunResult run_scenario(const ScenarioSpec& spec_in, const RunOptions& options) {
  ScenarioSpec spec = spec_in;
  spec.sync();
  spec.validate();

  const TrackGeometry track = scenario_track(spec);
  const AdhesionSchedule schedule(spec.adhesion);
  const VehicleParams& veh = spec.vehicle;
  const double end_p = spec.start + spec.distance;
  const auto setpoint = make_setpoint(spec.setpoint, spec.start, end_p);
  const double dt = spec.rates.fast_period;
  PlantOptions plant_opt;
  plant_opt.hold_speed = spec.hold_speed;

  PlantState plant = initial_plant_state(initial_state(spec, track), track, schedule, veh);
  Noise noise(spec.noise, spec.seed);
  AdhesionCtrlState adh_state;
  const TorqueLimits limits{veh.tau_min, veh.tau_max};
  const double du_cap = std::min(veh.tau_max, -veh.tau_min);
  Scheduler sched(spec.rates, limits);
  sched.enforce_deadline(spec.enforce_deadline);
  if (options.inject_deadline_miss) sched.inject_deadline_miss(options.inject_deadline_miss);

  std::optional<MpcSolution> warm;
  PreviewInputs preview;
  preview.setpoint = setpoint;
  preview.track = &track;
  preview.car_body_mass = veh.m_cb;

  RunResult res;
  std::vector<double> solve_times;
  double iter_sum = 0.0;
  double abs_du_sum = 0.0;
  std::vector<double> ys, ystars;
  double onset_p = -1.0;
  std::int64_t ticks = 0;

  for (std::int64_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (plant.gear.x - spec.start >= spec.distance) break;
    if (spec.duration > 0.0 && t >= spec.duration - 0.5 * dt) break;
    if (plant.standstill) break;

    const Measurement m = noise.apply(measure(plant));
    const bool demand_on = spec.demand.kind != DemandSpec::Kind::kNone && t >= spec.demand.onset - 0.5 * dt;
    if (demand_on && onset_p < 0.0) onset_p = plant.gear.x;

    auto base = [&]() {
      if (!demand_on) return 0.0;
      const double f_star = spec.demand.kind == DemandSpec::Kind::kAdhesion
                                ? spec.demand.value
                                : force_to_adhesion_setpoint(spec.demand.value, m.normal_le + m.normal_ri);
      // The wheel closer to macro-slip governs.
      const bool left = std::abs(m.slip_le) >= std::abs(m.slip_ri);
      const double f_hat = left ? m.adhesion_le : m.adhesion_ri;
      const double s_hat = -(left ? m.slip_le : m.slip_ri);
      return adhesion_step(f_star, f_hat, s_hat, adh_state, spec.adhesion_ctrl);
    };

    bool idle = false;
    auto lateral = [&](double u_d) -> LateralUpdate {
      LateralUpdate up;
      if (spec.lateral == LateralController::kNone) return up;
      if (m.x.xdot < spec.min_lateral_speed) {
        idle = true;
        warm.reset();
        return up;
      }
      if (options.on_solve) options.on_solve(m.x, u_d);
      preview.base_torque.assign(static_cast<std::size_t>(spec.mpc.steps), u_d);
      MpcSolution sol = spec.lateral == LateralController::kNmpc
                            ? solve_nmpc(m.x, preview, veh, spec.mpc, warm ? &*warm : nullptr)
                            : solve_ltv_mpc(m.x, preview, veh, spec.mpc);
      up.delta_u = sol.delta_u.front();
      up.solve_time = sol.solve_time;
      up.iterations = sol.iterations;
      up.flags = sol.flags;
      solve_times.push_back(sol.solve_time);
      iter_sum += sol.iterations;
      if (spec.lateral == LateralController::kNmpc) warm = std::move(sol);
      return up;
    };

    const SchedulerTick tick = sched.step(base, lateral);
    if (tick.slow_tick && (tick.lateral.flags & kMpcSolverFailure) && !tick.deadline_miss) {
      res.solver_failure = true;
      res.abort_reason = "solver failure at t = " + std::to_string(t);
    }
    const double commanded = sched.held_delta();
    // Delivered means the wheel torques differ by exactly 2 du up to rounding.
    if (std::abs(commanded) <= du_cap &&
        std::abs(0.5 * (tick.out.torque.tau_ri - tick.out.torque.tau_le) - commanded) > kDeliveryTol)
      ++res.undelivered;

    RunRow row;
    row.t = t;
    row.p = plant.gear.x - spec.start;
    row.x = plant.gear;
    row.omega_le = plant.omega_le;
    row.omega_ri = plant.omega_ri;
    row.s_le = plant.le.slip_x;
    row.s_ri = plant.ri.slip_x;
    row.f_le = plant.le.adhesion_x;
    row.f_ri = plant.ri.adhesion_x;
    row.u_d = tick.base;
    row.delta_u = tick.out.delta;
    row.tau_le = tick.out.torque.tau_le;
    row.tau_ri = tick.out.torque.tau_ri;
    row.segment = static_cast<int>(demand_on ? adh_state.segment : AdhesionSegment::kNone);
    row.solver_iters = tick.slow_tick ? tick.lateral.iterations : 0;
    row.solver_time = tick.slow_tick ? tick.lateral.solve_time : 0.0;
    row.flags = tick.lateral.flags;
    if (tick.deadline_miss) row.flags |= kRunDeadlineMiss;
    if (plant.unstable_contact) row.flags |= kRunUnstableContact;
    if (idle) row.flags |= kRunLateralIdle;
    if (tick.out.clamped) row.flags |= kRunTorqueClamped;
    if (tick.slow_tick) row.flags |= kRunSolveTick;
    row.y_star = setpoint(plant.gear.x);

    res.flags |= row.flags;
    abs_du_sum += std::abs(tick.out.delta);
    ys.push_back(row.x.y);
    ystars.push_back(row.y_star);
    ++ticks;
    if (options.keep_rows) res.rows.push_back(row);
    if (res.solver_failure) break;

    plant = plant_step(plant, tick.out.torque, track, schedule, veh, dt, plant_opt);
    if (!finite(plant) || std::abs(plant.gear.y) > kYAbort || std::abs(plant.gear.psi_rel) > kPsiAbort) {
      res.unstable = true;
      res.abort_reason = "lateral instability at t = " + std::to_string(t + dt);
      break;
    }
  }

  if (onset_p >= 0.0 && plant.standstill) res.braking_distance = plant.gear.x - onset_p;
  res.unstable_contact = plant.unstable_contact;
  res.deadline_misses = sched.deadline_misses();
  if (ticks > 0) {
    res.rmse = rmse(ys, ystars);
    res.mean_abs_delta_u = abs_du_sum / static_cast<double>(ticks);
  }
  if (!solve_times.empty()) {
    res.solves.count = static_cast<std::int64_t>(solve_times.size());
    res.solves.mean = mean(solve_times);
    res.solves.median = percentile(solve_times, 0.5);
    res.solves.p95 = percentile(solve_times, 0.95);
    res.solves.max = percentile(solve_times, 1.0);
    res.solves.mean_iterations = iter_sum / static_cast<double>(solve_times.size());
  }
  return res;
}

void write_csv(std::ostream& out, const RunResult& r, bool timing) {
  out << "t,p,x,psi_Ax,xdot,psidot_Ax,y_TrAx,psi_TrAx,omega_le,omega_ri,s_le,s_ri,f_le,f_ri,"
         "u_d,delta_u,tau_le,tau_ri,segment,solver_iters";
  if (timing) out << ",solver_time";
  out << ",flags\n";
  for (const RunRow& w : r.rows) {
    for (double v : {w.t, w.p, w.x.x, w.x.psi_ax, w.x.xdot, w.x.psidot_ax, w.x.y, w.x.psi_rel, w.omega_le,
                     w.omega_ri, w.s_le, w.s_ri, w.f_le, w.f_ri, w.u_d, w.delta_u, w.tau_le, w.tau_ri}) {
      put(out, v);
      out << ',';
    }
    out << w.segment << ',' << w.solver_iters << ',';
    if (timing) {
      put(out, w.solver_time);
      out << ',';
    }
    out << w.flags << '\n';
  }
}

void write_summary(std::ostream& out, const ScenarioSpec& spec, const RunResult& r) {
  out << "scenario: " << spec.name << '\n'
      << "controller: " << to_string(spec.lateral) << '\n'
      << "ticks: " << r.rows.size() << '\n'
      << "rmse_m: " << r.rmse << '\n'
      << "braking_distance_m: " << r.braking_distance << '\n'
      << "mean_abs_delta_u_Nm: " << r.mean_abs_delta_u << '\n'
      << "solves: " << r.solves.count << '\n'
      << "solve_time_mean_s: " << r.solves.mean << '\n'
      << "solve_time_median_s: " << r.solves.median << '\n'
      << "solve_time_p95_s: " << r.solves.p95 << '\n'
      << "solve_iterations_mean: " << r.solves.mean_iterations << '\n'
      << "deadline_misses: " << r.deadline_misses << '\n'
      << "undelivered_delta_u: " << r.undelivered << '\n'
      << "unstable_contact: " << (r.unstable_contact ? "true" : "false") << '\n'
      << "unstable: " << (r.unstable ? "true" : "false") << '\n'
      << "solver_failure: " << (r.solver_failure ? "true" : "false") << '\n';
  if (!r.abort_reason.empty()) out << "abort: " << r.abort_reason << '\n';
}

}  // namespace irw
