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

#include "irw/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "irw/integration.hpp"
#include "irw/qp.hpp"

namespace irw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSpeedFloor = 0.1;
constexpr int kY = 4, kPsiRel = 5;

using Clock = std::chrono::steady_clock;
using Sensitivity = Eigen::Matrix<double, 6, Eigen::Dynamic>;

double input_scale(const MpcConfig& cfg) { return std::max(std::abs(cfg.tau_min), std::abs(cfg.tau_max)); }

// Wheel torques as the integration rule delivers them. Inside the box this
// is [base + du, base - du]; with base on a limit du shaves the common mode.
ControlInput wheel_torques(double base, double delta, const MpcConfig& cfg) {
  return integrate(base, delta, TorqueLimits{cfg.tau_min, cfg.tau_max}).torque;
}

// d(tau_ri, tau_le) / d du. At the kink du = 0 of a shaved common mode the
// mean of the one-sided slopes is [1, -1], the unshaved value. A du sitting
// on the interior box up to rounding counts as unshaved.
Eigen::Vector2d torque_gradient(double base, double delta, const MpcConfig& cfg) {
  const double sg = static_cast<double>((delta > 0.0) - (delta < 0.0));
  const double tol = 1e-9 * input_scale(cfg);
  if (base > 0.0 && std::abs(delta) > cfg.tau_max - base + tol) return {1.0 - sg, -1.0 - sg};
  if (base <= 0.0 && std::abs(delta) > base - cfg.tau_min + tol) return {1.0 + sg, -1.0 + sg};
  return {1.0, -1.0};
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Per-step weights: T Q on stages 1..L-1, T Q_L on the terminal stage.
StateVector stage_weight(const MpcConfig& cfg, int k) {
  StateVector w;
  for (int i = 0; i < 6; ++i) w[i] = cfg.step * cfg.state_weight[static_cast<std::size_t>(i)];
  if (k == cfg.steps) {
    w.head<4>().setZero();
    w.tail<2>() *= cfg.terminal_weight;
  }
  return w;
}


// |du_k| bound. With base strictly inside the limits du may not push a wheel
// past one; with base on a limit the integration rule trades common mode for
// du, so only the differential cap applies.
double delta_bound(const MpcConfig& cfg, double base) {
  const double cap = std::min({cfg.delta_u_limit, cfg.tau_max, -cfg.tau_min});
  if (base >= cfg.tau_max || base <= cfg.tau_min) return cap;
  return std::max(0.0, std::min({cap, cfg.tau_max - base, base - cfg.tau_min}));
}

double box_excess(const StateVector& x, const MpcConfig& cfg) {
  return std::max(0.0, std::abs(x[kY]) - cfg.y_limit) +
         std::max(0.0, std::abs(x[kPsiRel]) - cfg.psi_limit);
}

double max_box_excess(const std::vector<StateVector>& xs, const MpcConfig& cfg) {
  double v = 0.0;
  for (std::size_t k = 1; k < xs.size(); ++k)
    v = std::max({v, std::abs(xs[k][kY]) - cfg.y_limit, std::abs(xs[k][kPsiRel]) - cfg.psi_limit});
  return std::max(v, 0.0);
}

double total_excess(const std::vector<StateVector>& xs, const MpcConfig& cfg) {
  double v = 0.0;
  for (std::size_t k = 1; k < xs.size(); ++k) v += box_excess(xs[k], cfg);
  return v;
}

std::vector<StateVector> simulate(const PredictionModel& model, const StateVector& x0,
                                  const std::vector<double>& base, const std::vector<double>& du,
                                  const MpcConfig& cfg) {
  std::vector<StateVector> xs(du.size() + 1);
  xs[0] = x0;
  for (std::size_t k = 0; k < du.size(); ++k)
    xs[k + 1] = model.step(static_cast<int>(k), xs[k], wheel_torques(base[k], du[k], cfg));
  return xs;
}

bool finite(const std::vector<StateVector>& xs) {
  for (const auto& x : xs)
    if (!x.allFinite()) return false;
  return true;
}

// Quadratic model of the cost in the scaled step z = d / scale around a
// trajectory with sensitivities S_k = d x_k / d du.
struct Condensed {
  QpProblem qp;
  double scale = 1.0;
};

Condensed condense(const std::vector<StateVector>& xs, const std::vector<Sensitivity>& sens,
                   const std::vector<StateVector>& desired, const std::vector<double>& base,
                   const std::vector<double>& du, const MpcConfig& cfg) {
  const int L = cfg.steps;
  Condensed c;
  c.scale = input_scale(cfg);
  const double s = c.scale;

  // Stack the weighted residual rows and take the Gauss-Newton normal equations.
  int nrows = 0;
  std::vector<StateVector> weights(static_cast<std::size_t>(L + 1));
  for (int k = 1; k <= L; ++k) {
    weights[static_cast<std::size_t>(k)] = stage_weight(cfg, k);
    nrows += static_cast<int>((weights[static_cast<std::size_t>(k)].array() > 0.0).count());
  }
  Eigen::MatrixXd M(nrows + L, L);
  Eigen::VectorXd r(nrows + L);
  int row = 0;
  for (int k = 1; k <= L; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    for (int i = 0; i < 6; ++i) {
      const double w = weights[ku][i];
      if (w <= 0.0) continue;
      const double sw = std::sqrt(w);
      M.row(row) = sw * s * sens[ku].row(i);
      r[row] = sw * (xs[ku][i] - desired[ku][i]);
      ++row;
    }
  }
  const double sr = std::sqrt(cfg.step * cfg.input_weight);
  M.bottomRows(L) = sr * s * Eigen::MatrixXd::Identity(L, L);
  for (int k = 0; k < L; ++k) r[row + k] = sr * du[static_cast<std::size_t>(k)];

  QpProblem& qp = c.qp;
  qp.hessian = M.transpose() * M;
  qp.gradient = M.transpose() * r;
  qp.lower.resize(L);
  qp.upper.resize(L);
  for (int k = 0; k < L; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double b = delta_bound(cfg, base[ku]);
    qp.lower[k] = std::min(0.0, (-b - du[ku]) / s);
    qp.upper[k] = std::max(0.0, (b - du[ku]) / s);
  }
  qp.rows.resize(2 * L, L);
  qp.row_lower.resize(2 * L);
  qp.row_upper.resize(2 * L);
  for (int k = 1; k <= L; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const int j = 2 * (k - 1);
    qp.rows.row(j) = s * sens[ku].row(kY);
    qp.row_lower[j] = -cfg.y_limit - xs[ku][kY];
    qp.row_upper[j] = cfg.y_limit - xs[ku][kY];
    qp.rows.row(j + 1) = s * sens[ku].row(kPsiRel);
    qp.row_lower[j + 1] = -cfg.psi_limit - xs[ku][kPsiRel];
    qp.row_upper[j + 1] = cfg.psi_limit - xs[ku][kPsiRel];
  }
  return c;
}

// S_0 = 0, S_{k+1} = A_k S_k + b_k e_k' with b_k = B_k d(tau_ri, tau_le)/d du.
std::vector<Sensitivity> sensitivities(const std::vector<Linearization>& lin, const std::vector<double>& base,
                                       const std::vector<double>& du, const MpcConfig& cfg) {
  const int L = cfg.steps;
  std::vector<Sensitivity> sens(static_cast<std::size_t>(L + 1), Sensitivity::Zero(6, L));
  for (int k = 0; k < L; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    sens[ku + 1].leftCols(k) = lin[ku].a * sens[ku].leftCols(k);
    sens[ku + 1].col(k) = lin[ku].b * torque_gradient(base[ku], du[ku], cfg);
  }
  return sens;
}

double linearized_excess(const QpProblem& qp, const Eigen::VectorXd& z) {
  const Eigen::VectorXd v = qp.rows * z;
  double e = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    e += std::max({0.0, qp.row_lower[i] - v[i], v[i] - qp.row_upper[i]});
  return e;
}

void check_inputs(const std::vector<double>& base, const DesiredSequence& desired,
                  const MpcConfig& cfg) {
  cfg.validate();
  const auto L = static_cast<std::size_t>(cfg.steps);
  if (base.size() != L || desired.states.size() != L + 1)
    throw std::invalid_argument("horizon data must match the configured number of steps");
}

}  // namespace

void MpcConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("MPC needs at least one step");
  if (!(step > 0.0 && period > 0.0)) throw std::invalid_argument("MPC step and period must be positive");
  for (double w : state_weight)
    if (!(w >= 0.0)) throw std::invalid_argument("MPC state weights must be nonnegative");
  if (!(input_weight > 0.0)) throw std::invalid_argument("MPC input weight must be positive");
  if (!(terminal_weight >= 0.0)) throw std::invalid_argument("MPC terminal weight must be nonnegative");
  if (!(y_limit > 0.0 && psi_limit > 0.0 && delta_u_limit > 0.0))
    throw std::invalid_argument("MPC boxes must be nonempty");
  if (!(tau_min < 0.0 && tau_max > 0.0)) throw std::invalid_argument("torque limits must bracket 0");
  if (!(penalty > 0.0 && kkt_tolerance > 0.0 && max_iterations >= 1))
    throw std::invalid_argument("MPC solver settings must be positive");
}

DesiredSequence desired_sequence(const GearState& est, const PreviewInputs& preview,
                                 const VehicleParams& params, const MpcConfig& cfg) {
  cfg.validate();
  if (!(est.xdot >= kSpeedFloor)) throw std::domain_error("desired sequence needs xdot >= 0.1 m/s");
  if (preview.track == nullptr || !preview.setpoint)
    throw std::invalid_argument("preview needs a track and a set point");
  const int L = cfg.steps;
  if (preview.base_torque.size() != static_cast<std::size_t>(L))
    throw std::invalid_argument("base torque sequence must have L entries");

  const TrackGeometry& track = *preview.track;
  const double accel_per_torque = 1.0 / (params.r0 * params.mx(preview.car_body_mass));
  auto base = [&](int k) { return preview.base_torque[static_cast<std::size_t>(std::clamp(k, 0, L - 1))]; };
  auto position = [&](int k) {
    const double t = cfg.step * k;
    return est.x + est.xdot * t + base(k) * accel_per_torque * 0.5 * t * t;
  };
  auto speed = [&](int k) { return est.xdot + base(k) * accel_per_torque * cfg.step * k; };

  // Knots -2..L+2 so that both slopes below are central everywhere.
  constexpr int kPad = 2;
  const int n = L + 1 + 2 * kPad;
  std::vector<double> y(static_cast<std::size_t>(n)), psi_rel(static_cast<std::size_t>(n), 0.0);
  const double y_now = preview.setpoint(est.x);
  for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = cfg.preview ? preview.setpoint(position(i - kPad)) : y_now;
  for (int i = 1; i + 1 < n; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    const double ydot = (y[iu + 1] - y[iu - 1]) / (2.0 * cfg.step);
    psi_rel[iu] = ydot / std::max(speed(i - kPad), kSpeedFloor);
  }

  const TrackLocal now = track.local(est.x, params.car_body_length);
  DesiredSequence d;
  d.states.resize(static_cast<std::size_t>(L + 1));
  d.theta.resize(static_cast<std::size_t>(L));
  for (int k = 0; k <= L; ++k) {
    const auto i = static_cast<std::size_t>(k + kPad);
    const double p = position(k);
    const double v = speed(k);
    if (p > track.total_length()) d.flags |= kMpcPreviewClamped;
    TrackLocal tr = now;
    double track_yaw = now.psi + now.kappa * (p - est.x);
    if (cfg.preview) {
      tr = track.local(p, params.car_body_length);
      track_yaw = tr.psi;
    }
    const double psi_rel_rate = (psi_rel[i + 1] - psi_rel[i - 1]) / (2.0 * cfg.step);
    StateVector& x = d.states[static_cast<std::size_t>(k)];
    x << p, psi_rel[i] + track_yaw, v, psi_rel_rate + tr.kappa * v, y[i], psi_rel[i];
    if (k < L) d.theta[static_cast<std::size_t>(k)] = ModelTheta{tr, preview.car_body_mass};
  }
  return d;
}

RailPredictionModel::RailPredictionModel(std::vector<ModelTheta> theta, VehicleParams params,
                                         double step)
    : theta_(std::move(theta)), params_(params), step_(step) {
  params_.validate();
  if (!(step_ > 0.0)) throw std::invalid_argument("prediction step must be positive");
}

StateVector RailPredictionModel::step(int k, const StateVector& x, const ControlInput& u) const {
  return x + step_ * detail::model_derivative(x, u, theta_.at(static_cast<std::size_t>(k)), params_);
}

Linearization RailPredictionModel::linearize(int k, const StateVector& x,
                                             const ControlInput& u) const {
  return irw::linearize(GearState::from(x), u, theta_.at(static_cast<std::size_t>(k)), params_, step_);
}

double cost_eval(const std::vector<StateVector>& states, const std::vector<double>& delta_u,
                 const std::vector<StateVector>& desired, const MpcConfig& cfg) {
  const auto L = static_cast<std::size_t>(cfg.steps);
  if (states.size() != L + 1 || desired.size() != L + 1 || delta_u.size() != L)
    throw std::invalid_argument("cost_eval: sequence lengths do not match the horizon");
  double j = 0.0;
  for (std::size_t k = 0; k <= L; ++k) {
    const StateVector w = stage_weight(cfg, static_cast<int>(k));
    const StateVector e = states[k] - desired[k];
    j += (w.array() * e.array().square()).sum();
    if (k < L) j += cfg.step * cfg.input_weight * delta_u[k] * delta_u[k];
  }
  return j;
}

MpcSolution solve_nmpc(const GearState& estimate, const DesiredSequence& desired,
                       const std::vector<double>& base, const PredictionModel& model,
                       const MpcConfig& cfg, const MpcSolution* warm) {
  const auto start = Clock::now();
  check_inputs(base, desired, cfg);
  const int L = cfg.steps;
  const auto Lu = static_cast<std::size_t>(L);

  MpcSolution sol;
  sol.delta_u.assign(Lu, 0.0);
  if (warm != nullptr && warm->delta_u.size() == Lu) {
    for (std::size_t k = 0; k + 1 < Lu; ++k) sol.delta_u[k] = warm->delta_u[k + 1];
    sol.delta_u[Lu - 1] = warm->delta_u[Lu - 1];
  }
  for (std::size_t k = 0; k < Lu; ++k) {
    const double b = delta_bound(cfg, base[k]);
    sol.delta_u[k] = std::clamp(sol.delta_u[k], -b, b);
  }

  const StateVector x0 = estimate.vec();
  sol.states = simulate(model, x0, base, sol.delta_u, cfg);
  if (!finite(sol.states)) {
    sol.flags |= kMpcSolverFailure;
    sol.solve_time = seconds_since(start);
    return sol;
  }
  sol.cost = cost_eval(sol.states, sol.delta_u, desired.states, cfg);
  double merit = sol.cost + cfg.penalty * total_excess(sol.states, cfg);

  QpOptions qp_opt;
  qp_opt.penalty = cfg.penalty;
  bool converged = false;
  bool softened = false;
  std::vector<Linearization> lin(Lu);
  while (sol.iterations < cfg.max_iterations) {
    ++sol.iterations;
    for (std::size_t k = 0; k < Lu; ++k)
      lin[k] = model.linearize(static_cast<int>(k), sol.states[k], wheel_torques(base[k], sol.delta_u[k], cfg));
    const Condensed c = condense(sol.states, sensitivities(lin, base, sol.delta_u, cfg), desired.states, base, sol.delta_u, cfg);
    const QpResult qp = solve_qp(c.qp, qp_opt);
    if (qp.status == QpStatus::kInvalid || !qp.z.allFinite()) {
      sol.flags |= kMpcSolverFailure;
      break;
    }
    softened = qp.status == QpStatus::kSoftened;

    // The QP stationarity H z + g = multiplier terms makes H z the Lagrangian
    // gradient at the current iterate.
    const Eigen::VectorXd hz = c.qp.hessian * qp.z;
    sol.kkt_residual = hz.lpNorm<Eigen::Infinity>() / std::max(1.0, sol.cost);
    if (sol.kkt_residual <= cfg.kkt_tolerance) {
      converged = true;
      break;
    }

    const double excess_now = total_excess(sol.states, cfg);
    const double predicted = -(c.qp.gradient.dot(qp.z) + 0.5 * qp.z.dot(hz)) +
                             cfg.penalty * (excess_now - linearized_excess(c.qp, qp.z));
    if (!(predicted > 1e-14 * std::max(1.0, merit))) {
      converged = true;
      break;
    }

    bool accepted = false;
    double alpha = 1.0;
    for (int ls = 0; ls < 20 && !accepted; ++ls, alpha *= 0.5) {
      std::vector<double> trial = sol.delta_u;
      for (std::size_t k = 0; k < Lu; ++k) {
        const double b = delta_bound(cfg, base[k]);
        trial[k] = std::clamp(trial[k] + alpha * c.scale * qp.z[static_cast<Eigen::Index>(k)], -b, b);
      }
      std::vector<StateVector> xs = simulate(model, x0, base, trial, cfg);
      if (!finite(xs)) continue;
      const double cost = cost_eval(xs, trial, desired.states, cfg);
      const double m = cost + cfg.penalty * total_excess(xs, cfg);
      if (m <= merit - 1e-4 * alpha * predicted) {
        sol.delta_u = std::move(trial);
        sol.states = std::move(xs);
        sol.cost = cost;
        merit = m;
        accepted = true;
      }
    }
    if (!accepted) break;
  }

  if (!converged) sol.flags |= kMpcSuboptimal;
  sol.violation = max_box_excess(sol.states, cfg);
  if (softened || sol.violation > 1e-10) sol.flags |= kMpcSoftened;
  sol.solve_time = seconds_since(start);
  return sol;
}

MpcSolution solve_ltv_mpc(const GearState& estimate, const DesiredSequence& desired,
                          const std::vector<double>& base, const PredictionModel& model,
                          const MpcConfig& cfg) {
  const auto start = Clock::now();
  check_inputs(base, desired, cfg);
  const int L = cfg.steps;
  const auto Lu = static_cast<std::size_t>(L);

  // Centred linearisation, affine remainder kept: x+ = A x + B u + c.
  std::vector<Linearization> lin(Lu);
  std::vector<StateVector> affine(Lu);
  for (std::size_t k = 0; k < Lu; ++k) {
    StateVector x_lin = StateVector::Zero();
    x_lin[0] = desired.states[k][0];
    x_lin[2] = desired.states[k][2];
    const ControlInput u_lin = wheel_torques(base[k], 0.0, cfg);
    lin[k] = model.linearize(static_cast<int>(k), x_lin, u_lin);
    affine[k] = lin[k].next - lin[k].a * x_lin - lin[k].b * Eigen::Vector2d(u_lin.tau_ri, u_lin.tau_le);
  }

  MpcSolution sol;
  sol.iterations = 1;
  const std::vector<double> zero(Lu, 0.0);
  std::vector<StateVector> xs(Lu + 1);
  xs[0] = estimate.vec();
  for (std::size_t k = 0; k < Lu; ++k)
    xs[k + 1] = lin[k].a * xs[k] + lin[k].b * Eigen::Vector2d(base[k], base[k]) + affine[k];

  const std::vector<Sensitivity> sens = sensitivities(lin, base, zero, cfg);
  const Condensed c = condense(xs, sens, desired.states, base, zero, cfg);
  QpOptions qp_opt;
  qp_opt.penalty = cfg.penalty;
  const QpResult qp = solve_qp(c.qp, qp_opt);

  sol.delta_u.assign(Lu, 0.0);
  if (qp.status == QpStatus::kInvalid || !qp.z.allFinite()) {
    sol.flags |= kMpcSolverFailure;
  } else {
    for (std::size_t k = 0; k < Lu; ++k) sol.delta_u[k] = c.scale * qp.z[static_cast<Eigen::Index>(k)];
    if (qp.status == QpStatus::kIterationLimit) sol.flags |= kMpcSuboptimal;
  }
  const Eigen::Map<const Eigen::VectorXd> du(sol.delta_u.data(), L);
  sol.states.resize(Lu + 1);
  for (std::size_t k = 0; k <= Lu; ++k) sol.states[k] = xs[k] + sens[k] * du;
  sol.cost = cost_eval(sol.states, sol.delta_u, desired.states, cfg);
  sol.kkt_residual = qp.kkt_residual;
  sol.violation = max_box_excess(sol.states, cfg);
  if (qp.status == QpStatus::kSoftened || sol.violation > 1e-10) sol.flags |= kMpcSoftened;
  sol.solve_time = seconds_since(start);
  return sol;
}

MpcSolution solve_nmpc(const GearState& estimate, const PreviewInputs& preview,
                       const VehicleParams& params, const MpcConfig& cfg, const MpcSolution* warm) {
  const auto start = Clock::now();
  const DesiredSequence d = desired_sequence(estimate, preview, params, cfg);
  const RailPredictionModel model(d.theta, params, cfg.step);
  MpcSolution sol = solve_nmpc(estimate, d, preview.base_torque, model, cfg, warm);
  sol.flags |= d.flags;
  sol.solve_time = seconds_since(start);
  return sol;
}

MpcSolution solve_ltv_mpc(const GearState& estimate, const PreviewInputs& preview,
                          const VehicleParams& params, const MpcConfig& cfg) {
  const auto start = Clock::now();
  const DesiredSequence d = desired_sequence(estimate, preview, params, cfg);
  const RailPredictionModel model(d.theta, params, cfg.step);
  MpcSolution sol = solve_ltv_mpc(estimate, d, preview.base_torque, model, cfg);
  sol.flags |= d.flags;
  sol.solve_time = seconds_since(start);
  return sol;
}

}  // namespace irw
