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

// Lateral guidance by receding-horizon optimisation over the differential
// torque. Both solvers share the cost, the constraint sets and the desired
// state sequence; they differ only in how the prediction is linearised:
// the nonlinear solver re-linearises along its iterates, the LTV solver
// once around the centred riding position.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "irw/model.hpp"
#include "irw/track.hpp"

namespace irw {

struct MpcConfig {
  int steps = 50;      // L
  double step = 0.01;  // T [s]; horizon = L T
  std::array<double, 6> state_weight{0.0, 0.0, 1.0, 10.0, 5e6, 1e4};  // diag Q
  double input_weight = 1e-4;   // R
  double terminal_weight = 10;  // q, terminal weight is Q diag(0,0,0,0,q,q)
  double y_limit = 0.007;       // [m], softened
  double psi_limit = 0.05;      // [rad], softened
  double delta_u_limit = 10000.0;  // |du| [N m], hard
  double tau_min = -10000.0, tau_max = 10000.0;
  double penalty = 1e6;  // L1 weight on state-box violation
  double kkt_tolerance = 1e-6;
  int max_iterations = 30;
  double period = 0.01;  // closed-loop update period [s]
  bool preview = true;   // false freezes y* and the track at the current position

  [[nodiscard]] double horizon() const { return steps * step; }
  /// Throws std::invalid_argument for L < 1, T <= 0, negative weights, R <= 0
  /// or empty boxes.
  void validate() const;
};

/// Everything known about the horizon ahead.
struct PreviewInputs {
  std::function<double(double)> setpoint;  // y* by track position [m -> m]
  std::vector<double> base_torque;         // u^d_k, k = 0..L-1 [N m]
  const TrackGeometry* track = nullptr;
  double car_body_mass = 32000.0;
};

enum MpcFlag : std::uint32_t {
  kMpcSuboptimal = 1u << 0,      // iteration cap or line-search stall
  kMpcSoftened = 1u << 1,        // a state box was relaxed
  kMpcPreviewClamped = 1u << 2,  // horizon reaches past the track end
  kMpcSolverFailure = 1u << 3,   // non-finite iterate or rejected QP
};

struct DesiredSequence {
  std::vector<StateVector> states;  // x^d_k, k = 0..L
  std::vector<ModelTheta> theta;    // parameters used for step k -> k+1, k = 0..L-1
  std::uint32_t flags = 0;
};

/// Forecast positions use the current speed and the base torque; the lateral
/// set point and the track are sampled at the forecast positions. The
/// set-point slope comes from central differences over neighbouring knots.
/// Throws std::domain_error below 0.1 m/s and std::invalid_argument for a
/// missing track or set point or a base-torque sequence not of length L.
DesiredSequence desired_sequence(const GearState& estimate, const PreviewInputs& preview,
                                 const VehicleParams& params, const MpcConfig& cfg);

/// Discrete prediction model; k is the horizon step.
class PredictionModel {
 public:
  virtual ~PredictionModel() = default;
  [[nodiscard]] virtual StateVector step(int k, const StateVector& x, const ControlInput& u) const = 0;
  [[nodiscard]] virtual Linearization linearize(int k, const StateVector& x,
                                                const ControlInput& u) const = 0;
};

/// Euler-discretised rail model with per-step parameters.
class RailPredictionModel final : public PredictionModel {
 public:
  RailPredictionModel(std::vector<ModelTheta> theta, VehicleParams params, double step);
  [[nodiscard]] StateVector step(int k, const StateVector& x, const ControlInput& u) const override;
  [[nodiscard]] Linearization linearize(int k, const StateVector& x,
                                        const ControlInput& u) const override;

 private:
  std::vector<ModelTheta> theta_;
  VehicleParams params_;
  double step_;
};

struct MpcSolution {
  std::vector<double> delta_u;      // L entries [N m]
  std::vector<StateVector> states;  // predicted x_0..x_L
  double cost = 0.0;                // without the state-box penalty
  double violation = 0.0;           // largest state-box excess
  double kkt_residual = 0.0;
  int iterations = 0;
  double solve_time = 0.0;  // [s]
  std::uint32_t flags = 0;
};

/// Weighted tracking cost including the terminal term. Throws
/// std::invalid_argument if the lengths do not fit L.
double cost_eval(const std::vector<StateVector>& states, const std::vector<double>& delta_u,
                 const std::vector<StateVector>& desired, const MpcConfig& cfg);

/// Sequential quadratic programming with a Gauss-Newton Hessian and an L1
/// merit line search. The KKT residual is the stationarity error of the
/// Lagrangian with respect to du / tau_max, relative to max(1, cost). A
/// warm start is shifted by one step. Never throws on numerical trouble;
/// inspect the flags.
MpcSolution solve_nmpc(const GearState& estimate, const DesiredSequence& desired,
                       const std::vector<double>& base_torque, const PredictionModel& model,
                       const MpcConfig& cfg, const MpcSolution* warm = nullptr);

/// Single QP on the model linearised at the centred riding position
/// [x^d_k, 0, xdot^d_k, 0, 0, 0] and u = [u^d_k, u^d_k]; the affine remainder
/// of the linearisation is kept.
MpcSolution solve_ltv_mpc(const GearState& estimate, const DesiredSequence& desired,
                          const std::vector<double>& base_torque, const PredictionModel& model,
                          const MpcConfig& cfg);

/// Convenience wrappers that build the desired sequence and the rail model.
MpcSolution solve_nmpc(const GearState& estimate, const PreviewInputs& preview,
                       const VehicleParams& params, const MpcConfig& cfg,
                       const MpcSolution* warm = nullptr);
MpcSolution solve_ltv_mpc(const GearState& estimate, const PreviewInputs& preview,
                          const VehicleParams& params, const MpcConfig& cfg);

}  // namespace irw
