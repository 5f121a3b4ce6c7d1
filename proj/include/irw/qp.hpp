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

// Dense convex QP with hard variable bounds and softened general rows:
//
//   min 0.5 z'Hz + g'z   s.t.  lower <= z <= upper,  row_lower <= S z <= row_upper
//
// The rows are first treated as hard. If that problem is infeasible they are
// relaxed with one nonnegative slack per row carrying an L1 penalty.

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace irw {

struct QpProblem {
  Eigen::MatrixXd hessian;  // symmetric positive definite
  Eigen::VectorXd gradient;
  Eigen::VectorXd lower, upper;  // +-infinity for free variables
  Eigen::MatrixXd rows;          // may have zero rows
  Eigen::VectorXd row_lower, row_upper;
};

struct QpOptions {
  double penalty = 1e6;          // L1 weight on row violations
  double slack_curvature = 1.0;  // keeps the elastic Hessian definite
  int max_iterations = 0;        // 0 selects 10 * (variables + constraints)
};

enum class QpStatus { kOptimal, kSoftened, kIterationLimit, kInvalid };

struct QpResult {
  Eigen::VectorXd z;
  // Signed multipliers: H z + g = bound_mult + S' row_mult, positive on a
  // lower bound and negative on an upper bound.
  Eigen::VectorXd bound_mult;
  Eigen::VectorXd row_mult;
  double objective = 0.0;     // without the penalty term
  double violation = 0.0;     // largest row violation (0 unless softened)
  double kkt_residual = 0.0;  // max of stationarity, bound and complementarity error
  int iterations = 0;
  QpStatus status = QpStatus::kInvalid;
};

QpResult solve_qp(const QpProblem& problem, const QpOptions& options = {});

namespace detail {

struct DualActiveSetResult {
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;  // one per row of C, zero when inactive
  int iterations = 0;
  bool feasible = false;
  bool converged = false;
};

/// Goldfarb-Idnani dual active-set method for min 0.5 x'Gx + g'x s.t. C x >= b.
DualActiveSetResult dual_active_set(const Eigen::MatrixXd& G, const Eigen::VectorXd& g,
                                    const Eigen::MatrixXd& C, const Eigen::VectorXd& b,
                                    int max_iterations);
/// Same with G already factored.
DualActiveSetResult dual_active_set(const Eigen::LLT<Eigen::MatrixXd>& G, const Eigen::VectorXd& g,
                                    const Eigen::MatrixXd& C, const Eigen::VectorXd& b,
                                    int max_iterations);

}  // namespace detail

}  // namespace irw
