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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "irw/qp.hpp"

using namespace irw;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Enumerates active sets of C z >= b and returns the point satisfying the
// KKT conditions. Exponential, only for a handful of constraints.
std::optional<Eigen::VectorXd> brute_force(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                                           const Eigen::MatrixXd& C, const Eigen::VectorXd& b) {
  const int n = static_cast<int>(H.rows());
  const int m = static_cast<int>(C.rows());
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < m; ++i)
      if (mask & (1u << i)) act.push_back(i);
    const int k = static_cast<int>(act.size());
    if (k > n) continue;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    K.topLeftCorner(n, n) = H;
    rhs.head(n) = -g;
    for (int j = 0; j < k; ++j) {
      K.block(n + j, 0, 1, n) = C.row(act[j]);
      K.block(0, n + j, n, 1) = -C.row(act[j]).transpose();
      rhs[n + j] = b[act[j]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (lu.rank() < n + k) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd z = sol.head(n);
    bool ok = (sol.tail(k).array() >= -1e-10).all();
    ok = ok && ((C * z - b).array() >= -1e-10).all();
    if (ok) return z;
  }
  return std::nullopt;
}

Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> N(0.0, 1.0);
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = N(rng);
  return A * A.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
}

QpProblem unconstrained(const Eigen::MatrixXd& H, const Eigen::VectorXd& g) {
  QpProblem p;
  p.hessian = H;
  p.gradient = g;
  const auto n = H.rows();
  p.lower = Eigen::VectorXd::Constant(n, -kInf);
  p.upper = Eigen::VectorXd::Constant(n, kInf);
  p.rows.resize(0, n);
  p.row_lower.resize(0);
  p.row_upper.resize(0);
  return p;
}

}  // namespace

TEST_CASE("unconstrained minimum solves the normal equations") {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd H = random_spd(rng, 5);
  const Eigen::VectorXd g = Eigen::VectorXd::LinSpaced(5, -2.0, 3.0);
  const QpResult r = solve_qp(unconstrained(H, g));
  CHECK(r.status == QpStatus::kOptimal);
  CHECK((r.z + H.llt().solve(g)).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK(r.kkt_residual <= 1e-12);
}

TEST_CASE("random bounded problems match the active-set enumeration") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> U(0.1, 1.5);
  int softened = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + trial % 3;
    const int m = 1 + trial % 3;
    QpProblem p = unconstrained(random_spd(rng, n), Eigen::VectorXd::NullaryExpr(n, [&] { return 3.0 * N(rng); }));
    // A feasible point at the origin keeps the hard problem feasible.
    for (int i = 0; i < n; ++i) {
      p.lower[i] = (trial % 2) ? -U(rng) : -kInf;
      p.upper[i] = U(rng);
    }
    p.rows = Eigen::MatrixXd::NullaryExpr(m, n, [&] { return N(rng); });
    p.row_lower = Eigen::VectorXd::NullaryExpr(m, [&] { return -U(rng); });
    p.row_upper = Eigen::VectorXd::NullaryExpr(m, [&] { return U(rng); });

    Eigen::MatrixXd C(0, n);
    Eigen::VectorXd b(0);
    auto add = [&](const Eigen::RowVectorXd& a, double rhs) {
      C.conservativeResize(C.rows() + 1, Eigen::NoChange);
      b.conservativeResize(b.size() + 1);
      C.row(C.rows() - 1) = a;
      b[b.size() - 1] = rhs;
    };
    for (int i = 0; i < n; ++i) {
      Eigen::RowVectorXd e = Eigen::RowVectorXd::Unit(n, i);
      if (std::isfinite(p.lower[i])) add(e, p.lower[i]);
      add(-e, -p.upper[i]);
    }
    for (int i = 0; i < m; ++i) {
      add(p.rows.row(i), p.row_lower[i]);
      add(-p.rows.row(i), -p.row_upper[i]);
    }
    const auto oracle = brute_force(p.hessian, p.gradient, C, b);
    REQUIRE(oracle.has_value());
    const QpResult r = solve_qp(p);
    INFO("trial " << trial);
    CHECK(r.status == QpStatus::kOptimal);
    CHECK((r.z - *oracle).lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK(r.kkt_residual <= 1e-10);
    softened += r.status == QpStatus::kSoftened;
  }
  CHECK(softened == 0);
}

TEST_CASE("infeasible rows are relaxed with the L1 penalty") {
  // min 0.5 z^2 with hard z <= 1 and a soft row z >= 2: the best compromise
  // sits on the hard bound and violates the row by 1.
  QpProblem p = unconstrained(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1));
  p.upper[0] = 1.0;
  p.rows = Eigen::MatrixXd::Ones(1, 1);
  p.row_lower = Eigen::VectorXd::Constant(1, 2.0);
  p.row_upper = Eigen::VectorXd::Constant(1, kInf);
  const QpResult r = solve_qp(p);
  CHECK(r.status == QpStatus::kSoftened);
  CHECK(r.z[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.violation == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.row_mult[0] > 0.0);
  CHECK(r.row_mult[0] <= QpOptions{}.penalty + 1.0);
}

TEST_CASE("elastic solution trades violation against the penalty") {
  // Two contradicting rows z >= 1 and z <= -1 on a free variable. Any z in
  // [-1, 1] costs the same total violation, so the objective picks z = 0.
  QpProblem p = unconstrained(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1));
  p.rows = Eigen::MatrixXd::Ones(2, 1);
  p.row_lower = Eigen::Vector2d(1.0, -kInf);
  p.row_upper = Eigen::Vector2d(kInf, -1.0);
  const QpResult r = solve_qp(p);
  CHECK(r.status == QpStatus::kSoftened);
  CHECK(std::abs(r.z[0]) <= 1e-9);
  CHECK(r.violation == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("duplicate and redundant rows are handled") {
  QpProblem p = unconstrained(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(-4.0, -4.0));
  p.rows.resize(3, 2);
  p.rows << 1.0, 1.0, 1.0, 1.0, 2.0, 2.0;
  p.row_lower = Eigen::Vector3d::Constant(-kInf);
  p.row_upper = Eigen::Vector3d(2.0, 2.0, 4.0);
  const QpResult r = solve_qp(p);
  CHECK(r.status == QpStatus::kOptimal);
  CHECK(r.z[0] == doctest::Approx(1.0));
  CHECK(r.z[1] == doctest::Approx(1.0));
  CHECK(r.kkt_residual <= 1e-10);
}

TEST_CASE("bound multipliers carry the documented sign") {
  QpProblem p = unconstrained(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(-5.0, 5.0));
  p.lower = Eigen::Vector2d(-1.0, -1.0);
  p.upper = Eigen::Vector2d(1.0, 1.0);
  const QpResult r = solve_qp(p);
  CHECK(r.z[0] == doctest::Approx(1.0));
  CHECK(r.z[1] == doctest::Approx(-1.0));
  CHECK(r.bound_mult[0] == doctest::Approx(-4.0));  // upper bound
  CHECK(r.bound_mult[1] == doctest::Approx(4.0));   // lower bound
}

TEST_CASE("invalid problems are rejected") {
  QpProblem p = unconstrained(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d::Zero());
  p.lower[0] = 2.0;
  p.upper[0] = 1.0;
  CHECK_THROWS_AS(solve_qp(p), std::invalid_argument);
  p = unconstrained(-Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d::Zero());
  CHECK_THROWS_AS(solve_qp(p), std::invalid_argument);
  p = unconstrained(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector3d::Zero());
  CHECK_THROWS_AS(solve_qp(p), std::invalid_argument);
}
