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

#include "irw/qp.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace irw {

namespace detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Factors kept by the dual method: J' N_active = [R; 0] with J = L^-T Q.
struct Factors {
  Eigen::MatrixXd J, R;
  int q = 0;

  // Appends the constraint whose transformed normal is d = J' n.
  bool add(Eigen::VectorXd d) {
    const int n = static_cast<int>(J.rows());
    for (int j = n - 1; j > q; --j) {
      const double h = std::hypot(d[j - 1], d[j]);
      if (h == 0.0) continue;
      const double c = d[j - 1] / h, s = d[j] / h;
      d[j - 1] = h;
      d[j] = 0.0;
      for (int k = 0; k < n; ++k) {
        const double a = J(k, j - 1), b = J(k, j);
        J(k, j - 1) = c * a + s * b;
        J(k, j) = s * a - c * b;
      }
    }
    R.col(q).head(q + 1) = d.head(q + 1);
    ++q;
    const double scale = std::max(1.0, R.topLeftCorner(q, q).cwiseAbs().maxCoeff());
    return std::abs(d[q - 1]) > 1e-14 * scale;
  }

  void drop(int l) {
    const int n = static_cast<int>(J.rows());
    for (int j = l; j < q - 1; ++j) R.col(j).head(q) = R.col(j + 1).head(q);
    R.col(q - 1).setZero();
    --q;
    for (int j = l; j < q; ++j) {
      const double h = std::hypot(R(j, j), R(j + 1, j));
      if (h == 0.0) continue;
      const double c = R(j, j) / h, s = R(j + 1, j) / h;
      R(j, j) = h;
      R(j + 1, j) = 0.0;
      for (int k = j + 1; k < q; ++k) {
        const double a = R(j, k), b = R(j + 1, k);
        R(j, k) = c * a + s * b;
        R(j + 1, k) = s * a - c * b;
      }
      for (int k = 0; k < n; ++k) {
        const double a = J(k, j), b = J(k, j + 1);
        J(k, j) = c * a + s * b;
        J(k, j + 1) = s * a - c * b;
      }
    }
  }
};

}  // namespace

DualActiveSetResult dual_active_set(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& g,
                                    const Eigen::MatrixXd& C, const Eigen::VectorXd& b,
                                    int max_iterations) {
  const int n = static_cast<int>(g.size());
  const int m = static_cast<int>(C.rows());
  DualActiveSetResult res;
  res.multipliers = Eigen::VectorXd::Zero(m);
  Factors f;
  f.J = llt.matrixU().solve(Eigen::MatrixXd::Identity(n, n));  // L^-T
  f.R = Eigen::MatrixXd::Zero(n, n);
  res.x = -llt.solve(g);

  std::vector<int> active;   // row indices, in factor order
  std::vector<double> mult;  // matching multipliers
  const Eigen::VectorXd row_norm = C.rowwise().norm();
  auto tol_of = [&](int i) { return 1e-12 * (1.0 + std::abs(b[i]) + row_norm[i] * res.x.lpNorm<Eigen::Infinity>()); };

  for (;;) {
    // Most violated row, measured in row-normalized units.
    int p = -1;
    double worst = 0.0;
    for (int i = 0; i < m; ++i) {
      if (row_norm[i] == 0.0) continue;
      const double s = C.row(i).dot(res.x) - b[i];
      if (s < -tol_of(i) && s / row_norm[i] < worst) {
        worst = s / row_norm[i];
        p = i;
      }
    }
    if (p < 0) {
      res.feasible = res.converged = true;
      break;
    }
    if (res.iterations >= max_iterations) break;

    const Eigen::VectorXd np = C.row(p).transpose();
    double u_new = 0.0;
    bool added = false;
    while (!added) {
      if (++res.iterations > max_iterations) break;
      const int q = f.q;
      const Eigen::VectorXd d = f.J.transpose() * np;
      const Eigen::VectorXd z = f.J.rightCols(n - q) * d.tail(n - q);
      Eigen::VectorXd r(q);
      if (q > 0) r = f.R.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(d.head(q));

      double t1 = kInf;
      int l = -1;
      for (int j = 0; j < q; ++j) {
        if (r[j] > 0.0 && mult[j] / r[j] < t1) {
          t1 = mult[j] / r[j];
          l = j;
        }
      }
      const double znp = z.dot(np);
      const bool primal = z.lpNorm<Eigen::Infinity>() > 1e-14 * (1.0 + d.lpNorm<Eigen::Infinity>()) &&
                          znp > 0.0;
      const double t2 = primal ? -(np.dot(res.x) - b[p]) / znp : kInf;
      const double t = std::min(t1, t2);
      if (t == kInf) {
        res.iterations = std::min(res.iterations, max_iterations);
        return res;  // infeasible
      }
      for (int j = 0; j < q; ++j) mult[j] -= t * r[j];
      u_new += t;
      if (primal) res.x += t * z;

      if (primal && t2 <= t1) {
        if (!f.add(d)) return res;  // dependent normal: cannot happen for a full step
        active.push_back(p);
        mult.push_back(u_new);
        added = true;
      } else {
        f.drop(l);
        active.erase(active.begin() + l);
        mult.erase(mult.begin() + l);
      }
    }
    if (!added) break;
  }
  for (std::size_t j = 0; j < active.size(); ++j) res.multipliers[active[j]] = mult[j];
  return res;
}

DualActiveSetResult dual_active_set(const Eigen::MatrixXd& G, const Eigen::VectorXd& g,
                                    const Eigen::MatrixXd& C, const Eigen::VectorXd& b,
                                    int max_iterations) {
  const Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) {
    DualActiveSetResult res;
    res.x = Eigen::VectorXd::Zero(G.rows());
    res.multipliers = Eigen::VectorXd::Zero(C.rows());
    return res;
  }
  return dual_active_set(llt, g, C, b, max_iterations);
}

}  // namespace detail

namespace {

// Rows of C z >= b for finite bounds. owner[i] >= 0 names the variable (or
// soft row) and sign[i] is +1 for a lower side and -1 for an upper side.
struct Stacked {
  Eigen::MatrixXd C;
  Eigen::VectorXd b;
  std::vector<int> owner, sign;
  std::vector<bool> is_row;
};

Stacked stack(const QpProblem& pr, bool with_rows) {
  const Eigen::Index n = pr.hessian.rows();
  const Eigen::Index m = with_rows ? pr.rows.rows() : 0;
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < n; ++i) count += std::isfinite(pr.lower[i]) + std::isfinite(pr.upper[i]);
  for (Eigen::Index i = 0; i < m; ++i)
    count += std::isfinite(pr.row_lower[i]) + std::isfinite(pr.row_upper[i]);

  Stacked st;
  st.C = Eigen::MatrixXd::Zero(count, n);
  st.b.resize(count);
  Eigen::Index k = 0;
  auto push = [&](double rhs, int owner, int sign, bool is_row) {
    st.b[k++] = rhs;
    st.owner.push_back(owner);
    st.sign.push_back(sign);
    st.is_row.push_back(is_row);
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isfinite(pr.lower[i])) {
      st.C(k, i) = 1.0;
      push(pr.lower[i], static_cast<int>(i), 1, false);
    }
    if (std::isfinite(pr.upper[i])) {
      st.C(k, i) = -1.0;
      push(-pr.upper[i], static_cast<int>(i), -1, false);
    }
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::isfinite(pr.row_lower[i])) {
      st.C.row(k) = pr.rows.row(i);
      push(pr.row_lower[i], static_cast<int>(i), 1, true);
    }
    if (std::isfinite(pr.row_upper[i])) {
      st.C.row(k) = -pr.rows.row(i);
      push(-pr.row_upper[i], static_cast<int>(i), -1, true);
    }
  }
  return st;
}

Eigen::LLT<Eigen::MatrixXd> validate(const QpProblem& pr) {
  const auto n = pr.hessian.rows();
  if (pr.hessian.cols() != n || pr.gradient.size() != n || pr.lower.size() != n ||
      pr.upper.size() != n || pr.rows.cols() != (pr.rows.rows() > 0 ? n : pr.rows.cols()) ||
      pr.row_lower.size() != pr.rows.rows() || pr.row_upper.size() != pr.rows.rows())
    throw std::invalid_argument("QP dimensions are inconsistent");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(pr.lower[i] <= pr.upper[i])) throw std::invalid_argument("QP bounds are inverted");
  Eigen::LLT<Eigen::MatrixXd> llt(pr.hessian);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("QP Hessian is not positive definite");
  return llt;
}

void finish(const QpProblem& pr, QpResult& out) {
  const Eigen::Index n = pr.hessian.rows();
  const Eigen::Index m = pr.rows.rows();
  const Eigen::VectorXd grad = pr.hessian * out.z + pr.gradient;
  out.objective = 0.5 * out.z.dot(pr.hessian * out.z) + pr.gradient.dot(out.z);

  Eigen::VectorXd stat = grad - out.bound_mult;
  Eigen::VectorXd sz;
  if (m > 0) {
    stat -= pr.rows.transpose() * out.row_mult;
    sz = pr.rows * out.z;
  }
  const double gscale = 1.0 + grad.lpNorm<Eigen::Infinity>();
  double kkt = stat.lpNorm<Eigen::Infinity>() / gscale;
  for (Eigen::Index i = 0; i < n; ++i) {
    kkt = std::max({kkt, pr.lower[i] - out.z[i], out.z[i] - pr.upper[i]});
    const double lam = out.bound_mult[i];
    const double gap = lam > 0.0 ? out.z[i] - pr.lower[i] : (lam < 0.0 ? pr.upper[i] - out.z[i] : 0.0);
    kkt = std::max(kkt, std::abs(lam) * gap / gscale);
  }
  out.violation = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    out.violation = std::max({out.violation, pr.row_lower[i] - sz[i], sz[i] - pr.row_upper[i]});
    const double lam = out.row_mult[i];
    if (out.status == QpStatus::kOptimal) {
      const double gap =
          lam > 0.0 ? sz[i] - pr.row_lower[i] : (lam < 0.0 ? pr.row_upper[i] - sz[i] : 0.0);
      kkt = std::max(kkt, std::abs(lam) * gap / gscale);
    }
  }
  if (out.status == QpStatus::kOptimal) kkt = std::max(kkt, out.violation);
  out.kkt_residual = kkt;
}

}  // namespace

QpResult solve_qp(const QpProblem& pr, const QpOptions& opt) {
  const Eigen::LLT<Eigen::MatrixXd> llt = validate(pr);
  const int n = static_cast<int>(pr.hessian.rows());
  const int m = static_cast<int>(pr.rows.rows());
  QpResult out;
  out.bound_mult = Eigen::VectorXd::Zero(n);
  out.row_mult = Eigen::VectorXd::Zero(m);

  auto cap = [&](Eigen::Index variables, Eigen::Index constraints) {
    return opt.max_iterations > 0 ? opt.max_iterations
                                  : static_cast<int>(10 * (variables + constraints) + 10);
  };

  const Stacked hard = stack(pr, true);
  detail::DualActiveSetResult r =
      detail::dual_active_set(llt, pr.gradient, hard.C, hard.b, cap(n, hard.C.rows()));
  out.iterations = r.iterations;
  if (r.feasible) {
    out.z = r.x;
    for (std::size_t i = 0; i < hard.owner.size(); ++i) {
      const double lam = hard.sign[i] * r.multipliers[static_cast<Eigen::Index>(i)];
      if (hard.is_row[i])
        out.row_mult[hard.owner[i]] += lam;
      else
        out.bound_mult[hard.owner[i]] += lam;
    }
    out.status = QpStatus::kOptimal;
    finish(pr, out);
    return out;
  }
  if (m == 0) {
    // Only bounds: an infeasible answer here means the iteration cap was hit.
    out.z = r.x;
    out.status = r.converged ? QpStatus::kOptimal : QpStatus::kIterationLimit;
    finish(pr, out);
    return out;
  }

  // Elastic problem in [z; e], one slack per soft row.
  const int ne = n + m;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(ne, ne);
  H.topLeftCorner(n, n) = pr.hessian;
  H.bottomRightCorner(m, m).diagonal().setConstant(opt.slack_curvature);
  Eigen::VectorXd g(ne);
  g << pr.gradient, Eigen::VectorXd::Constant(m, opt.penalty);

  const Stacked bounds = stack(pr, false);
  const Eigen::Index nb = bounds.C.rows();
  int count = static_cast<int>(nb) + m;
  for (int i = 0; i < m; ++i) count += std::isfinite(pr.row_lower[i]) + std::isfinite(pr.row_upper[i]);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(count, ne);
  Eigen::VectorXd b(count);
  C.topLeftCorner(nb, n) = bounds.C;
  b.head(nb) = bounds.b;
  std::vector<int> row_of(static_cast<std::size_t>(count), -1), sign_of(static_cast<std::size_t>(count), 0);
  Eigen::Index k = nb;
  for (int i = 0; i < m; ++i) {
    C(k, n + i) = 1.0;
    b[k++] = 0.0;
    for (int s : {1, -1}) {
      const double bound = s > 0 ? pr.row_lower[i] : -pr.row_upper[i];
      if (!std::isfinite(bound)) continue;
      C.row(k).head(n) = s * pr.rows.row(i);
      C(k, n + i) = 1.0;
      b[k] = bound;
      row_of[static_cast<std::size_t>(k)] = i;
      sign_of[static_cast<std::size_t>(k)] = s;
      ++k;
    }
  }
  r = detail::dual_active_set(H, g, C, b, cap(ne, count));
  out.iterations += r.iterations;
  out.z = r.x.head(n);
  for (Eigen::Index i = 0; i < nb; ++i)
    out.bound_mult[bounds.owner[static_cast<std::size_t>(i)]] +=
        bounds.sign[static_cast<std::size_t>(i)] * r.multipliers[i];
  for (Eigen::Index i = nb; i < count; ++i)
    if (row_of[static_cast<std::size_t>(i)] >= 0)
      out.row_mult[row_of[static_cast<std::size_t>(i)]] += sign_of[static_cast<std::size_t>(i)] * r.multipliers[i];
  out.status = r.feasible ? QpStatus::kSoftened : QpStatus::kIterationLimit;
  finish(pr, out);
  return out;
}

}  // namespace irw
