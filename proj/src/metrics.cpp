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

#include "irw/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace irw {

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty()) throw std::invalid_argument("rmse of an empty series");
  if (a.size() != b.size()) throw std::invalid_argument("rmse needs series of equal length");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc / static_cast<double>(a.size()));
}

double lag_samples(const std::vector<double>& reference, const std::vector<double>& response,
                   int max_shift) {
  const int n = static_cast<int>(reference.size());
  if (response.size() != reference.size()) throw std::invalid_argument("lag needs series of equal length");
  if (max_shift < 1 || 2 * max_shift >= n) throw std::invalid_argument("lag search window out of range");

  // Correlation coefficient over the overlap, so that neither the overlap
  // length nor the energy of the dropped edges biases the peak.
  auto corr = [&](int s) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (int i = std::max(0, s); i < std::min(n, n + s); ++i) {
      const double a = reference[i - s], b = response[i];
      ab += a * b;
      aa += a * a;
      bb += b * b;
    }
    return aa > 0.0 && bb > 0.0 ? ab / std::sqrt(aa * bb) : 0.0;
  };
  int best = 0;
  double best_val = corr(0);
  for (int s = -max_shift; s <= max_shift; ++s) {
    const double c = corr(s);
    if (c > best_val) {
      best_val = c;
      best = s;
    }
  }
  if (best == -max_shift || best == max_shift) return best;
  const double cm = corr(best - 1), cp = corr(best + 1);
  const double den = cm - 2.0 * best_val + cp;
  return den < 0.0 ? best + 0.5 * (cm - cp) / den : best;
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("percentile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile must lie in [0, 1]");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean of an empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace irw
