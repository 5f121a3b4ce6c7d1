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

#include <vector>

namespace irw {

/// Root mean square of a - b. Throws std::invalid_argument for empty or
/// unequal series.
double rmse(const std::vector<double>& a, const std::vector<double>& b);

/// Shift of `response` against `reference` in samples, positive when the
/// response lags. Found as the cross-correlation peak within +-max_shift and
/// refined by a parabola through the peak and its neighbours. Both series
/// share one uniform grid. Throws std::invalid_argument for unequal lengths
/// or max_shift outside [1, n/2).
double lag_samples(const std::vector<double>& reference, const std::vector<double>& response,
                   int max_shift);

/// Linear-interpolated quantile, q in [0, 1]. Throws for an empty sample.
double percentile(std::vector<double> values, double q);

double mean(const std::vector<double>& values);

}  // namespace irw
