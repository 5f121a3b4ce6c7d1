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

#include <cmath>

namespace oracle {

// a + b e1 + c e2 + d e1 e2 with e1^2 = e2^2 = 0. Exact first and mixed
// second derivatives, no truncation error.
struct HyperDual {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

  HyperDual() = default;
  HyperDual(double v) : a(v) {}  // NOLINT(google-explicit-constructor)
  HyperDual(double a_, double b_, double c_, double d_) : a(a_), b(b_), c(c_), d(d_) {}
};

inline HyperDual operator+(const HyperDual& x, const HyperDual& y) {
  return {x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d};
}
inline HyperDual operator-(const HyperDual& x, const HyperDual& y) {
  return {x.a - y.a, x.b - y.b, x.c - y.c, x.d - y.d};
}
inline HyperDual operator-(const HyperDual& x) { return {-x.a, -x.b, -x.c, -x.d}; }
inline HyperDual operator*(const HyperDual& x, const HyperDual& y) {
  return {x.a * y.a, x.a * y.b + x.b * y.a, x.a * y.c + x.c * y.a,
          x.a * y.d + x.b * y.c + x.c * y.b + x.d * y.a};
}

// Scalar function lift: f(x) with f' and f''.
inline HyperDual lift(const HyperDual& x, double f, double df, double ddf) {
  return {f, df * x.b, df * x.c, df * x.d + ddf * x.b * x.c};
}

inline HyperDual inv(const HyperDual& x) {
  const double i = 1.0 / x.a;
  return lift(x, i, -i * i, 2.0 * i * i * i);
}
inline HyperDual operator/(const HyperDual& x, const HyperDual& y) { return x * inv(y); }

inline HyperDual sin(const HyperDual& x) {
  return lift(x, std::sin(x.a), std::cos(x.a), -std::sin(x.a));
}
inline HyperDual cos(const HyperDual& x) {
  return lift(x, std::cos(x.a), -std::sin(x.a), -std::cos(x.a));
}

}  // namespace oracle
