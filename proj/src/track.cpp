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

#include "irw/track.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace irw {

namespace {

// Linear interpolation error of a quadratic with second derivative c over a
// step h is c*h^2/8.
constexpr double kPsiInterpolationBound = 1e-7;

TrackKnot lerp(const TrackKnot& a, const TrackKnot& b, double p) {
  const double w = (b.p > a.p) ? (p - a.p) / (b.p - a.p) : 0.0;
  auto mix = [w](double x, double y) { return x + w * (y - x); };
  return TrackKnot{p,
                   mix(a.psi, b.psi),
                   mix(a.dpsi_dp, b.dpsi_dp),
                   mix(a.phi, b.phi),
                   mix(a.dphi_dp, b.dphi_dp),
                   mix(a.eps, b.eps),
                   mix(a.deps_dp, b.deps_dp)};
}

}  // namespace

TrackGeometry::TrackGeometry(std::vector<TrackKnot> knots, double gauge)
    : knots_(std::move(knots)), gauge_(gauge) {
  if (knots_.size() < 2) throw std::invalid_argument("track needs at least two knots");
  if (gauge_ <= 0.0) throw std::invalid_argument("gauge must be positive");
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i].p > knots_[i - 1].p))
      throw std::invalid_argument("track knots must be strictly increasing in p");
  }
}

std::size_t TrackGeometry::segment(double p) const {
  // Index i such that knots_[i].p <= p <= knots_[i+1].p.
  auto it = std::upper_bound(knots_.begin(), knots_.end(), p,
                             [](double v, const TrackKnot& k) { return v < k.p; });
  std::size_t i = (it == knots_.begin()) ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
  return std::min(i, knots_.size() - 2);
}

TrackKnot TrackGeometry::at(double p) const {
  const std::size_t i = segment(p);
  return lerp(knots_[i], knots_[i + 1], p);
}

TrackSample TrackGeometry::sample(double p, double xdot) const {
  constexpr double kSlack = 1e-9;
  if (!(p >= -kSlack && p <= total_length() + kSlack))
    throw std::out_of_range("track position " + std::to_string(p) + " outside [0, " +
                            std::to_string(total_length()) + "]");
  const TrackKnot k = at(std::clamp(p, 0.0, total_length()));
  return TrackSample{k.psi, k.dpsi_dp * xdot, k.phi, k.dphi_dp * xdot, k.eps, k.deps_dp * xdot};
}

TrackLocal TrackGeometry::local(double p, double car_body_length) const {
  const double pf = std::clamp(p, 0.0, total_length());
  const std::size_t i = segment(pf);
  const TrackKnot& a = knots_[i];
  const TrackKnot& b = knots_[i + 1];
  const TrackKnot k = lerp(a, b, pf);
  const double h = b.p - a.p;

  const double pr = std::clamp(p - car_body_length, 0.0, total_length());
  const TrackKnot rear = at(pr);

  TrackLocal out;
  out.psi = k.psi;
  out.kappa = k.dpsi_dp;
  out.dkappa = (b.dpsi_dp - a.dpsi_dp) / h;
  out.phi = k.phi;
  out.dphi = k.dphi_dp;
  out.ddphi = (b.dphi_dp - a.dphi_dp) / h;
  out.psi_rear = rear.psi;
  out.kappa_rear = rear.dpsi_dp;
  return out;
}

void TrackGeometry::write_csv(std::ostream& os) const {
  os << "p,psi,dpsi_dp,phi,dphi_dp,eps,deps_dp\n";
  os.precision(12);
  for (const auto& k : knots_) {
    os << k.p << ',' << k.psi << ',' << k.dpsi_dp << ',' << k.phi << ',' << k.dphi_dp << ','
       << k.eps << ',' << k.deps_dp << '\n';
  }
}

double superelevation_angle(double v, double radius, double lateral_accel) {
  const double centripetal =
      (radius > 0.0 && std::isfinite(radius)) ? v * v / radius : 0.0;
  const double arg = (centripetal - lateral_accel) / kGravity;
  if (!(arg >= -1.0 && arg <= 1.0))
    throw std::domain_error("superelevation: (v^2/R - a)/g outside [-1, 1]");
  return std::asin(arg);
}

double superelevation_from_design(double v, double radius, double lateral_accel, double gauge) {
  // Rail height difference across the gauge.
  return gauge * std::sin(superelevation_angle(v, radius, lateral_accel));
}

double default_clothoid_length(const TrackSpec& spec) {
  constexpr double kMinimum = 20.0;
  if (spec.shape == TrackShape::kStraight) return 0.0;
  const double lsup = std::abs(
      superelevation_from_design(spec.design_velocity, spec.curve_radius,
                                 spec.design_lateral_accel, spec.gauge));
  const double ramp_time = lsup / spec.max_ramp_rate;
  return std::max(kMinimum, ramp_time * spec.design_velocity);
}

TrackGeometry build_track(const TrackSpec& spec) {
  if (spec.total_length <= 0.0 || spec.step <= 0.0)
    throw std::invalid_argument("track lengths must be positive");

  std::vector<TrackKnot> knots;
  auto add_uniform = [&](double p0, double p1, double step, auto&& eval) {
    const int n = std::max(1, static_cast<int>(std::ceil((p1 - p0) / step - 1e-9)));
    for (int i = knots.empty() ? 0 : 1; i <= n; ++i) {
      const double p = (i == n) ? p1 : p0 + (p1 - p0) * static_cast<double>(i) / n;
      knots.push_back(eval(p));
    }
  };

  if (spec.shape == TrackShape::kStraight) {
    add_uniform(0.0, spec.total_length, spec.step, [](double p) { return TrackKnot{p}; });
    return TrackGeometry(std::move(knots), spec.gauge);
  }

  if (spec.curve_radius <= 0.0) throw std::invalid_argument("curve radius must be positive");
  if (spec.lead_in <= 0.0) throw std::invalid_argument("lead-in length must be positive");
  const double radius = spec.curve_radius;
  const double lc = spec.clothoid_length > 0.0 ? spec.clothoid_length
                                               : default_clothoid_length(spec);
  const double l0 = spec.lead_in;
  if (l0 + lc >= spec.total_length)
    throw std::invalid_argument("track too short for lead-in and clothoid");
  const double phi_end =
      superelevation_angle(spec.design_velocity, radius, spec.design_lateral_accel);

  // Clothoid yaw is quadratic in p; bound the step so linear interpolation
  // stays below the yaw error budget.
  const double clothoid_step =
      std::min(spec.step, 0.9 * std::sqrt(8.0 * kPsiInterpolationBound * radius * lc));

  auto eval = [=](double p) {
    TrackKnot k{p};
    if (p <= l0) return k;
    if (p <= l0 + lc) {
      const double u = p - l0;
      k.psi = u * u / (2.0 * radius * lc);
      k.dpsi_dp = u / (radius * lc);
      k.phi = phi_end * u / lc;
      k.dphi_dp = phi_end / lc;
      return k;
    }
    const double u = p - l0 - lc;
    k.psi = lc / (2.0 * radius) + u / radius;
    k.dpsi_dp = 1.0 / radius;
    k.phi = phi_end;
    return k;
  };

  add_uniform(0.0, l0, spec.step, eval);
  add_uniform(l0, l0 + lc, clothoid_step, eval);
  add_uniform(l0 + lc, spec.total_length, spec.step, eval);

  // The superelevation rate jumps at both clothoid ends; the boundary knots
  // carry the mean of the one-sided values.
  for (auto& k : knots) {
    if (k.p == l0 || k.p == l0 + lc) k.dphi_dp = 0.5 * phi_end / lc;
  }
  return TrackGeometry(std::move(knots), spec.gauge);
}

TrackSpec evaluation_track(int index, double total_length) {
  struct Row {
    double v_kmh, a, radius;
  };
  static constexpr Row kRows[] = {
      {40.0, 0.0, 175.0}, {160.0, 0.2167, 1500.0}, {280.0, 0.4333, 4250.0}, {400.0, 0.65, 8500.0}};

  TrackSpec spec;
  spec.total_length = total_length;
  if (index == 5) {
    spec.shape = TrackShape::kStraight;
    return spec;
  }
  if (index < 1 || index > 4) throw std::invalid_argument("evaluation track index must be 1..5");
  const Row& r = kRows[index - 1];
  spec.shape = TrackShape::kStraightClothoidCurve;
  spec.design_velocity = r.v_kmh / 3.6;
  spec.design_lateral_accel = r.a;
  spec.curve_radius = r.radius;
  return spec;
}

std::pair<double, double> car_body_yaw(const TrackGeometry& track, double p, double xdot,
                                       double car_body_length) {
  const TrackSample front = track.sample(p, xdot);
  const TrackSample rear = track.sample(std::max(0.0, p - car_body_length), xdot);
  return {0.5 * (front.psi + rear.psi), 0.5 * (front.psi_rate + rear.psi_rate)};
}

FrameRotations frame_rotations(const TrackSample& sample, double psi_track_axle,
                               double phi_track_axle) {
  auto rot_z = [](double a) {
    Eigen::Matrix3d r;
    r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
    return r;
  };
  auto rot_y = [](double a) {
    Eigen::Matrix3d r;
    r << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
    return r;
  };
  auto rot_x = [](double a) {
    Eigen::Matrix3d r;
    r << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
    return r;
  };
  return FrameRotations{rot_z(sample.psi) * rot_y(sample.eps) * rot_x(sample.phi),
                        rot_z(psi_track_axle) * rot_x(phi_track_axle)};
}

}  // namespace irw
