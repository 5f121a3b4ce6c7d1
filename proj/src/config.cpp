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

#include "irw/config.hpp"

#include <yaml-cpp/yaml.h>

#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace irw {

namespace {

constexpr std::array<const char*, 6> kChannels{"x", "psi_ax", "xdot", "psidot_ax", "y", "psi_rel"};

// Reads scalars from one mapping and remembers which keys were consumed.
class Section {
 public:
  Section(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_ && !node_.IsMap()) throw ConfigError(path_ + ": expected a mapping");
  }
  ~Section() = default;
  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

  template <typename T>
  void get(const char* key, T& out) {
    used_.insert(key);
    if (!node_ || !node_[key]) return;
    try {
      out = node_[key].as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(path_ + "." + key + ": invalid value");
    }
  }
  YAML::Node child(const char* key) {
    used_.insert(key);
    return node_ ? node_[key] : YAML::Node();
  }
  bool has(const char* key) const { return node_ && node_[key]; }

  /// Throws for keys that were never requested.
  void finish() const {
    if (!node_) return;
    for (const auto& kv : node_) {
      const std::string k = kv.first.as<std::string>();
      if (!used_.count(k)) throw ConfigError(path_ + ": unknown key '" + k + "'");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

TrackShape parse_shape(const std::string& s) {
  if (s == "straight") return TrackShape::kStraight;
  if (s == "curve") return TrackShape::kStraightClothoidCurve;
  throw ConfigError("track.shape: expected straight or curve");
}

void read_track(const YAML::Node& node, ScenarioSpec& spec) {
  if (!node) return;
  if (node.IsScalar()) {
    std::string s = node.as<std::string>();
    if (!s.empty() && (s[0] == 'T' || s[0] == 't')) s = s.substr(1);
    try {
      spec.track_id = std::stoi(s);
    } catch (const std::exception&) {
      throw ConfigError("track: expected 1..5, T1..T5 or a mapping");
    }
    return;
  }
  Section t(node, "track");
  spec.track_id = 0;
  std::string shape = "straight";
  double v_kmh = 0.0;
  t.get("shape", shape);
  t.get("design_speed_kmh", v_kmh);
  t.get("lateral_accel", spec.track.design_lateral_accel);
  t.get("radius", spec.track.curve_radius);
  t.get("lead_in", spec.track.lead_in);
  t.get("clothoid_length", spec.track.clothoid_length);
  t.get("length", spec.track.total_length);
  t.get("gauge", spec.track.gauge);
  t.get("ramp_rate", spec.track.max_ramp_rate);
  t.get("step", spec.track.step);
  t.finish();
  spec.track.shape = parse_shape(shape);
  spec.track.design_velocity = v_kmh / 3.6;
}

AdhesionCurveParams read_curve(Section& s, AdhesionCurveParams base) {
  s.get("f_max", base.f_max);
  s.get("s_peak", base.s_peak);
  s.get("k0", base.k0);
  s.get("shape", base.shape);
  s.get("decay", base.decay);
  return base;
}

AdhesionCurveParams preset_or_throw(const std::string& name) {
  try {
    return AdhesionCurveParams::preset(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("adhesion: ") + e.what());
  }
}

void read_adhesion(const YAML::Node& node, ScenarioSpec& spec) {
  if (!node) return;
  if (node.IsScalar()) {
    spec.adhesion = {{0.0, preset_or_throw(node.as<std::string>())}};
    return;
  }
  if (!node.IsSequence()) throw ConfigError("adhesion: expected a preset name or a list of segments");
  spec.adhesion.clear();
  for (std::size_t i = 0; i < node.size(); ++i) {
    Section s(node[i], "adhesion[" + std::to_string(i) + "]");
    std::string preset = "good";
    AdhesionSchedule::Segment seg;
    s.get("start", seg.start);
    s.get("preset", preset);
    seg.params = read_curve(s, preset_or_throw(preset));
    s.finish();
    spec.adhesion.push_back(seg);
  }
}

void read_mpc(const YAML::Node& node, MpcConfig& m) {
  Section s(node, "mpc");
  s.get("steps", m.steps);
  s.get("step", m.step);
  if (s.has("weights")) {
    const YAML::Node w = s.child("weights");
    if (!w.IsSequence() || w.size() != 6) throw ConfigError("mpc.weights: expected 6 numbers");
    for (std::size_t i = 0; i < 6; ++i) m.state_weight[i] = w[i].as<double>();
  } else {
    (void)s.child("weights");
  }
  s.get("input_weight", m.input_weight);
  s.get("terminal_weight", m.terminal_weight);
  s.get("y_limit", m.y_limit);
  s.get("psi_limit", m.psi_limit);
  s.get("delta_u_limit", m.delta_u_limit);
  s.get("penalty", m.penalty);
  s.get("kkt_tolerance", m.kkt_tolerance);
  s.get("max_iterations", m.max_iterations);
  s.get("preview", m.preview);
  s.finish();
}

void read_vehicle(const YAML::Node& node, VehicleParams& v) {
  Section s(node, "vehicle");
  s.get("m", v.m);
  s.get("m_cb", v.m_cb);
  s.get("j_ax_x", v.j_ax_x);
  s.get("j_ax_z", v.j_ax_z);
  s.get("j_w_x", v.j_w_x);
  s.get("j_w_y", v.j_w_y);
  s.get("j_w_z", v.j_w_z);
  s.get("k_s_x", v.k_s_x);
  s.get("k_s_z", v.k_s_z);
  s.get("k_d_x", v.k_d_x);
  s.get("k_d_z", v.k_d_z);
  s.get("r0", v.r0);
  s.get("delta0", v.delta0);
  s.get("gauge", v.gauge);
  s.get("car_body_length", v.car_body_length);
  s.get("tau_min", v.tau_min);
  s.get("tau_max", v.tau_max);
  s.get("cg_height", v.cg_height);
  s.finish();
}

ScenarioSpec from_node(const YAML::Node& root) {
  if (!root.IsMap()) throw ConfigError("scenario: expected a mapping at the top level");
  ScenarioSpec spec;
  Section top(root, "scenario");
  top.get("name", spec.name);
  top.get("seed", spec.seed);
  read_track(top.child("track"), spec);

  {
    Section r(top.child("run"), "run");
    if (r.has("speed_kmh") && r.has("speed")) throw ConfigError("run: give speed or speed_kmh, not both");
    double kmh = -1.0;
    r.get("speed_kmh", kmh);
    if (kmh >= 0.0) spec.v0 = kmh / 3.6;
    r.get("speed", spec.v0);
    r.get("start", spec.start);
    r.get("distance", spec.distance);
    r.get("duration", spec.duration);
    r.get("hold_speed", spec.hold_speed);
    r.get("min_lateral_speed", spec.min_lateral_speed);
    r.finish();
  }
  {
    Section s(top.child("setpoint"), "setpoint");
    std::string kind = "constant";
    s.get("kind", kind);
    if (kind == "constant") spec.setpoint.kind = SetpointSpec::Kind::kConstant;
    else if (kind == "sine") spec.setpoint.kind = SetpointSpec::Kind::kSine;
    else if (kind == "sweep") spec.setpoint.kind = SetpointSpec::Kind::kSweep;
    else throw ConfigError("setpoint.kind: expected constant, sine or sweep");
    s.get("value", spec.setpoint.value);
    s.get("amplitude", spec.setpoint.amplitude);
    s.get("period", spec.setpoint.period);
    s.get("period_start", spec.setpoint.period_start);
    s.get("period_end", spec.setpoint.period_end);
    s.get("start", spec.setpoint.start);
    s.get("end", spec.setpoint.end);
    s.finish();
  }
  {
    Section s(top.child("demand"), "demand");
    std::string kind = "none";
    s.get("kind", kind);
    if (kind == "none") spec.demand.kind = DemandSpec::Kind::kNone;
    else if (kind == "force") spec.demand.kind = DemandSpec::Kind::kForce;
    else if (kind == "adhesion") spec.demand.kind = DemandSpec::Kind::kAdhesion;
    else throw ConfigError("demand.kind: expected none, force or adhesion");
    s.get("value", spec.demand.value);
    s.get("onset", spec.demand.onset);
    s.finish();
  }
  read_adhesion(top.child("adhesion"), spec);
  {
    Section s(top.child("noise"), "noise");
    s.get("y", spec.noise.y);
    s.get("psi", spec.noise.psi);
    s.get("adhesion", spec.noise.adhesion);
    s.get("slip", spec.noise.slip);
    s.finish();
  }
  {
    std::string c = "nmpc";
    top.get("controller", c);
    if (c == "nmpc") spec.lateral = LateralController::kNmpc;
    else if (c == "ltv") spec.lateral = LateralController::kLtv;
    else if (c == "none") spec.lateral = LateralController::kNone;
    else throw ConfigError("controller: expected nmpc, ltv or none");
  }
  read_mpc(top.child("mpc"), spec.mpc);
  {
    Section s(top.child("adhesion_ctrl"), "adhesion_ctrl");
    s.get("p1", spec.adhesion_ctrl.p1);
    s.get("p2", spec.adhesion_ctrl.p2);
    s.get("p_back", spec.adhesion_ctrl.p_back);
    s.get("tol_f", spec.adhesion_ctrl.tol_f);
    s.get("filter_tc", spec.adhesion_ctrl.filter_tc);
    s.get("deadband", spec.adhesion_ctrl.deadband);
    s.finish();
  }
  {
    Section s(top.child("rates"), "rates");
    s.get("fast", spec.rates.fast_period);
    s.get("slow", spec.rates.slow_period);
    s.get("enforce_deadline", spec.enforce_deadline);
    s.finish();
  }
  read_vehicle(top.child("vehicle"), spec.vehicle);
  top.finish();

  spec.sync();
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return spec;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

YAML::Node parse_yaml(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("YAML syntax: ") + e.what());
  }
}

}  // namespace

ScenarioSpec parse_scenario(const std::string& text) { return from_node(parse_yaml(text)); }

ScenarioSpec load_scenario(const std::string& path) {
  try {
    return parse_scenario(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void apply_parameter(MpcConfig& cfg, const std::string& name, double value) {
  if (name.rfind("weight.", 0) == 0) {
    const std::string ch = name.substr(7);
    for (std::size_t i = 0; i < kChannels.size(); ++i) {
      if (ch == kChannels[i]) {
        cfg.state_weight[i] = value;
        return;
      }
    }
  } else if (name == "input_weight") {
    cfg.input_weight = value;
    return;
  } else if (name == "terminal_weight") {
    cfg.terminal_weight = value;
    return;
  } else if (name == "horizon") {
    cfg.steps = std::max(1, static_cast<int>(std::lround(value / cfg.step)));
    return;
  } else if (name == "step") {
    const double horizon = cfg.horizon();
    cfg.step = value;
    cfg.steps = std::max(1, static_cast<int>(std::lround(horizon / value)));
    return;
  }
  throw ConfigError("unknown design parameter '" + name + "'");
}

double read_parameter(const MpcConfig& cfg, const std::string& name) {
  if (name.rfind("weight.", 0) == 0) {
    const std::string ch = name.substr(7);
    for (std::size_t i = 0; i < kChannels.size(); ++i)
      if (ch == kChannels[i]) return cfg.state_weight[i];
  } else if (name == "input_weight") {
    return cfg.input_weight;
  } else if (name == "terminal_weight") {
    return cfg.terminal_weight;
  } else if (name == "horizon") {
    return cfg.horizon();
  } else if (name == "step") {
    return cfg.step;
  }
  throw ConfigError("unknown design parameter '" + name + "'");
}

std::vector<DesignParameter> parse_design_space(const std::string& text) {
  const YAML::Node root = parse_yaml(text);
  if (!root.IsMap() || root.size() == 0) throw ConfigError("design space: expected a non-empty mapping");
  std::vector<DesignParameter> out;
  const MpcConfig probe;
  for (const auto& kv : root) {
    DesignParameter p;
    p.name = kv.first.as<std::string>();
    (void)read_parameter(probe, p.name);
    if (!kv.second.IsSequence() || kv.second.size() < 2 || kv.second.size() > 3)
      throw ConfigError("design space: '" + p.name + "' needs [lower, upper] or [lower, upper, log]");
    if (kv.second.size() == 3) {
      if (kv.second[2].as<std::string>() != "log")
        throw ConfigError("design space: '" + p.name + "' third entry must be 'log'");
      p.log = true;
    }
    try {
      p.lower = kv.second[0].as<double>();
      p.upper = kv.second[1].as<double>();
    } catch (const YAML::Exception&) {
      throw ConfigError("design space: '" + p.name + "' bounds must be numbers");
    }
    if (!(p.lower < p.upper)) throw ConfigError("design space: '" + p.name + "' needs lower < upper");
    if (p.log && !(p.lower > 0.0)) throw ConfigError("design space: '" + p.name + "' log scale needs lower > 0");
    out.push_back(p);
  }
  return out;
}

std::vector<DesignParameter> load_design_space(const std::string& path) {
  return parse_design_space(read_file(path));
}

}  // namespace irw
