// Copyright 2026 The pinnmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Experiment configuration: one JSON document with a section per module.
// Missing keys keep their defaults; unknown keys are rejected so typos
// cannot silently fall back to defaults.

#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pinnmpc/dataset.hpp"
#include "pinnmpc/flight_data.hpp"
#include "pinnmpc/losses.hpp"
#include "pinnmpc/mpc.hpp"
#include "pinnmpc/pid.hpp"
#include "pinnmpc/reference.hpp"
#include "pinnmpc/trainer.hpp"

namespace pinnmpc {

inline constexpr const char* kVersion = "pinnmpc 0.1.0";

using Json = nlohmann::json;

/// Flight-to-collocation ratio |D| : |P| = num : den.
struct Skew {
  std::uint64_t num = 1;
  std::uint64_t den = 1;

  std::string label() const { return std::to_string(num) + "-" + std::to_string(den); }
  bool operator==(const Skew&) const = default;
};

struct DatasetSpec {
  std::size_t total_points = 5000;
  std::vector<Skew> skews{{1, 1}};
  double horizon = 0.1;  // s, network interval and MPC node length
  SamplingRanges sampling;
  double segment_duration = 4.0;
  double excitation = 0.1;
  Eigen::Vector3d waypoint_min{-3.0, -3.0, 0.5};
  Eigen::Vector3d waypoint_max{3.0, 3.0, 2.0};
  PidConfig data_pid = FlightDataConfig::soft_pid();
  /// Flight samples reserved for comparing models trained on any skew.
  std::size_t holdout_samples = 500;
};

struct NetworkSpec {
  std::vector<int> layer_sizes = Network::default_layer_sizes();
  /// Output is the input state plus a learned increment.
  bool state_passthrough = true;
  /// Input scale for the position components; 0 fits it from the data.
  double position_input_scale = 0.0;
};

struct TrainSpec {
  TrainConfig config;
  ResidualMode residual = ResidualMode::literal;
  /// Measures each state component in units of its output scale.
  bool normalize_components = true;
};

struct PidSpec {
  PidConfig gains;
  double rate = 50.0;  // Hz
};

struct BenchSpec {
  int warmup = 20;
  int trials = 200;
  int steps = 500;  // integrator steps per horizon
};

/// Every random draw in an experiment derives from one of these.
struct Seeds {
  std::uint64_t dataset = 1;
  std::uint64_t init = 2;
  std::uint64_t simulation = 3;
};

struct ExperimentConfig {
  QuadParams quad;
  DisturbanceConfig disturbance;
  UncertaintyConfig uncertainty;  // seed comes from seeds.dataset
  DatasetSpec dataset;
  NetworkSpec network;
  TrainSpec train;
  MpcConfig mpc;
  IntegratorSpec predictor = Predictor::rk4_spec();
  PidSpec pid;
  std::vector<ReferenceTrajectory> trajectories = default_trajectories();
  std::vector<std::string> controllers{"ideal", "nominal", "pid", "ramp-net"};
  Seeds seeds;
  BenchSpec bench;
  std::string output_dir = "runs/default";

  static std::vector<ReferenceTrajectory> default_trajectories() {
    std::vector<ReferenceTrajectory> out;
    for (double r : {3.0, 4.0}) {
      ReferenceTrajectory t;
      t.radius = r;
      out.push_back(t);
    }
    return out;
  }

  SimConfig sim_config() const {
    SimConfig s;
    s.params = quad;
    s.disturbance = disturbance;
    s.step = 1.0 / mpc.actuation_rate;
    s.seed = seeds.simulation;
    return s;
  }

  FlightDataConfig flight_config() const {
    FlightDataConfig f;
    f.sim = sim_config();
    f.pid = dataset.data_pid;
    f.horizon = dataset.horizon;
    f.segment_duration = dataset.segment_duration;
    f.excitation = dataset.excitation;
    f.waypoint_min = dataset.waypoint_min;
    f.waypoint_max = dataset.waypoint_max;
    return f;
  }

  UncertaintyConfig uncertainty_config() const {
    UncertaintyConfig u = uncertainty;
    u.seed = seeds.dataset;
    return u;
  }

  void validate() const {
    quad.validate();
    disturbance.validate();
    uncertainty.validate();
    if (dataset.total_points < 2) throw ConfigError("dataset.total_points must be >= 2");
    if (dataset.skews.empty()) throw ConfigError("dataset.skews must not be empty");
    for (const auto& s : dataset.skews) split_counts(dataset.total_points, s.num, s.den);
    dataset.sampling.validate();
    flight_config().validate();
    if (dataset.holdout_samples < 1) throw ConfigError("dataset.holdout_samples must be >= 1");
    if (network.layer_sizes.size() < 2 || network.layer_sizes.front() != kNetworkInputs ||
        network.layer_sizes.back() != kStateDim) {
      throw ConfigError("network.layer_sizes must map 18 inputs to 13 outputs");
    }
    if (!(network.position_input_scale >= 0.0)) {
      throw ConfigError("network.position_input_scale must be >= 0");
    }
    train.config.validate();
    mpc.validate();
    if (std::abs(mpc.node_dt() - dataset.horizon) > 1e-12) {
      throw ConfigError("mpc node interval must equal dataset.horizon");
    }
    predictor.validate();
    pid.gains.validate();
    if (!(pid.rate > 0.0)) throw ConfigError("pid.rate must be positive");
    if (trajectories.empty()) throw ConfigError("at least one trajectory is required");
    for (const auto& t : trajectories) t.validate();
    if (controllers.empty()) throw ConfigError("at least one controller is required");
    for (const auto& c : controllers) {
      if (c != "ideal" && c != "nominal" && c != "pid" && c != "ramp-net") {
        throw ConfigError("unknown controller '" + c + "'");
      }
    }
    if (bench.trials < 1 || bench.warmup < 0 || bench.steps < 1) {
      throw ConfigError("bench needs trials >= 1, warmup >= 0, steps >= 1");
    }
  }
};

namespace detail {

template <class Derived>
Json vec_json(const Eigen::MatrixBase<Derived>& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

template <class T>
void read(const Json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->template get<T>();
}

template <int N>
void read_vec(const Json& j, const char* key, Eigen::Matrix<double, N, 1>& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_array() || it->size() != static_cast<std::size_t>(N)) {
    throw ConfigError(std::string("'") + key + "' must be an array of " +
                      std::to_string(N) + " numbers");
  }
  for (int i = 0; i < N; ++i) out[i] = (*it)[static_cast<std::size_t>(i)].get<double>();
}

inline Json pid_json(const PidConfig& p) {
  return {{"position_kp", vec_json(p.position_kp)},
          {"position_ki", vec_json(p.position_ki)},
          {"position_kd", vec_json(p.position_kd)},
          {"attitude_kp", vec_json(p.attitude_kp)},
          {"attitude_ki", vec_json(p.attitude_ki)},
          {"attitude_kd", vec_json(p.attitude_kd)},
          {"position_integral_clamp", p.position_integral_clamp},
          {"attitude_integral_clamp", p.attitude_integral_clamp},
          {"max_tilt", p.max_tilt},
          {"max_yaw_differential", p.max_yaw_differential},
          {"acceleration_feedforward", p.acceleration_feedforward}};
}

inline void pid_from(const Json& j, PidConfig& p) {
  read_vec(j, "position_kp", p.position_kp);
  read_vec(j, "position_ki", p.position_ki);
  read_vec(j, "position_kd", p.position_kd);
  read_vec(j, "attitude_kp", p.attitude_kp);
  read_vec(j, "attitude_ki", p.attitude_ki);
  read_vec(j, "attitude_kd", p.attitude_kd);
  read(j, "position_integral_clamp", p.position_integral_clamp);
  read(j, "attitude_integral_clamp", p.attitude_integral_clamp);
  read(j, "max_tilt", p.max_tilt);
  read(j, "max_yaw_differential", p.max_yaw_differential);
  read(j, "acceleration_feedforward", p.acceleration_feedforward);
}

inline Json trajectory_json(const ReferenceTrajectory& t) {
  return {{"shape", shape_name(t.shape)}, {"radius", t.radius}, {"v_max", t.v_max},
          {"height", t.height},           {"duration", t.duration},
          {"ramp_time", t.ramp_time},     {"seed", t.seed}};
}

inline ReferenceTrajectory trajectory_from(const Json& j) {
  ReferenceTrajectory t;
  std::string shape = shape_name(t.shape);
  read(j, "shape", shape);
  t.shape = parse_shape(shape);
  read(j, "radius", t.radius);
  read(j, "v_max", t.v_max);
  read(j, "height", t.height);
  read(j, "duration", t.duration);
  read(j, "ramp_time", t.ramp_time);
  read(j, "seed", t.seed);
  return t;
}

/// Every key of `user` must exist in `reference`; arrays of objects are
/// checked against the first reference element.
inline void check_keys(const Json& user, const Json& reference, const std::string& path) {
  if (user.is_object() && reference.is_object()) {
    for (const auto& [key, value] : user.items()) {
      auto it = reference.find(key);
      if (it == reference.end()) {
        throw ConfigError("unknown config key '" + path + key + "'");
      }
      check_keys(value, *it, path + key + ".");
    }
  } else if (user.is_array() && reference.is_array() && !reference.empty() &&
             reference.front().is_object()) {
    for (const auto& e : user) check_keys(e, reference.front(), path);
  }
}

}  // namespace detail

inline Json to_json(const ExperimentConfig& c) {
  Json skews = Json::array();
  for (const auto& s : c.dataset.skews) skews.push_back({{"num", s.num}, {"den", s.den}});
  Json trajectories = Json::array();
  for (const auto& t : c.trajectories) trajectories.push_back(detail::trajectory_json(t));
  const auto& s = c.dataset.sampling;
  const auto& tc = c.train.config;
  return {
      {"quad",
       {{"mass", c.quad.mass},
        {"arm_length", c.quad.arm_length},
        {"inertia_diag", detail::vec_json(c.quad.inertia_diag)},
        {"k_drag", c.quad.k_drag},
        {"max_rotor_speed", c.quad.max_rotor_speed},
        {"thrust_max_per_rotor", c.quad.thrust_max_per_rotor},
        {"gravity", detail::vec_json(c.quad.gravity)}}},
      {"disturbance",
       {{"thrust_noise_std", c.disturbance.thrust_noise_std},
        {"drag_coeff_linear", c.disturbance.drag_coeff_linear},
        {"drag_coeff_quadratic", c.disturbance.drag_coeff_quadratic},
        {"motor_bias", detail::vec_json(c.disturbance.motor_bias)},
        {"noise_enabled", c.disturbance.noise_enabled},
        {"drag_enabled", c.disturbance.drag_enabled},
        {"bias_enabled", c.disturbance.bias_enabled}}},
      {"uncertainty",
       {{"mean", detail::vec_json(c.uncertainty.mean)},
        {"std_diag", detail::vec_json(c.uncertainty.std_diag)}}},
      {"dataset",
       {{"total_points", c.dataset.total_points},
        {"skews", skews},
        {"horizon", c.dataset.horizon},
        {"sampling",
         {{"position_min", detail::vec_json(s.position_min)},
          {"position_max", detail::vec_json(s.position_max)},
          {"max_attitude_angle", s.max_attitude_angle},
          {"velocity_max", detail::vec_json(s.velocity_max)},
          {"omega_max", detail::vec_json(s.omega_max)},
          {"thrust_min", s.thrust_min},
          {"thrust_max", s.thrust_max}}},
        {"segment_duration", c.dataset.segment_duration},
        {"excitation", c.dataset.excitation},
        {"waypoint_min", detail::vec_json(c.dataset.waypoint_min)},
        {"waypoint_max", detail::vec_json(c.dataset.waypoint_max)},
        {"data_pid", detail::pid_json(c.dataset.data_pid)},
        {"holdout_samples", c.dataset.holdout_samples}}},
      {"network",
       {{"layer_sizes", c.network.layer_sizes},
        {"state_passthrough", c.network.state_passthrough},
        {"position_input_scale", c.network.position_input_scale}}},
      {"train",
       {{"max_epochs", tc.max_epochs},
        {"patience", tc.patience},
        {"optimizer", optimizer_name(tc.optimizer)},
        {"history_size", tc.history_size},
        {"learning_rate", tc.learning_rate},
        {"loss_weights",
         {{"physics", tc.loss_weights.physics},
          {"data", tc.loss_weights.data},
          {"ic", tc.loss_weights.ic}}},
        {"validation_fraction", tc.validation_fraction},
        {"residual", residual_mode_name(c.train.residual)},
        {"normalize_components", c.train.normalize_components}}},
      {"mpc",
       {{"horizon", c.mpc.horizon},
        {"nodes", c.mpc.nodes},
        {"q_diag", detail::vec_json(c.mpc.q_diag)},
        {"r_diag", detail::vec_json(c.mpc.r_diag)},
        {"u_ref", detail::vec_json(c.mpc.u_ref)},
        {"max_iterations", c.mpc.max_iterations},
        {"gradient_tolerance", c.mpc.gradient_tolerance},
        {"thrust_min", c.mpc.thrust_min},
        {"thrust_max", c.mpc.thrust_max},
        {"resolve_rate", c.mpc.resolve_rate},
        {"actuation_rate", c.mpc.actuation_rate},
        {"fd_step", c.mpc.fd_step}}},
      {"predictor",
       {{"scheme", scheme_name(c.predictor.scheme)},
        {"step", c.predictor.step},
        {"rel_tol", c.predictor.rel_tol},
        {"abs_tol", c.predictor.abs_tol}}},
      {"pid", {{"gains", detail::pid_json(c.pid.gains)}, {"rate", c.pid.rate}}},
      {"trajectories", trajectories},
      {"controllers", c.controllers},
      {"seeds",
       {{"dataset", c.seeds.dataset},
        {"init", c.seeds.init},
        {"simulation", c.seeds.simulation}}},
      {"bench",
       {{"warmup", c.bench.warmup}, {"trials", c.bench.trials}, {"steps", c.bench.steps}}},
      {"output_dir", c.output_dir}};
}

/// Reads a config; absent keys keep the defaults.
inline ExperimentConfig config_from_json(const Json& j) {
  using detail::read;
  using detail::read_vec;
  ExperimentConfig c;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  detail::check_keys(j, to_json(c), "");
  const Json empty = Json::object();
  auto section = [&](const Json& parent, const char* key) -> const Json& {
    auto it = parent.find(key);
    return it == parent.end() ? empty : *it;
  };
  try {
    const Json& q = section(j, "quad");
    read(q, "mass", c.quad.mass);
    read(q, "arm_length", c.quad.arm_length);
    read_vec(q, "inertia_diag", c.quad.inertia_diag);
    read(q, "k_drag", c.quad.k_drag);
    read(q, "max_rotor_speed", c.quad.max_rotor_speed);
    read(q, "thrust_max_per_rotor", c.quad.thrust_max_per_rotor);
    read_vec(q, "gravity", c.quad.gravity);

    const Json& d = section(j, "disturbance");
    read(d, "thrust_noise_std", c.disturbance.thrust_noise_std);
    read(d, "drag_coeff_linear", c.disturbance.drag_coeff_linear);
    read(d, "drag_coeff_quadratic", c.disturbance.drag_coeff_quadratic);
    read_vec(d, "motor_bias", c.disturbance.motor_bias);
    read(d, "noise_enabled", c.disturbance.noise_enabled);
    read(d, "drag_enabled", c.disturbance.drag_enabled);
    read(d, "bias_enabled", c.disturbance.bias_enabled);

    const Json& u = section(j, "uncertainty");
    read_vec(u, "mean", c.uncertainty.mean);
    read_vec(u, "std_diag", c.uncertainty.std_diag);

    const Json& ds = section(j, "dataset");
    read(ds, "total_points", c.dataset.total_points);
    if (auto it = ds.find("skews"); it != ds.end()) {
      c.dataset.skews.clear();
      for (const auto& s : *it) {
        Skew k;
        read(s, "num", k.num);
        read(s, "den", k.den);
        c.dataset.skews.push_back(k);
      }
    }
    read(ds, "horizon", c.dataset.horizon);
    const Json& sr = section(ds, "sampling");
    auto& s = c.dataset.sampling;
    read_vec(sr, "position_min", s.position_min);
    read_vec(sr, "position_max", s.position_max);
    read(sr, "max_attitude_angle", s.max_attitude_angle);
    read_vec(sr, "velocity_max", s.velocity_max);
    read_vec(sr, "omega_max", s.omega_max);
    read(sr, "thrust_min", s.thrust_min);
    read(sr, "thrust_max", s.thrust_max);
    read(ds, "segment_duration", c.dataset.segment_duration);
    read(ds, "excitation", c.dataset.excitation);
    read_vec(ds, "waypoint_min", c.dataset.waypoint_min);
    read_vec(ds, "waypoint_max", c.dataset.waypoint_max);
    detail::pid_from(section(ds, "data_pid"), c.dataset.data_pid);
    read(ds, "holdout_samples", c.dataset.holdout_samples);

    const Json& n = section(j, "network");
    read(n, "layer_sizes", c.network.layer_sizes);
    read(n, "state_passthrough", c.network.state_passthrough);
    read(n, "position_input_scale", c.network.position_input_scale);

    const Json& t = section(j, "train");
    auto& tc = c.train.config;
    read(t, "max_epochs", tc.max_epochs);
    read(t, "patience", tc.patience);
    if (auto it = t.find("optimizer"); it != t.end()) {
      tc.optimizer = parse_optimizer(it->get<std::string>());
    }
    read(t, "history_size", tc.history_size);
    read(t, "learning_rate", tc.learning_rate);
    const Json& lw = section(t, "loss_weights");
    read(lw, "physics", tc.loss_weights.physics);
    read(lw, "data", tc.loss_weights.data);
    read(lw, "ic", tc.loss_weights.ic);
    read(t, "validation_fraction", tc.validation_fraction);
    if (auto it = t.find("residual"); it != t.end()) {
      c.train.residual = parse_residual_mode(it->get<std::string>());
    }
    read(t, "normalize_components", c.train.normalize_components);

    const Json& m = section(j, "mpc");
    read(m, "horizon", c.mpc.horizon);
    read(m, "nodes", c.mpc.nodes);
    read_vec(m, "q_diag", c.mpc.q_diag);
    read_vec(m, "r_diag", c.mpc.r_diag);
    read_vec(m, "u_ref", c.mpc.u_ref);
    read(m, "max_iterations", c.mpc.max_iterations);
    read(m, "gradient_tolerance", c.mpc.gradient_tolerance);
    read(m, "thrust_min", c.mpc.thrust_min);
    read(m, "thrust_max", c.mpc.thrust_max);
    read(m, "resolve_rate", c.mpc.resolve_rate);
    read(m, "actuation_rate", c.mpc.actuation_rate);
    read(m, "fd_step", c.mpc.fd_step);

    const Json& p = section(j, "predictor");
    if (auto it = p.find("scheme"); it != p.end()) {
      c.predictor.scheme = parse_scheme(it->get<std::string>());
    }
    read(p, "step", c.predictor.step);
    read(p, "rel_tol", c.predictor.rel_tol);
    read(p, "abs_tol", c.predictor.abs_tol);

    const Json& pid = section(j, "pid");
    detail::pid_from(section(pid, "gains"), c.pid.gains);
    read(pid, "rate", c.pid.rate);

    if (auto it = j.find("trajectories"); it != j.end()) {
      c.trajectories.clear();
      for (const auto& e : *it) c.trajectories.push_back(detail::trajectory_from(e));
    }
    read(j, "controllers", c.controllers);

    const Json& sd = section(j, "seeds");
    read(sd, "dataset", c.seeds.dataset);
    read(sd, "init", c.seeds.init);
    read(sd, "simulation", c.seeds.simulation);

    const Json& b = section(j, "bench");
    read(b, "warmup", c.bench.warmup);
    read(b, "trials", c.bench.trials);
    read(b, "steps", c.bench.steps);
    read(j, "output_dir", c.output_dir);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config type error: ") + e.what());
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path);
  Json j;
  try {
    j = Json::parse(is, nullptr, true, /*ignore_comments=*/true);
  } catch (const Json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

/// FNV-1a over the canonical JSON form, excluding the output directory so
/// a run can be moved without changing its identity.
inline std::string config_hash(const ExperimentConfig& c) {
  Json j = to_json(c);
  j.erase("output_dir");
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// "name=value" override of one named seed.
inline void apply_seed_override(ExperimentConfig& c, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) throw ConfigError("seed override must look like name=value");
  const std::string name = spec.substr(0, eq);
  std::uint64_t value = 0;
  try {
    std::size_t used = 0;
    value = std::stoull(spec.substr(eq + 1), &used);
    if (used != spec.size() - eq - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ConfigError("seed override '" + spec + "' has a non-integer value");
  }
  if (name == "dataset") c.seeds.dataset = value;
  else if (name == "init") c.seeds.init = value;
  else if (name == "simulation") c.seeds.simulation = value;
  else throw ConfigError("unknown seed '" + name + "' (dataset, init, simulation)");
}

/// Shrinks an experiment to a quick end-to-end check.
inline void apply_smoke(ExperimentConfig& c) {
  c.dataset.total_points = 500;
  c.dataset.holdout_samples = 100;
  c.train.config.max_epochs = 50;
  c.train.config.patience = 25;
  for (auto& t : c.trajectories) t.duration = std::min(t.duration, 2.0);
  c.bench.warmup = 2;
  c.bench.trials = 20;
}

}  // namespace pinnmpc
