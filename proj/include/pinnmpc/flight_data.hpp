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

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pinnmpc/dataset.hpp"
#include "pinnmpc/errors.hpp"
#include "pinnmpc/pid.hpp"
#include "pinnmpc/simulator.hpp"

namespace pinnmpc {

/// Data-collection flight: a PID controller, updated once per horizon,
/// follows smooth segments between random waypoints. Uniform exploration
/// noise is added to the commanded thrusts so the log excites all inputs.
struct FlightDataConfig {
  SimConfig sim;
  PidConfig pid = soft_pid();
  double horizon = 0.1;           // s, control hold and label delay
  double segment_duration = 4.0;  // s between waypoints
  Eigen::Vector3d waypoint_min{-3.0, -3.0, 0.5};
  Eigen::Vector3d waypoint_max{3.0, 3.0, 2.0};
  double excitation = 0.1;  // N, half-width of the thrust perturbation

  /// Gains that stay stable at the 10 Hz update rate.
  static PidConfig soft_pid() {
    PidConfig c;
    c.position_kp = {1.0, 1.0, 2.0};
    c.position_ki = {0.3, 0.3, 0.8};
    c.position_kd = {1.8, 1.8, 2.7};
    c.attitude_kp = {49.0, 49.0, 1.0};
    c.attitude_ki = {16.0, 16.0, 0.0};
    c.attitude_kd = {12.0, 12.0, 1.0};
    return c;
  }

  void validate() const {
    sim.validate();
    pid.validate();
    if (!(horizon > 0.0) || !(segment_duration > 0.0) || !(excitation >= 0.0)) {
      throw ConfigError("flight data timing and excitation must be positive");
    }
    if (!((waypoint_max - waypoint_min).array() >= 0.0).all()) {
      throw ConfigError("waypoint box is empty");
    }
  }
};

/// Thrown when the simulated vehicle leaves the flight volume; carries the
/// samples logged before divergence.
class FlightDataError : public std::runtime_error {
 public:
  FlightDataError(const std::string& what, std::vector<FlightSample> partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const std::vector<FlightSample>& partial() const { return partial_; }

 private:
  std::vector<FlightSample> partial_;
};

namespace detail {

/// Quintic smoothstep between two waypoints: zero velocity and acceleration
/// at both ends.
inline PidReference segment_reference(const Eigen::Vector3d& a,
                                      const Eigen::Vector3d& b, double s,
                                      double duration) {
  const double s2 = s * s, s3 = s2 * s;
  const double pos = s3 * (10.0 - 15.0 * s + 6.0 * s2);
  const double vel = 30.0 * s2 * (1.0 - s) * (1.0 - s) / duration;
  const double acc = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / (duration * duration);
  PidReference r;
  r.position = a + pos * (b - a);
  r.velocity = vel * (b - a);
  r.acceleration = acc * (b - a);
  return r;
}

}  // namespace detail

/// Flies `n` horizons and logs (x_k, u_k, x_{k+1}). Waypoints, exploration
/// noise and the simulator noise are all derived from `seed`.
inline std::vector<FlightSample> collect_flight_data(FlightDataConfig cfg,
                                                     std::size_t n,
                                                     std::uint64_t seed) {
  cfg.sim.seed = seed;
  cfg.validate();
  std::mt19937_64 gen(seed ^ 0x5bd1e9955bd1e995ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto waypoint = [&] {
    Eigen::Vector3d w;
    for (int i = 0; i < 3; ++i) {
      w[i] = cfg.waypoint_min[i] + (cfg.waypoint_max[i] - cfg.waypoint_min[i]) * unit(gen);
    }
    return w;
  };
  Eigen::Vector3d from = waypoint();
  Eigen::Vector3d to = waypoint();
  Simulator sim(cfg.sim, State::hover_at(from));
  PidController pid(cfg.pid, cfg.sim.params);

  std::vector<FlightSample> samples;
  samples.reserve(n);
  double seg_t = 0.0;
  while (samples.size() < n) {
    if (seg_t >= cfg.segment_duration - 1e-12) {
      seg_t -= cfg.segment_duration;
      from = to;
      to = waypoint();
    }
    const PidReference ref =
        detail::segment_reference(from, to, seg_t / cfg.segment_duration,
                                  cfg.segment_duration);
    FlightSample s;
    s.x = sim.state();
    s.u = pid.update(s.x, ref, cfg.horizon);
    for (int i = 0; i < kControlDim; ++i) {
      s.u.thrust[i] += cfg.excitation * (2.0 * unit(gen) - 1.0);
    }
    s.u.thrust = s.u.thrust.cwiseMax(0.0).cwiseMin(cfg.sim.params.thrust_max_per_rotor);
    if (!sim.advance(s.u.thrust, cfg.horizon)) {
      throw FlightDataError("simulator diverged after " +
                                std::to_string(samples.size()) + " samples",
                            std::move(samples));
    }
    s.y = sim.state();
    samples.push_back(s);
    seg_t += cfg.horizon;
  }
  return samples;
}

}  // namespace pinnmpc
