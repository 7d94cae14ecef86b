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

#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pinnmpc/errors.hpp"
#include "pinnmpc/metrics.hpp"
#include "pinnmpc/mpc.hpp"
#include "pinnmpc/pid.hpp"
#include "pinnmpc/reference.hpp"
#include "pinnmpc/simulator.hpp"

namespace pinnmpc {

/// A feedback law updated at a fixed rate; its output is held until the
/// next update.
class TrackingController {
 public:
  virtual ~TrackingController() = default;
  virtual std::string name() const = 0;
  virtual double rate() const = 0;  // Hz
  virtual void reset() = 0;
  virtual ControlVector update(double t, const State& x, const ReferenceSampler& ref) = 0;
  /// Solver iterations of the last update (0 for non-iterative laws).
  virtual int last_iterations() const { return 0; }
};

class MpcController : public TrackingController {
 public:
  MpcController(std::string name, Predictor predictor, MpcConfig cfg, QuadParams params)
      : name_(std::move(name)), pred_(std::move(predictor)), cfg_(std::move(cfg)),
        params_(std::move(params)) {
    cfg_.validate();
    pred_.check_interval(cfg_.node_dt());
    reset();
  }

  std::string name() const override { return name_; }
  double rate() const override { return cfg_.resolve_rate; }
  void reset() override {
    warm_ = hover_controls(params_, cfg_);
    first_ = true;
  }

  ControlVector update(double t, const State& x, const ReferenceSampler& ref) override {
    std::vector<State> nodes(static_cast<std::size_t>(cfg_.nodes));
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      nodes[i] = ref.at_clamped(t + cfg_.node_dt() * static_cast<double>(i + 1)).state();
    }
    if (!first_) warm_ = shift_controls(warm_, 1.0 / cfg_.resolve_rate, cfg_.node_dt());
    first_ = false;
    last_ = solve(pred_, x, nodes, cfg_, warm_);
    warm_ = last_.controls;
    return last_.controls.front();
  }

  int last_iterations() const override { return last_.iterations; }
  const MpcSolution& last_solution() const { return last_; }
  const Predictor& predictor() const { return pred_; }

 private:
  std::string name_;
  Predictor pred_;
  MpcConfig cfg_;
  QuadParams params_;
  std::vector<ControlVector> warm_;
  MpcSolution last_;
  bool first_ = true;
};

class PidTrackingController : public TrackingController {
 public:
  PidTrackingController(PidConfig cfg, QuadParams params, double rate_hz)
      : pid_(std::move(cfg), std::move(params)), rate_(rate_hz) {
    if (!(rate_ > 0.0)) throw ConfigError("PID rate must be positive");
  }

  std::string name() const override { return "pid"; }
  double rate() const override { return rate_; }
  void reset() override { pid_.reset(); }

  ControlVector update(double t, const State& x, const ReferenceSampler& ref) override {
    const ReferencePoint r = ref.at_clamped(t);
    PidReference pr;
    pr.position = r.position;
    pr.velocity = r.velocity;
    pr.acceleration = r.acceleration;
    return pid_.update(x, pr, 1.0 / rate_).thrust;
  }

 private:
  PidController pid_;
  double rate_;
};

/// Series sampled at every controller update.
struct TrackingResult {
  std::string controller;
  std::vector<double> timestamps;
  PositionSeries reference_positions;
  PositionSeries actual_positions;
  std::vector<State> states;
  std::vector<ControlVector> controls;
  std::vector<double> latencies;  // s, wall time of each update
  std::vector<int> iterations;
  bool diverged = false;

  double position_rmse() const { return rmse(actual_positions, reference_positions); }
  double dtw() const { return dtw_distance(actual_positions, reference_positions); }
};

/// Flies the simulated vehicle from hover at the reference start under
/// `controller` for `duration` seconds. The simulator steps at
/// sim.step (the actuation period); `seed` keys its thrust noise.
inline TrackingResult closed_loop_track(TrackingController& controller, SimConfig sim,
                                        const ReferenceTrajectory& traj,
                                        double duration, std::uint64_t seed) {
  const ReferenceSampler ref(traj);
  if (!(duration > 0.0) || duration > traj.duration + 1e-12) {
    throw ConfigError("tracking duration must lie in (0, trajectory duration]");
  }
  sim.seed = seed;
  Simulator plant(sim, State::hover_at(ref.at(0.0).position));
  controller.reset();
  const double period = 1.0 / controller.rate();
  const long updates = std::lround(duration / period);
  TrackingResult res;
  res.controller = controller.name();
  using clock = std::chrono::steady_clock;
  for (long k = 0; k <= updates; ++k) {
    const double t = std::min(static_cast<double>(k) * period, traj.duration);
    const State x = plant.state();
    const auto t0 = clock::now();
    const ControlVector u = controller.update(t, x, ref);
    const auto t1 = clock::now();
    res.timestamps.push_back(t);
    res.reference_positions.push_back(ref.at(t).position);
    res.actual_positions.push_back(x.p);
    res.states.push_back(x);
    res.controls.push_back(u);
    res.latencies.push_back(std::max(std::chrono::duration<double>(t1 - t0).count(), 1e-12));
    res.iterations.push_back(controller.last_iterations());
    if (k == updates) break;
    if (!plant.advance(u, period)) {
      res.diverged = true;
      break;
    }
  }
  return res;
}

}  // namespace pinnmpc
