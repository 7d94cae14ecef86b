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

#include <cmath>
#include <cstdint>

#include "pinnmpc/errors.hpp"
#include "pinnmpc/integrators.hpp"
#include "pinnmpc/quad_dynamics.hpp"

namespace pinnmpc {

struct SimConfig {
  QuadParams params;
  DisturbanceConfig disturbance;
  double step = 0.002;  // s, fixed RK4 step
  std::uint64_t seed = 0;
  double divergence_limit = 100.0;  // m, distance from the origin

  void validate() const {
    params.validate();
    disturbance.validate();
    if (!(step > 0.0)) throw ConfigError("simulator step must be positive");
    if (!(divergence_limit > 0.0)) {
      throw ConfigError("divergence limit must be positive");
    }
  }
};

/// Disturbed plant stepped with RK4. Thrust noise is held constant within a
/// step and keyed by (seed, step index), so runs are reproducible and two
/// simulators with the same seed see the same noise sequence.
class Simulator {
 public:
  Simulator(SimConfig cfg, const State& x0) : cfg_(std::move(cfg)), x_(x0) {
    cfg_.validate();
    require_valid_state(x0);
  }

  const State& state() const { return x_; }
  double time() const { return static_cast<double>(steps_) * cfg_.step; }
  std::uint64_t step_index() const { return steps_; }
  const SimConfig& config() const { return cfg_; }

  bool diverged() const {
    return !x_.to_vector().allFinite() || x_.p.norm() > cfg_.divergence_limit;
  }

  /// One step under commanded thrusts (clamped to the rotor limits).
  void step(const ControlVector& thrust) {
    const ControlVector u =
        thrust.cwiseMax(0.0).cwiseMin(cfg_.params.thrust_max_per_rotor);
    const TrueModel model{cfg_.params, cfg_.disturbance, RngKey{cfg_.seed, steps_}};
    const auto rhs = detail::held_control_rhs(model, u);
    StateVector z = ode::rk4(rhs, x_.to_vector(), cfg_.step);
    detail::renormalize_quaternion(z);
    x_ = State::from_vector(z);
    ++steps_;
  }

  /// Holds `thrust` for round(duration / step) steps. Returns false as soon
  /// as the state diverges.
  bool advance(const ControlVector& thrust, double duration) {
    const long n = std::lround(duration / cfg_.step);
    for (long i = 0; i < n; ++i) {
      step(thrust);
      if (diverged()) return false;
    }
    return true;
  }

 private:
  SimConfig cfg_;
  State x_;
  std::uint64_t steps_ = 0;
};

}  // namespace pinnmpc
