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
#include <string>

#include <Eigen/Dense>

#include "pinnmpc/counter_rng.hpp"
#include "pinnmpc/errors.hpp"
#include "pinnmpc/quaternion.hpp"

namespace pinnmpc {

inline constexpr int kStateDim = 13;
inline constexpr int kControlDim = 4;

using StateVector = Eigen::Matrix<double, kStateDim, 1>;
using ControlVector = Eigen::Matrix<double, kControlDim, 1>;

/// Physical parameters of an X-configuration quadrotor.
struct QuadParams {
  double mass = 0.68 + 4 * 0.009;  // kg
  double arm_length = 0.17;        // m
  Eigen::Vector3d inertia_diag{0.007, 0.007, 0.012};  // kg m^2
  double k_drag = 8.06e-5;
  double max_rotor_speed = 838.0;      // rad/s, informational
  double thrust_max_per_rotor = 7.0;   // N
  Eigen::Vector3d gravity{0.0, 0.0, -9.8};

  void validate() const {
    if (!(mass > 0.0)) throw ConfigError("mass must be positive");
    if (!(arm_length > 0.0)) throw ConfigError("arm_length must be positive");
    if (!(inertia_diag.array() > 0.0).all()) {
      throw ConfigError("inertia components must be positive");
    }
    if (!(thrust_max_per_rotor > 0.0)) {
      throw ConfigError("thrust_max_per_rotor must be positive");
    }
    if (!gravity.allFinite() || !std::isfinite(k_drag)) {
      throw ConfigError("gravity and k_drag must be finite");
    }
  }

  /// Per-rotor thrust that cancels gravity at level attitude.
  double hover_thrust() const { return mass * std::abs(gravity.z()) / 4.0; }
};

/// Quadrotor state: world position, attitude, world velocity, body rate.
struct State {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Quaternion q = identity_quaternion();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();

  StateVector to_vector() const {
    StateVector x;
    x << p, q, v, omega;
    return x;
  }

  static State from_vector(const StateVector& x) {
    State s;
    s.p = x.segment<3>(0);
    s.q = x.segment<4>(3);
    s.v = x.segment<3>(7);
    s.omega = x.segment<3>(10);
    return s;
  }

  static State hover_at(const Eigen::Vector3d& position) {
    State s;
    s.p = position;
    return s;
  }
};

/// Rotor thrusts (T0, T1, T2, T3) in N.
struct Control {
  ControlVector thrust = ControlVector::Zero();

  static Control uniform(double t) {
    return Control{ControlVector::Constant(t)};
  }
};

struct StateDerivative {
  Eigen::Vector3d dp = Eigen::Vector3d::Zero();
  Quaternion dq = Quaternion::Zero();
  Eigen::Vector3d dv = Eigen::Vector3d::Zero();
  Eigen::Vector3d domega = Eigen::Vector3d::Zero();

  StateVector to_vector() const {
    StateVector x;
    x << dp, dq, dv, domega;
    return x;
  }

  static StateDerivative from_vector(const StateVector& x) {
    StateDerivative d;
    d.dp = x.segment<3>(0);
    d.dq = x.segment<4>(3);
    d.dv = x.segment<3>(7);
    d.domega = x.segment<3>(10);
    return d;
  }
};

/// Non-parametric disturbances of the simulated vehicle.
struct DisturbanceConfig {
  double thrust_noise_std = 1.0;        // N, per rotor
  double drag_coeff_linear = 0.1;       // N s/m
  double drag_coeff_quadratic = 0.05;   // N s^2/m^2
  ControlVector motor_bias{1.05, 0.97, 1.02, 0.96};
  bool noise_enabled = true;
  bool drag_enabled = true;
  bool bias_enabled = true;

  static DisturbanceConfig disabled() {
    DisturbanceConfig d;
    d.noise_enabled = d.drag_enabled = d.bias_enabled = false;
    return d;
  }

  bool any_enabled() const {
    return noise_enabled || drag_enabled || bias_enabled;
  }

  /// The same disturbances without the zero-mean thrust noise.
  DisturbanceConfig without_noise() const {
    DisturbanceConfig d = *this;
    d.noise_enabled = false;
    return d;
  }

  void validate() const {
    if (!(thrust_noise_std >= 0.0)) {
      throw ConfigError("thrust_noise_std must be >= 0");
    }
    if (!(drag_coeff_linear >= 0.0) || !(drag_coeff_quadratic >= 0.0)) {
      throw ConfigError("drag coefficients must be >= 0");
    }
    if (!((motor_bias.array() > 0.5).all() &&
          (motor_bias.array() < 1.5).all())) {
      throw ConfigError("motor_bias components must lie in (0.5, 1.5)");
    }
  }
};

/// Additive Gaussian perturbation of the state derivative.
struct UncertaintyConfig {
  StateVector mean = StateVector::Zero();
  StateVector std_diag = StateVector::Ones();
  std::uint64_t seed = 0;

  void validate() const {
    if (!mean.allFinite() || !(std_diag.array() >= 0.0).all()) {
      throw ConfigError("uncertainty std components must be >= 0");
    }
  }
};

inline void require_finite(const State& x) {
  if (!x.to_vector().allFinite()) throw NonFiniteError("state is not finite");
}

inline void require_finite(const Control& u) {
  if (!u.thrust.allFinite()) throw NonFiniteError("control is not finite");
}

inline void require_valid_state(const State& x) {
  require_finite(x);
  require_unit_quaternion(x.q);
}

/// Body torque produced by rotor thrusts (X configuration).
inline Eigen::Vector3d body_torque(const ControlVector& t,
                                   const QuadParams& params) {
  const double l = params.arm_length;
  return Eigen::Vector3d(l * (-t[0] - t[1] + t[2] + t[3]),
                         l * (-t[0] + t[1] + t[2] - t[3]),
                         params.k_drag * (-t[0] + t[1] - t[2] + t[3]));
}

/// Nominal dynamics without input validation. The quaternion is normalized
/// for the thrust rotation so that integrator stage states (slightly off the
/// unit sphere) are handled.
inline StateDerivative nominal_derivative_unchecked(const State& x,
                                                    const ControlVector& thrust,
                                                    const QuadParams& params) {
  StateDerivative d;
  d.dp = x.v;
  d.dq = quat_mul(x.q, Quaternion(0.0, 0.5 * x.omega.x(), 0.5 * x.omega.y(),
                                  0.5 * x.omega.z()));
  const Eigen::Vector3d thrust_body(0.0, 0.0, thrust.sum());
  d.dv = rotate_vector_normalized(x.q, thrust_body) / params.mass +
         params.gravity;
  const Eigen::Vector3d& j = params.inertia_diag;
  const Eigen::Vector3d j_omega = j.cwiseProduct(x.omega);
  d.domega = (body_torque(thrust, params) - x.omega.cross(j_omega))
                 .cwiseQuotient(j);
  return d;
}

/// Nominal rigid-body quadrotor dynamics.
inline StateDerivative nominal_derivative(const State& x, const Control& u,
                                          const QuadParams& params) {
  require_valid_state(x);
  require_finite(u);
  return nominal_derivative_unchecked(x, u.thrust, params);
}

/// One draw of the additive parametric uncertainty, keyed by
/// (cfg.seed, draw_index). The draw does not depend on x or u.
inline StateDerivative sample_parametric_uncertainty(
    [[maybe_unused]] const State& x, [[maybe_unused]] const Control& u,
    const UncertaintyConfig& cfg, std::uint64_t draw_index) {
  const RngKey key{cfg.seed, draw_index};
  StateVector z;
  for (int i = 0; i < kStateDim; ++i) {
    z[i] = counter_normal(key, static_cast<std::uint64_t>(i));
  }
  return StateDerivative::from_vector(cfg.mean + cfg.std_diag.cwiseProduct(z));
}

/// Thrusts actually produced by the rotors after bias and noise.
inline ControlVector effective_thrust(const ControlVector& commanded,
                                      const DisturbanceConfig& dist,
                                      const RngKey& key) {
  ControlVector t = commanded;
  if (dist.bias_enabled) t = dist.motor_bias.cwiseProduct(t);
  if (dist.noise_enabled) {
    for (int i = 0; i < kControlDim; ++i) {
      t[i] += dist.thrust_noise_std *
              counter_normal(key, static_cast<std::uint64_t>(i));
    }
  }
  return t;
}

inline StateDerivative true_derivative_unchecked(const State& x,
                                                 const ControlVector& thrust,
                                                 const QuadParams& params,
                                                 const DisturbanceConfig& dist,
                                                 const RngKey& key) {
  StateDerivative d = nominal_derivative_unchecked(
      x, effective_thrust(thrust, dist, key), params);
  if (dist.drag_enabled) {
    const double speed = x.v.norm();
    d.dv += -(dist.drag_coeff_linear * x.v +
              dist.drag_coeff_quadratic * speed * x.v) /
            params.mass;
  }
  return d;
}

/// Dynamics of the disturbed vehicle: biased and noisy rotor thrusts plus
/// linear and quadratic aerodynamic drag. `key` selects the noise draw.
inline StateDerivative true_derivative(const State& x, const Control& u,
                                       const QuadParams& params,
                                       const DisturbanceConfig& dist,
                                       const RngKey& key) {
  require_valid_state(x);
  require_finite(u);
  return true_derivative_unchecked(x, u.thrust, params, dist, key);
}

/// Callable adaptors with the (State, ControlVector) signature the
/// integrators expect.
struct NominalModel {
  QuadParams params;

  StateDerivative operator()(const State& x, const ControlVector& u) const {
    return nominal_derivative_unchecked(x, u, params);
  }
};

struct TrueModel {
  QuadParams params;
  DisturbanceConfig disturbance;
  RngKey key;

  StateDerivative operator()(const State& x, const ControlVector& u) const {
    return true_derivative_unchecked(x, u, params, disturbance, key);
  }
};

}  // namespace pinnmpc
