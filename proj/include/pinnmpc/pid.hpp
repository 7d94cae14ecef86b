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

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "pinnmpc/errors.hpp"
#include "pinnmpc/quad_dynamics.hpp"
#include "pinnmpc/quaternion.hpp"

namespace pinnmpc {

/// Gains of the cascaded position/attitude controller. Attitude gains act
/// on angular acceleration (rad/s^2 per rad and per rad/s).
struct PidConfig {
  Eigen::Vector3d position_kp{4.0, 4.0, 6.0};
  Eigen::Vector3d position_ki{1.0, 1.0, 2.0};
  Eigen::Vector3d position_kd{3.5, 3.5, 4.5};
  Eigen::Vector3d attitude_kp{100.0, 100.0, 4.0};
  Eigen::Vector3d attitude_ki{40.0, 40.0, 0.0};
  Eigen::Vector3d attitude_kd{18.0, 18.0, 2.0};
  double position_integral_clamp = 1.0;  // m s
  double attitude_integral_clamp = 0.2;  // rad s
  double max_tilt = 0.6;                 // rad
  double max_yaw_differential = 0.2;     // N per rotor
  /// Adds the reference acceleration to the position loop output.
  bool acceleration_feedforward = false;

  void validate() const {
    for (const auto* g : {&position_kp, &position_ki, &position_kd,
                          &attitude_kp, &attitude_ki, &attitude_kd}) {
      if (!(g->array() >= 0.0).all()) throw ConfigError("PID gains must be >= 0");
    }
    if (!(position_integral_clamp > 0.0) || !(attitude_integral_clamp > 0.0)) {
      throw ConfigError("PID integrator clamps must be > 0");
    }
    if (!(max_tilt > 0.0 && max_tilt < 1.5)) {
      throw ConfigError("max_tilt must lie in (0, 1.5) rad");
    }
    if (!(max_yaw_differential >= 0.0)) {
      throw ConfigError("max_yaw_differential must be >= 0");
    }
  }
};

/// Desired position, velocity and acceleration with a yaw angle.
struct PidReference {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d acceleration = Eigen::Vector3d::Zero();
  double yaw = 0.0;
};

/// Rotor thrusts producing collective thrust `total` and body torque `tau`,
/// saturated to [0, thrust_max]. The yaw share is limited first because the
/// rotors have little yaw authority.
inline ControlVector mix_thrusts(double total, const Eigen::Vector3d& tau,
                                 const QuadParams& params,
                                 double max_yaw_differential) {
  const double l = params.arm_length;
  const double k = params.k_drag;
  // Inverse of the torque map in body_torque(); its rows are orthogonal.
  const double yaw = std::clamp(tau.z() / (4.0 * k), -max_yaw_differential,
                                max_yaw_differential);
  const double tx = tau.x() / (4.0 * l), ty = tau.y() / (4.0 * l);
  const double base = total / 4.0;
  ControlVector t(base - tx - ty - yaw, base - tx + ty + yaw,
                  base + tx + ty - yaw, base + tx - ty + yaw);
  return t.cwiseMax(0.0).cwiseMin(params.thrust_max_per_rotor);
}

/// Cascaded controller: position PID (optionally with acceleration
/// feed-forward) gives a force vector, which sets the desired body z axis and collective thrust;
/// an attitude PID computes torques; a mixer maps both to rotors.
class PidController {
 public:
  PidController(PidConfig cfg, QuadParams params)
      : cfg_(std::move(cfg)), params_(std::move(params)) {
    cfg_.validate();
    params_.validate();
  }

  void reset() {
    pos_int_.setZero();
    att_int_.setZero();
  }

  /// `dt` is the time until the next update (integrator step).
  Control update(const State& x, const PidReference& ref, double dt) {
    require_valid_state(x);
    const Eigen::Vector3d e_p = ref.position - x.p;
    const Eigen::Vector3d e_v = ref.velocity - x.v;
    pos_int_ = (pos_int_ + dt * e_p)
                   .cwiseMax(-cfg_.position_integral_clamp)
                   .cwiseMin(cfg_.position_integral_clamp);
    const Eigen::Vector3d ff =
        cfg_.acceleration_feedforward ? ref.acceleration : Eigen::Vector3d::Zero();
    const Eigen::Vector3d acc = ff + cfg_.position_kp.cwiseProduct(e_p) +
                                cfg_.position_ki.cwiseProduct(pos_int_) +
                                cfg_.position_kd.cwiseProduct(e_v);
    Eigen::Vector3d force = params_.mass * (acc - params_.gravity);
    force.z() = std::max(force.z(), 0.1 * params_.mass * -params_.gravity.z());
    // tilt limit
    const double horiz = force.head<2>().norm();
    const double max_horiz = force.z() * std::tan(cfg_.max_tilt);
    if (horiz > max_horiz) force.head<2>() *= max_horiz / horiz;

    const Eigen::Vector3d z_d = force.normalized();
    const Eigen::Vector3d heading(std::cos(ref.yaw), std::sin(ref.yaw), 0.0);
    const Eigen::Vector3d y_d = z_d.cross(heading).normalized();
    const Eigen::Vector3d x_d = y_d.cross(z_d);
    Eigen::Matrix3d r_d;
    r_d << x_d, y_d, z_d;
    const Eigen::Quaterniond qd_eig(r_d);
    const Quaternion q_d(qd_eig.w(), qd_eig.x(), qd_eig.y(), qd_eig.z());

    const Quaternion qn = x.q / x.q.norm();
    const Eigen::Vector3d body_z = rotate_vector_normalized(qn, Eigen::Vector3d::UnitZ());
    const double total = std::max(0.0, force.dot(body_z));

    Quaternion q_e = quat_mul(quat_conjugate(q_d), qn);
    if (q_e[0] < 0.0) q_e = -q_e;
    const Eigen::Vector3d e_r = 2.0 * q_e.tail<3>();
    att_int_ = (att_int_ + dt * e_r)
                   .cwiseMax(-cfg_.attitude_integral_clamp)
                   .cwiseMin(cfg_.attitude_integral_clamp);
    const Eigen::Vector3d alpha = -cfg_.attitude_kp.cwiseProduct(e_r) -
                                  cfg_.attitude_ki.cwiseProduct(att_int_) -
                                  cfg_.attitude_kd.cwiseProduct(x.omega);
    const Eigen::Vector3d& j = params_.inertia_diag;
    const Eigen::Vector3d tau =
        j.cwiseProduct(alpha) + x.omega.cross(j.cwiseProduct(x.omega));
    return Control{mix_thrusts(total, tau, params_, cfg_.max_yaw_differential)};
  }

  const PidConfig& config() const { return cfg_; }

 private:
  PidConfig cfg_;
  QuadParams params_;
  Eigen::Vector3d pos_int_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d att_int_ = Eigen::Vector3d::Zero();
};

/// Stateless form of one update from zero integrator state.
inline Control pid_control(const PidConfig& cfg, const QuadParams& params,
                           const State& x, const PidReference& ref) {
  PidController c(cfg, params);
  return c.update(x, ref, 0.0);
}

}  // namespace pinnmpc
