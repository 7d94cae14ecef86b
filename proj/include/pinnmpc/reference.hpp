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
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pinnmpc/errors.hpp"
#include "pinnmpc/quad_dynamics.hpp"

namespace pinnmpc {

enum class Shape { circle, lemniscate, random };

inline const char* shape_name(Shape s) {
  switch (s) {
    case Shape::circle: return "circle";
    case Shape::lemniscate: return "lemniscate";
    case Shape::random: return "random";
  }
  return "?";
}

inline Shape parse_shape(const std::string& s) {
  if (s == "circle") return Shape::circle;
  if (s == "lemniscate") return Shape::lemniscate;
  if (s == "random") return Shape::random;
  throw ConfigError("unknown trajectory shape '" + s + "'");
}

struct ReferenceTrajectory {
  Shape shape = Shape::circle;
  double radius = 3.0;    // m (circle radius, lemniscate half-width)
  double v_max = 1.0;     // m/s
  double height = 1.0;    // m
  double duration = 10.0; // s
  double ramp_time = 2.0; // s, linear speed ramp from rest
  std::uint64_t seed = 0; // random shape only

  void validate() const {
    if (shape != Shape::random && !(radius > 0.0)) {
      throw ConfigError("trajectory radius must be positive");
    }
    if (!(v_max > 0.0) || !(height > 0.0) || !(duration > 0.0) ||
        !(ramp_time > 0.0)) {
      throw ConfigError("trajectory v_max, height, duration, ramp must be positive");
    }
  }
};

/// Position with its first two time derivatives.
struct ReferencePoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d acceleration = Eigen::Vector3d::Zero();

  /// Full reference state: level attitude with zero yaw and body rates.
  State state() const {
    State s;
    s.p = position;
    s.v = velocity;
    return s;
  }
};

/// Evaluates a trajectory p(θ(t)). The path parameter advances with
/// dθ/dt ramping linearly over ramp_time to v_max / max_θ |dp/dθ|, so the
/// speed never exceeds v_max.
class ReferenceSampler {
 public:
  explicit ReferenceSampler(ReferenceTrajectory traj) : traj_(traj) {
    traj_.validate();
    if (traj_.shape == Shape::random) build_spline();
    theta_rate_ = traj_.v_max / max_path_speed();
  }

  const ReferenceTrajectory& trajectory() const { return traj_; }
  double theta_rate() const { return theta_rate_; }

  /// Reference at time t in [0, duration].
  ReferencePoint at(double t) const {
    if (!(t >= 0.0 && t <= traj_.duration)) {
      throw ConfigError("reference time " + std::to_string(t) +
                        " outside [0, duration]");
    }
    return at_clamped(t);
  }

  /// Like at(), but holds the end point for t > duration.
  ReferencePoint at_clamped(double t) const {
    t = std::clamp(t, 0.0, traj_.duration);
    const double tr = traj_.ramp_time;
    double th, thd, thdd;
    if (t < tr) {
      th = 0.5 * theta_rate_ * t * t / tr;
      thd = theta_rate_ * t / tr;
      thdd = theta_rate_ / tr;
    } else {
      th = theta_rate_ * (0.5 * tr + (t - tr));
      thd = theta_rate_;
      thdd = 0.0;
    }
    Eigen::Vector3d p, dp, ddp;
    path(th, p, dp, ddp);
    if (traj_.shape == Shape::random && th >= max_theta()) {
      thd = thdd = 0.0;  // the spline has ended
    }
    ReferencePoint r;
    r.position = p;
    r.velocity = dp * thd;
    r.acceleration = ddp * thd * thd + dp * thdd;
    return r;
  }

  /// Path point and parameter derivatives at θ.
  void path(double th, Eigen::Vector3d& p, Eigen::Vector3d& dp,
            Eigen::Vector3d& ddp) const {
    const double r = traj_.radius, h = traj_.height;
    switch (traj_.shape) {
      case Shape::circle:
        p = {r * std::cos(th), r * std::sin(th), h};
        dp = {-r * std::sin(th), r * std::cos(th), 0.0};
        ddp = {-r * std::cos(th), -r * std::sin(th), 0.0};
        return;
      case Shape::lemniscate:
        // Gerono: x = r sin θ, y = r sin θ cos θ = (r/2) sin 2θ
        p = {r * std::sin(th), 0.5 * r * std::sin(2.0 * th), h};
        dp = {r * std::cos(th), r * std::cos(2.0 * th), 0.0};
        ddp = {-r * std::sin(th), -2.0 * r * std::sin(2.0 * th), 0.0};
        return;
      case Shape::random:
        spline_eval(std::clamp(th, 0.0, max_theta()), p, dp, ddp);
        return;
    }
  }

  static constexpr int kWaypoints = 8;

 private:
  double max_theta() const { return kWaypoints - 1; }

  double max_path_speed() const {
    switch (traj_.shape) {
      case Shape::circle: return traj_.radius;
      case Shape::lemniscate: return std::sqrt(2.0) * traj_.radius;  // at θ = 0
      case Shape::random: {
        double m = 0.0;
        const int n = 20000;
        Eigen::Vector3d p, dp, ddp;
        for (int i = 0; i <= n; ++i) {
          spline_eval(max_theta() * i / n, p, dp, ddp);
          m = std::max(m, dp.norm());
        }
        // |dp/dθ| is a quadratic per segment; pad for the sampling gap
        return std::max(m * 1.001, 1e-9);
      }
    }
    return 1.0;
  }

  /// Natural cubic spline through seeded waypoints at θ = 0, 1, ..., 7.
  void build_spline() {
    std::mt19937_64 gen(traj_.seed);
    std::uniform_real_distribution<double> xy(-2.0, 2.0), z(0.0, 4.0);
    const int n = kWaypoints;
    pts_.resize(n);
    for (auto& w : pts_) {
      w.x() = xy(gen);
      w.y() = xy(gen);
      w.z() = std::max(0.5, traj_.height) + z(gen);
    }
    // second derivatives m_i, natural ends m_0 = m_{n-1} = 0, unit spacing:
    // m_{i-1} + 4 m_i + m_{i+1} = 6 (p_{i+1} - 2 p_i + p_{i-1})
    m_.assign(n, Eigen::Vector3d::Zero());
    const int k = n - 2;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
    Eigen::MatrixXd rhs(k, 3);
    for (int i = 0; i < k; ++i) {
      a(i, i) = 4.0;
      if (i > 0) a(i, i - 1) = 1.0;
      if (i + 1 < k) a(i, i + 1) = 1.0;
      rhs.row(i) = 6.0 * (pts_[i + 2] - 2.0 * pts_[i + 1] + pts_[i]).transpose();
    }
    const Eigen::MatrixXd sol = a.ldlt().solve(rhs);
    for (int i = 0; i < k; ++i) m_[i + 1] = sol.row(i).transpose();
  }

  void spline_eval(double th, Eigen::Vector3d& p, Eigen::Vector3d& dp,
                   Eigen::Vector3d& ddp) const {
    const int i = std::min(static_cast<int>(std::floor(th)), kWaypoints - 2);
    const double s = th - i;  // in [0, 1]
    const Eigen::Vector3d &p0 = pts_[i], &p1 = pts_[i + 1];
    const Eigen::Vector3d &m0 = m_[i], &m1 = m_[i + 1];
    const double a = 1.0 - s;
    p = a * p0 + s * p1 + ((a * a * a - a) * m0 + (s * s * s - s) * m1) / 6.0;
    dp = p1 - p0 + ((-3.0 * a * a + 1.0) * m0 + (3.0 * s * s - 1.0) * m1) / 6.0;
    ddp = a * m0 + s * m1;
  }

  ReferenceTrajectory traj_;
  double theta_rate_ = 0.0;
  std::vector<Eigen::Vector3d> pts_, m_;
};

/// Reference state at time t (0 <= t <= duration).
inline State reference_at(const ReferenceTrajectory& traj, double t) {
  return ReferenceSampler(traj).at(t).state();
}

}  // namespace pinnmpc
