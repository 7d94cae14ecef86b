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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pinnmpc/errors.hpp"
#include "pinnmpc/quad_dynamics.hpp"

namespace pinnmpc {

enum class Scheme { euler, rk4, rk45 };

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::euler: return "euler";
    case Scheme::rk4: return "rk4";
    case Scheme::rk45: return "rk45";
  }
  return "?";
}

inline Scheme parse_scheme(const std::string& name) {
  if (name == "euler") return Scheme::euler;
  if (name == "rk4") return Scheme::rk4;
  if (name == "rk45") return Scheme::rk45;
  throw ConfigError("unknown integrator scheme '" + name + "'");
}

/// For euler/rk4 `step` is the fixed step size. For rk45 it is the interval
/// covered by one call to step(), subdivided adaptively.
struct IntegratorSpec {
  Scheme scheme = Scheme::rk4;
  double step = 0.002;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  int max_steps = 100000;

  void validate() const {
    if (!(step > 0.0)) throw ConfigError("integrator step must be positive");
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
      throw ConfigError("integrator tolerances must be positive");
    }
    if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
  }
};

namespace ode {

template <class Vec, class Rhs>
Vec euler(const Rhs& f, const Vec& x, double h) {
  return x + h * f(x);
}

template <class Vec, class Rhs>
Vec rk4(const Rhs& f, const Vec& x, double h) {
  const Vec k1 = f(x);
  const Vec k2 = f(Vec(x + 0.5 * h * k1));
  const Vec k3 = f(Vec(x + 0.5 * h * k2));
  const Vec k4 = f(Vec(x + h * k3));
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct AdaptiveStats {
  int accepted = 0;
  int rejected = 0;
};

struct NoPostStep {
  template <class Vec>
  void operator()(Vec&) const {}
};

/// Dormand-Prince 4(5) over [0, duration] with step rejection. `post` is
/// applied to every accepted state. Throws IntegrationError once more than
/// `max_steps` steps (accepted + rejected) have been attempted.
template <class Vec, class Rhs, class Post = NoPostStep>
Vec dopri5(const Rhs& f, Vec x, double duration, double rel_tol,
           double abs_tol, int max_steps, Post post = {},
           AdaptiveStats* stats = nullptr) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                          c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113,
                          b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                          e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  (void)c2; (void)c3; (void)c4; (void)c5;

  AdaptiveStats local;
  AdaptiveStats& st = stats ? *stats : local;
  if (duration <= 0.0) return x;

  auto scale = [&](const Vec& a, const Vec& b) {
    return Vec((abs_tol + rel_tol * a.cwiseAbs().cwiseMax(b.cwiseAbs()).array())
                   .matrix());
  };
  auto rms = [](const Vec& v) {
    return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
  };

  Vec k1 = f(x);
  double h;
  {
    const Vec sc = scale(x, x);
    const double d0 = rms(Vec(x.cwiseQuotient(sc)));
    const double d1 = rms(Vec(k1.cwiseQuotient(sc)));
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min(h, duration);
  }

  double t = 0.0;
  int attempts = 0;
  while (t < duration) {
    if (attempts >= max_steps) {
      throw IntegrationError("rk45 exceeded max_steps=" +
                                 std::to_string(max_steps) + " at t=" +
                                 std::to_string(t),
                             t);
    }
    ++attempts;
    const bool last = t + h >= duration;
    if (last) h = duration - t;

    const Vec k2 = f(Vec(x + h * a21 * k1));
    const Vec k3 = f(Vec(x + h * (a31 * k1 + a32 * k2)));
    const Vec k4 = f(Vec(x + h * (a41 * k1 + a42 * k2 + a43 * k3)));
    const Vec k5 = f(Vec(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    const Vec k6 = f(Vec(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 +
                                  a65 * k5)));
    Vec x_new = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vec k7 = f(x_new);
    const Vec err =
        h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double err_norm = rms(Vec(err.cwiseQuotient(scale(x, x_new))));

    if (!std::isfinite(err_norm)) {
      ++st.rejected;
      h *= 0.2;
      continue;
    }
    if (err_norm <= 1.0) {
      t = last ? duration : t + h;
      post(x_new);
      x = x_new;
      k1 = f(x);
      ++st.accepted;
    } else {
      ++st.rejected;
    }
    const double factor =
        err_norm == 0.0 ? 5.0
                        : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
    h *= err_norm <= 1.0 ? factor : std::min(factor, 1.0);
  }
  return x;
}

}  // namespace ode

namespace detail {

inline void renormalize_quaternion(StateVector& x) {
  x.segment<4>(3) /= x.segment<4>(3).norm();
}

struct RenormalizeQuaternion {
  void operator()(StateVector& x) const { renormalize_quaternion(x); }
};

template <class Model>
auto held_control_rhs(const Model& f, const ControlVector& u) {
  return [&f, u](const StateVector& z) -> StateVector {
    return f(State::from_vector(z), u).to_vector();
  };
}

}  // namespace detail

/// Advances `x` by `duration` under the held control `u`. Fixed-step schemes
/// take round(duration / spec.step) equal steps (at least one).
template <class Model>
State integrate(const Model& f, const State& x, const ControlVector& u,
                double duration, const IntegratorSpec& spec) {
  spec.validate();
  const auto rhs = detail::held_control_rhs(f, u);
  StateVector z = x.to_vector();
  if (spec.scheme == Scheme::rk45) {
    z = ode::dopri5(rhs, z, duration, spec.rel_tol, spec.abs_tol,
                    spec.max_steps, detail::RenormalizeQuaternion{});
    return State::from_vector(z);
  }
  const int n = std::max(1, static_cast<int>(std::lround(duration / spec.step)));
  const double h = duration / n;
  for (int i = 0; i < n; ++i) {
    z = spec.scheme == Scheme::euler ? ode::euler(rhs, z, h)
                                     : ode::rk4(rhs, z, h);
    detail::renormalize_quaternion(z);
  }
  return State::from_vector(z);
}

/// One scheme step of size spec.step (for rk45: one adaptively subdivided
/// interval of that length).
template <class Model>
State step(const Model& f, const State& x, const Control& u,
           const IntegratorSpec& spec) {
  spec.validate();
  const auto rhs = detail::held_control_rhs(f, u.thrust);
  StateVector z = x.to_vector();
  switch (spec.scheme) {
    case Scheme::euler: z = ode::euler(rhs, z, spec.step); break;
    case Scheme::rk4: z = ode::rk4(rhs, z, spec.step); break;
    case Scheme::rk45:
      z = ode::dopri5(rhs, z, spec.step, spec.rel_tol, spec.abs_tol,
                      spec.max_steps, detail::RenormalizeQuaternion{});
      break;
  }
  detail::renormalize_quaternion(z);
  return State::from_vector(z);
}

/// Multiple-shooting propagation: node i holds controls[i] for
/// horizon / controls.size() seconds. Returns controls.size() + 1 states,
/// starting with x0.
template <class Model>
std::vector<State> rollout(const Model& f, const State& x0,
                           std::span<const ControlVector> controls,
                           double horizon, const IntegratorSpec& spec) {
  if (controls.empty()) throw ConfigError("rollout needs at least one control");
  if (!(horizon > 0.0)) throw ConfigError("rollout horizon must be positive");
  const double node_dt = horizon / static_cast<double>(controls.size());
  std::vector<State> states;
  states.reserve(controls.size() + 1);
  states.push_back(x0);
  for (std::size_t i = 0; i < controls.size(); ++i) {
    try {
      states.push_back(integrate(f, states.back(), controls[i], node_dt, spec));
    } catch (const IntegrationError& e) {
      throw RolloutError(std::string(e.what()) + " (node " +
                             std::to_string(i) + ")",
                         node_dt * static_cast<double>(i) +
                             e.last_accepted_time(),
                         i);
    }
  }
  return states;
}

}  // namespace pinnmpc
