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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pinnmpc/errors.hpp"
#include "pinnmpc/integrators.hpp"
#include "pinnmpc/network.hpp"
#include "pinnmpc/quad_dynamics.hpp"

namespace pinnmpc {

struct MpcConfig {
  double horizon = 1.0;  // s
  int nodes = 10;
  StateVector q_diag = default_q();
  ControlVector r_diag = ControlVector::Constant(0.1);
  /// Input the R term is measured from; zero penalizes absolute thrust.
  ControlVector u_ref = ControlVector::Zero();
  int max_iterations = 40;
  double gradient_tolerance = 1e-4;  // on the projected gradient, inf-norm
  double thrust_min = 0.0;           // N
  double thrust_max = 7.0;           // N
  double resolve_rate = 50.0;        // Hz
  double actuation_rate = 500.0;     // Hz
  double fd_step = 1e-6;             // N, finite-difference predictors

  static StateVector default_q() {
    StateVector q;
    q << 0.5, 0.5, 0.5, 0.1, 0.1, 0.1, 0.1, 0.05, 0.05, 0.05, 0.01, 0.01, 0.01;
    return q;
  }

  double node_dt() const { return horizon / nodes; }

  void validate() const {
    if (!(horizon > 0.0)) throw ConfigError("MPC horizon must be positive");
    if (nodes < 1) throw ConfigError("MPC needs at least one node");
    if (!(q_diag.array() >= 0.0).all() || !(r_diag.array() >= 0.0).all()) {
      throw ConfigError("MPC weights must be >= 0");
    }
    if (!(thrust_max >= thrust_min) || !std::isfinite(thrust_min) ||
        !std::isfinite(thrust_max)) {
      throw ConfigError("MPC control bounds are infeasible");
    }
    if (max_iterations < 0 || !(gradient_tolerance >= 0.0) || !(fd_step > 0.0)) {
      throw ConfigError("MPC solver settings are invalid");
    }
    if (!(resolve_rate > 0.0) || !(actuation_rate >= resolve_rate)) {
      throw ConfigError("need actuation_rate >= resolve_rate > 0");
    }
  }
};

namespace detail {

/// x_ref - x with the quaternion of x sign-aligned to the reference.
inline StateVector tracking_error(const StateVector& x, const StateVector& ref) {
  StateVector e = ref - x;
  if (x.segment<4>(3).dot(ref.segment<4>(3)) < 0.0) {
    e.segment<4>(3) = ref.segment<4>(3) + x.segment<4>(3);
  }
  return e;
}

/// d(cost)/dx of the state term e^T Q e.
inline StateVector tracking_error_gradient(const StateVector& x,
                                           const StateVector& ref,
                                           const StateVector& q) {
  const StateVector e = tracking_error(x, ref);
  StateVector g = -2.0 * q.cwiseProduct(e);
  if (x.segment<4>(3).dot(ref.segment<4>(3)) < 0.0) g.segment<4>(3) *= -1.0;
  return g;
}

}  // namespace detail

/// Σ_i (e_i^T Q e_i + u_i^T R u_i) with e_i = ref_i - x_i.
inline double mpc_cost(std::span<const State> states,
                       std::span<const ControlVector> controls,
                       std::span<const State> reference,
                       const StateVector& q_diag, const ControlVector& r_diag) {
  if (states.size() != controls.size() || states.size() != reference.size()) {
    throw ConfigError("mpc_cost needs equal-length states, controls, reference");
  }
  if (!(q_diag.array() >= 0.0).all() || !(r_diag.array() >= 0.0).all()) {
    throw ConfigError("MPC weights must be >= 0");
  }
  double j = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const StateVector e =
        detail::tracking_error(states[i].to_vector(), reference[i].to_vector());
    j += e.dot(q_diag.cwiseProduct(e)) +
         controls[i].dot(r_diag.cwiseProduct(controls[i]));
  }
  return j;
}

/// Model used by the MPC to propagate one node: the nominal dynamics or the
/// noise-free true dynamics integrated with a fixed-step scheme, or a
/// trained network evaluated at t = node interval.
class Predictor {
 public:
  enum class Kind { nominal_rk4, pinn, true_oracle };

  static Predictor nominal(QuadParams params, IntegratorSpec spec = rk4_spec()) {
    Predictor p(Kind::nominal_rk4);
    p.params_ = std::move(params);
    p.dist_ = DisturbanceConfig::disabled();
    p.spec_ = spec;
    return p;
  }

  /// Oracle with access to bias and drag; zero-mean thrust noise is not
  /// predictable and is left out.
  static Predictor true_oracle(QuadParams params, DisturbanceConfig dist,
                               IntegratorSpec spec = rk4_spec()) {
    Predictor p(Kind::true_oracle);
    p.params_ = std::move(params);
    p.dist_ = dist.without_noise();
    p.spec_ = spec;
    return p;
  }

  /// `interval` is the prediction time the network was trained for.
  static Predictor pinn(std::shared_ptr<const Network> net, double interval) {
    if (!net) throw ConfigError("pinn predictor needs a network");
    net->validate();
    if (net->input_size() != kNetworkInputs || net->output_size() != kStateDim) {
      throw ConfigError("network shape does not match the quadrotor model");
    }
    Predictor p(Kind::pinn);
    p.net_ = std::move(net);
    p.interval_ = interval;
    return p;
  }

  static IntegratorSpec rk4_spec() {
    IntegratorSpec s;
    s.scheme = Scheme::rk4;
    s.step = 0.01;
    return s;
  }

  Kind kind() const { return kind_; }
  const Network* network() const { return net_.get(); }

  /// Checks that a node interval is compatible with this predictor.
  void check_interval(double node_dt) const {
    if (kind_ == Kind::pinn && std::abs(node_dt - interval_) > 1e-12) {
      throw ConfigError("MPC node interval differs from the network interval");
    }
  }

  /// One node of length dt from x under held thrusts.
  State step(const State& x, const ControlVector& u, double dt) const {
    if (kind_ == Kind::pinn) {
      Eigen::MatrixXd out;
      Eigen::VectorXd in(kNetworkInputs);
      in << x.to_vector(), u, dt;
      net_->forward(in, false, nullptr, out);
      StateVector y = out.col(0);
      y.segment<4>(3) /= y.segment<4>(3).norm();
      return State::from_vector(y);
    }
    const TrueModel model{params_, dist_, RngKey{}};
    return integrate(model, x, u, dt, spec_);
  }

  /// States x_0..x_N of a single-shooting rollout; a non-finite node throws
  /// SolverError carrying its index.
  std::vector<State> rollout(const State& x0, std::span<const ControlVector> u,
                             double dt, std::size_t from = 0,
                             std::vector<State>* reuse = nullptr) const {
    std::vector<State> xs;
    if (reuse) {
      xs.assign(reuse->begin(), reuse->begin() + static_cast<long>(from) + 1);
    } else {
      xs.push_back(x0);
    }
    for (std::size_t i = from; i < u.size(); ++i) {
      State next = step(xs.back(), u[i], dt);
      if (!next.to_vector().allFinite()) {
        throw SolverError("predictor produced a non-finite state", i);
      }
      xs.push_back(next);
    }
    return xs;
  }

 private:
  explicit Predictor(Kind k) : kind_(k) {}

  Kind kind_;
  QuadParams params_;
  DisturbanceConfig dist_ = DisturbanceConfig::disabled();
  IntegratorSpec spec_;
  std::shared_ptr<const Network> net_;
  double interval_ = 0.0;
};

inline const char* predictor_name(Predictor::Kind k) {
  switch (k) {
    case Predictor::Kind::nominal_rk4: return "nominal-rk4";
    case Predictor::Kind::pinn: return "pinn";
    case Predictor::Kind::true_oracle: return "true-oracle";
  }
  return "?";
}

struct MpcSolution {
  std::vector<ControlVector> controls;  // N node controls
  std::vector<State> states;            // N + 1 predicted states
  double cost = 0.0;
  double initial_cost = 0.0;  // cost of the warm start
  int iterations = 0;
  bool converged = false;
  double projected_gradient = 0.0;  // inf-norm at the returned point
};

namespace detail {

struct CostAndGradient {
  double cost = 0.0;
  std::vector<State> states;
  Eigen::VectorXd gradient;  // 4N, node-major
};

inline double rollout_cost(const std::vector<State>& xs,
                           const std::vector<ControlVector>& u,
                           std::span<const State> ref, const MpcConfig& cfg) {
  std::vector<ControlVector> du(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) du[i] = u[i] - cfg.u_ref;
  return mpc_cost(std::span<const State>(xs).subspan(1), du, ref, cfg.q_diag,
                  cfg.r_diag);
}

/// Adjoint of the network rollout, including the quaternion normalization.
inline Eigen::VectorXd pinn_gradient(const Network& net, const std::vector<State>& xs,
                                     const std::vector<ControlVector>& u,
                                     std::span<const State> ref, const MpcConfig& cfg) {
  const std::size_t n = u.size();
  const double dt = cfg.node_dt();
  Eigen::VectorXd grad(4 * n);
  StateVector lambda = StateVector::Zero();  // dJ/dx_{i+1}
  for (std::size_t i = n; i-- > 0;) {
    lambda += tracking_error_gradient(xs[i + 1].to_vector(), ref[i].to_vector(),
                                      cfg.q_diag);
    Eigen::VectorXd in(kNetworkInputs);
    in << xs[i].to_vector(), u[i], dt;
    Trace trace;
    Eigen::MatrixXd out;
    net.forward(in, false, &trace, out);
    // y = normalize_q(out): dy_q/dout_q = (I - q̂ q̂^T) / |q|
    StateVector up = lambda;
    const Eigen::Vector4d q = out.col(0).segment<4>(3);
    const double nq = q.norm();
    const Eigen::Vector4d qh = q / nq;
    const Eigen::Vector4d lq = lambda.segment<4>(3);
    up.segment<4>(3) = (lq - qh * qh.dot(lq)) / nq;
    const auto back = net.backward(trace, up, nullptr, true);
    const Eigen::VectorXd gin = back.input_gradient.col(0);
    grad.segment<4>(4 * i) =
        gin.segment<kControlDim>(kStateDim) +
        2.0 * cfg.r_diag.cwiseProduct(u[i] - cfg.u_ref);
    lambda = gin.head<kStateDim>();
  }
  return grad;
}

inline CostAndGradient evaluate(const Predictor& pred, const State& x0,
                                const std::vector<ControlVector>& u,
                                std::span<const State> ref, const MpcConfig& cfg,
                                bool want_gradient) {
  CostAndGradient r;
  const double dt = cfg.node_dt();
  r.states = pred.rollout(x0, u, dt);
  r.cost = rollout_cost(r.states, u, ref, cfg);
  if (!want_gradient) return r;
  if (pred.kind() == Predictor::Kind::pinn) {
    r.gradient = pinn_gradient(*pred.network(), r.states, u, ref, cfg);
    return r;
  }
  // forward differences; a perturbation of node i only re-rolls from i
  r.gradient.resize(static_cast<Eigen::Index>(4 * u.size()));
  std::vector<ControlVector> up = u;
  for (std::size_t i = 0; i < u.size(); ++i) {
    for (int k = 0; k < kControlDim; ++k) {
      const double h = cfg.fd_step;
      up[i][k] += h;
      const auto xs = pred.rollout(x0, up, dt, i, &r.states);
      r.gradient[static_cast<Eigen::Index>(4 * i + k)] =
          (rollout_cost(xs, up, ref, cfg) - r.cost) / h;
      up[i][k] = u[i][k];
    }
  }
  return r;
}

inline std::vector<ControlVector> unpack(const Eigen::VectorXd& z) {
  std::vector<ControlVector> u(static_cast<std::size_t>(z.size() / 4));
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = z.segment<4>(static_cast<Eigen::Index>(4 * i));
  return u;
}

inline Eigen::VectorXd pack(const std::vector<ControlVector>& u) {
  Eigen::VectorXd z(static_cast<Eigen::Index>(4 * u.size()));
  for (std::size_t i = 0; i < u.size(); ++i) z.segment<4>(static_cast<Eigen::Index>(4 * i)) = u[i];
  return z;
}

}  // namespace detail

/// Hover thrust at every node, clipped to the bounds.
inline std::vector<ControlVector> hover_controls(const QuadParams& params,
                                                 const MpcConfig& cfg) {
  const double h = std::clamp(params.hover_thrust(), cfg.thrust_min, cfg.thrust_max);
  return std::vector<ControlVector>(static_cast<std::size_t>(cfg.nodes),
                                    ControlVector::Constant(h));
}

/// Minimizes the tracking cost over the node controls by spectral
/// (Barzilai-Borwein) projected gradient with monotone Armijo backtracking.
/// `reference` holds the N reference states at the ends of the nodes;
/// `warm_start` holds N controls (projected onto the bounds first).
inline MpcSolution solve(const Predictor& pred, const State& x0,
                         std::span<const State> reference, const MpcConfig& cfg,
                         std::span<const ControlVector> warm_start) {
  cfg.validate();
  require_valid_state(x0);
  pred.check_interval(cfg.node_dt());
  const auto n = static_cast<std::size_t>(cfg.nodes);
  if (reference.size() != n) throw ConfigError("reference must cover every node");
  if (warm_start.size() != n) throw ConfigError("warm start must have one control per node");

  auto project = [&](Eigen::VectorXd z) {
    return Eigen::VectorXd(z.cwiseMax(cfg.thrust_min).cwiseMin(cfg.thrust_max));
  };
  Eigen::VectorXd z = project(detail::pack({warm_start.begin(), warm_start.end()}));
  auto cur = detail::evaluate(pred, x0, detail::unpack(z), reference, cfg, true);

  MpcSolution sol;
  sol.initial_cost = cur.cost;
  auto proj_grad_norm = [&](const Eigen::VectorXd& at, const Eigen::VectorXd& g) {
    return (project(at - g) - at).lpNorm<Eigen::Infinity>();
  };
  double pg = proj_grad_norm(z, cur.gradient);
  double alpha = 0.1 / std::max(cur.gradient.lpNorm<Eigen::Infinity>(), 1e-12);
  Eigen::VectorXd z_prev, g_prev;
  constexpr double kArmijo = 1e-4;
  while (pg > cfg.gradient_tolerance && sol.iterations < cfg.max_iterations) {
    if (sol.iterations > 0) {
      const Eigen::VectorXd s = z - z_prev, y = cur.gradient - g_prev;
      const double sy = s.dot(y);
      alpha = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, 1e-10, 1e10)
                       : std::min(1e10, 10.0 * alpha);
    }
    double step = alpha;
    bool accepted = false;
    detail::CostAndGradient trial;
    Eigen::VectorXd z_new;
    for (int k = 0; k < 40; ++k) {
      z_new = project(z - step * cur.gradient);
      const double decrease = cur.gradient.dot(z_new - z);
      if (decrease == 0.0) break;
      trial = detail::evaluate(pred, x0, detail::unpack(z_new), reference, cfg, false);
      if (trial.cost <= cur.cost + kArmijo * decrease) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    z_prev = z;
    g_prev = cur.gradient;
    z = z_new;
    cur = detail::evaluate(pred, x0, detail::unpack(z), reference, cfg, true);
    ++sol.iterations;
    pg = proj_grad_norm(z, cur.gradient);
  }
  sol.controls = detail::unpack(z);
  sol.states = std::move(cur.states);
  sol.cost = cur.cost;
  sol.converged = pg <= cfg.gradient_tolerance;
  sol.projected_gradient = pg;
  return sol;
}

/// Previous solution advanced by `elapsed` seconds: node centres are
/// re-sampled by linear interpolation, the last control is held.
inline std::vector<ControlVector> shift_controls(std::span<const ControlVector> u,
                                                 double elapsed, double node_dt) {
  std::vector<ControlVector> out(u.size());
  const auto n = static_cast<double>(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    // position in units of nodes, measured between node centres
    const double s = std::clamp(static_cast<double>(i) + elapsed / node_dt, 0.0, n - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(s));
    const std::size_t hi = std::min(lo + 1, u.size() - 1);
    const double w = s - static_cast<double>(lo);
    out[i] = (1.0 - w) * u[lo] + w * u[hi];
  }
  return out;
}

}  // namespace pinnmpc
