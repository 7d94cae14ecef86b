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
#include <vector>

#include <Eigen/Dense>

#include "pinnmpc/dataset.hpp"
#include "pinnmpc/errors.hpp"
#include "pinnmpc/network.hpp"
#include "pinnmpc/quad_dynamics.hpp"

namespace pinnmpc {

/// Where the physics residual evaluates the dynamics: at the sampled input
/// state (`literal`), or at the network's own prediction φ(t) (`pinc`).
enum class ResidualMode { literal, pinc };

inline const char* residual_mode_name(ResidualMode m) {
  return m == ResidualMode::literal ? "literal" : "pinc";
}

inline ResidualMode parse_residual_mode(const std::string& s) {
  if (s == "literal") return ResidualMode::literal;
  if (s == "pinc") return ResidualMode::pinc;
  throw ConfigError("unknown residual mode '" + s + "'");
}

struct LossWeights {
  double physics = 1.0;
  double data = 1.0;
  double ic = 1.0;

  void validate() const {
    if (!(physics >= 0.0 && data >= 0.0 && ic >= 0.0)) {
      throw ConfigError("loss weights must be >= 0");
    }
  }
};

struct LossOptions {
  ResidualMode mode = ResidualMode::literal;
  QuadParams params;  // dynamics used by the pinc residual
  /// Per-component weights inside each squared norm; all ones gives the
  /// plain squared Euclidean norm.
  StateVector physics_component_weights = StateVector::Ones();
  StateVector state_component_weights = StateVector::Ones();  // data and IC

  void validate() const {
    params.validate();
    if (!(physics_component_weights.array() >= 0.0).all() ||
        !(state_component_weights.array() >= 0.0).all()) {
      throw ConfigError("component weights must be >= 0");
    }
  }
};

struct LossTerms {
  double physics = 0.0;
  double data = 0.0;
  double ic = 0.0;

  double total(const LossWeights& w) const {
    return w.physics * physics + w.data * data + w.ic * ic;
  }
};

/// Loss value with its parameter gradient; usable by LbfgsMinimizer.
struct LossEvaluation {
  LossTerms terms;
  double value = 0.0;
  Eigen::VectorXd gradient;
};

/// Network-ready column batches built once per dataset.
struct LossBatch {
  Eigen::MatrixXd colloc_inputs;       // inputs at the sampled t
  Eigen::MatrixXd colloc_targets;      // f̄(x, u) + f̂
  Eigen::MatrixXd colloc_uncertainty;  // f̂ alone (pinc residual)
  Eigen::MatrixXd ic_inputs;           // inputs at t = 0
  Eigen::MatrixXd ic_targets;          // x
  Eigen::MatrixXd data_inputs;         // inputs at t = horizon
  Eigen::MatrixXd data_targets;        // y

  Eigen::Index collocation_count() const { return colloc_inputs.cols(); }
  Eigen::Index flight_count() const { return data_inputs.cols(); }

  static LossBatch build(const std::vector<CollocationPoint>& points,
                         const std::vector<FlightSample>& samples,
                         double horizon, const QuadParams& params) {
    LossBatch b;
    const auto np = static_cast<Eigen::Index>(points.size());
    const auto nd = static_cast<Eigen::Index>(samples.size());
    b.colloc_inputs.resize(kNetworkInputs, np);
    b.colloc_targets.resize(kStateDim, np);
    b.colloc_uncertainty.resize(kStateDim, np);
    b.ic_targets.resize(kStateDim, np);
    for (Eigen::Index j = 0; j < np; ++j) {
      const auto& p = points[j];
      b.colloc_inputs.col(j) = network_input(p.x, p.u, p.t);
      b.colloc_targets.col(j) = p.target.to_vector();
      b.colloc_uncertainty.col(j) =
          p.target.to_vector() -
          nominal_derivative_unchecked(p.x, p.u.thrust, params).to_vector();
      b.ic_targets.col(j) = p.x.to_vector();
    }
    b.ic_inputs = b.colloc_inputs;
    if (np > 0) b.ic_inputs.row(kTimeInput).setZero();
    b.data_inputs.resize(kNetworkInputs, nd);
    b.data_targets.resize(kStateDim, nd);
    for (Eigen::Index j = 0; j < nd; ++j) {
      b.data_inputs.col(j) = network_input(samples[j].x, samples[j].u, horizon);
      b.data_targets.col(j) = samples[j].y.to_vector();
    }
    return b;
  }

  static LossBatch build(const Dataset& ds, const QuadParams& params) {
    return build(ds.collocation, ds.flight, ds.horizon, params);
  }
};

namespace detail {

/// Central-difference Jacobian of the nominal dynamics in the state.
inline Eigen::Matrix<double, kStateDim, kStateDim> nominal_state_jacobian(
    const StateVector& x, const ControlVector& u, const QuadParams& params) {
  Eigen::Matrix<double, kStateDim, kStateDim> jac;
  for (int i = 0; i < kStateDim; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    StateVector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    jac.col(i) = (nominal_derivative_unchecked(State::from_vector(xp), u, params).to_vector() -
                  nominal_derivative_unchecked(State::from_vector(xm), u, params).to_vector()) /
                 (2.0 * h);
  }
  return jac;
}

struct TermResult {
  double value = 0.0;
  Eigen::VectorXd gradient;  // empty unless requested
};

/// Weighted mean squared residual: (1/N) Σ_j Σ_i w_i r_ij².
inline double weighted_mse(const Eigen::MatrixXd& r, const StateVector& w) {
  return (r.array().square().colwise() * w.array()).sum() /
         static_cast<double>(r.cols());
}

inline TermResult physics_term(const Network& net, const LossBatch& b,
                               const LossOptions& opt, bool want_gradient) {
  TermResult res;
  const Eigen::Index n = b.collocation_count();
  if (n == 0) return res;
  Trace trace;
  Eigen::MatrixXd out, out_dot;
  net.forward(b.colloc_inputs, true, want_gradient ? &trace : nullptr, out, &out_dot);
  Eigen::MatrixXd rhs;
  std::vector<Eigen::Matrix<double, kStateDim, kStateDim>> jacs;
  if (opt.mode == ResidualMode::literal) {
    rhs = b.colloc_targets;
  } else {
    rhs.resize(kStateDim, n);
    if (want_gradient) jacs.resize(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
      const StateVector phi = out.col(j);
      const ControlVector u = b.colloc_inputs.col(j).segment<kControlDim>(kStateDim);
      rhs.col(j) = nominal_derivative_unchecked(State::from_vector(phi), u, opt.params)
                       .to_vector() +
                   b.colloc_uncertainty.col(j);
      if (want_gradient) jacs[j] = nominal_state_jacobian(phi, u, opt.params);
    }
  }
  const Eigen::MatrixXd r = out_dot - rhs;
  res.value = weighted_mse(r, opt.physics_component_weights);
  if (!want_gradient) return res;
  const Eigen::MatrixXd g_dot =
      (r.array().colwise() * opt.physics_component_weights.array()) *
      (2.0 / static_cast<double>(n));
  Eigen::MatrixXd g_out = Eigen::MatrixXd::Zero(kStateDim, n);
  if (opt.mode == ResidualMode::pinc) {
    for (Eigen::Index j = 0; j < n; ++j) {
      g_out.col(j) = -jacs[j].transpose() * g_dot.col(j);
    }
  }
  res.gradient = net.backward(trace, g_out, &g_dot).gradient.values;
  return res;
}

inline TermResult state_term(const Network& net, const Eigen::MatrixXd& inputs,
                             const Eigen::MatrixXd& targets,
                             const LossOptions& opt, bool want_gradient) {
  TermResult res;
  const Eigen::Index n = inputs.cols();
  if (n == 0) return res;
  Trace trace;
  Eigen::MatrixXd out;
  net.forward(inputs, false, want_gradient ? &trace : nullptr, out);
  const Eigen::MatrixXd r = out - targets;
  res.value = weighted_mse(r, opt.state_component_weights);
  if (!want_gradient) return res;
  const Eigen::MatrixXd g =
      (r.array().colwise() * opt.state_component_weights.array()) *
      (2.0 / static_cast<double>(n));
  res.gradient = net.backward(trace, g).gradient.values;
  return res;
}

}  // namespace detail

/// Mean over collocation points of ‖φ̇(t) − target‖².
inline double physics_loss(const Network& net,
                           const std::vector<CollocationPoint>& points,
                           const LossOptions& opt = {}) {
  if (points.empty()) throw ConfigError("physics_loss needs at least one point");
  const auto b = LossBatch::build(points, {}, 1.0, opt.params);
  return detail::physics_term(net, b, opt, false).value;
}

/// Mean over collocation points of ‖φ(0, x, u) − x‖².
inline double ic_loss(const Network& net,
                      const std::vector<CollocationPoint>& points,
                      const LossOptions& opt = {}) {
  if (points.empty()) throw ConfigError("ic_loss needs at least one point");
  const auto b = LossBatch::build(points, {}, 1.0, opt.params);
  return detail::state_term(net, b.ic_inputs, b.ic_targets, opt, false).value;
}

/// Mean over flight samples of ‖φ(horizon, x, u) − y‖².
inline double data_loss(const Network& net,
                        const std::vector<FlightSample>& samples,
                        double horizon, const LossOptions& opt = {}) {
  if (samples.empty()) throw ConfigError("data_loss needs at least one sample");
  const auto b = LossBatch::build({}, samples, horizon, opt.params);
  return detail::state_term(net, b.data_inputs, b.data_targets, opt, false).value;
}

/// All three terms and, if requested, the gradient of the weighted sum.
/// Terms with zero weight are skipped. Empty sets contribute zero.
inline LossEvaluation composite_loss(const Network& net, const LossBatch& b,
                                     const LossWeights& w,
                                     const LossOptions& opt,
                                     bool want_gradient = true) {
  LossEvaluation ev;
  if (want_gradient) ev.gradient = Eigen::VectorXd::Zero(net.parameter_count());
  auto accumulate = [&](double weight, detail::TermResult&& t, double& slot) {
    slot = t.value;
    if (want_gradient && weight != 0.0 && t.gradient.size() > 0) {
      ev.gradient += weight * t.gradient;
    }
  };
  if (w.physics != 0.0) {
    accumulate(w.physics, detail::physics_term(net, b, opt, want_gradient),
               ev.terms.physics);
  }
  if (w.data != 0.0) {
    accumulate(w.data,
               detail::state_term(net, b.data_inputs, b.data_targets, opt,
                                  want_gradient),
               ev.terms.data);
  }
  if (w.ic != 0.0) {
    accumulate(w.ic,
               detail::state_term(net, b.ic_inputs, b.ic_targets, opt, want_gradient),
               ev.terms.ic);
  }
  ev.value = ev.terms.total(w);
  return ev;
}

/// Evaluates every term regardless of weight (no gradient).
inline LossTerms evaluate_terms(const Network& net, const LossBatch& b,
                                const LossOptions& opt) {
  return composite_loss(net, b, LossWeights{1.0, 1.0, 1.0}, opt, false).terms;
}

}  // namespace pinnmpc
