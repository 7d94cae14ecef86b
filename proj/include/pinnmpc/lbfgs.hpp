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
#include <deque>
#include <optional>

#include <Eigen/Dense>

#include "pinnmpc/errors.hpp"

namespace pinnmpc {

struct LbfgsOptions {
  int history_size = 50;
  /// Trial step of the line search; the very first iteration scales it by
  /// min(1, 1/|g|_1) since no curvature information exists yet.
  double initial_step = 1.0;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search = 25;

  void validate() const {
    if (history_size < 1) throw ConfigError("L-BFGS history must be >= 1");
    if (!(initial_step > 0.0)) throw ConfigError("initial step must be > 0");
    if (!(0.0 < c1 && c1 < c2 && c2 < 1.0)) {
      throw ConfigError("Wolfe constants need 0 < c1 < c2 < 1");
    }
  }
};

/// `Eval` must expose `double value` and `Eigen::VectorXd gradient`.
template <class Eval>
struct LineSearchResult {
  bool success = false;
  double step = 0.0;
  int evaluations = 0;
  std::optional<Eval> eval;  // objective at the accepted point
};

/// Line search for a step satisfying the strong Wolfe conditions, following
/// the bracketing/zoom scheme with safeguarded cubic interpolation.
template <class Eval, class Objective>
LineSearchResult<Eval> strong_wolfe_search(Objective& objective,
                                           const Eigen::VectorXd& x,
                                           const Eval& at_x,
                                           const Eigen::VectorXd& direction,
                                           double initial_step,
                                           const LbfgsOptions& opt) {
  LineSearchResult<Eval> res;
  const double f0 = at_x.value;
  const double d0 = at_x.gradient.dot(direction);
  if (!(d0 < 0.0)) return res;

  auto eval_at = [&](double a) {
    ++res.evaluations;
    return objective(Eigen::VectorXd(x + a * direction));
  };
  // minimizer of the cubic through (a, fa, da), (b, fb, db)
  auto cubic = [](double a, double fa, double da, double b, double fb,
                  double db) {
    const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - da * db;
    if (disc < 0.0) return 0.5 * (a + b);
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    return b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
  };

  struct Point {
    double a, f, d;
    std::optional<Eval> e;
  };
  auto zoom = [&](Point lo, Point hi) -> LineSearchResult<Eval> {
    while (res.evaluations < opt.max_line_search) {
      const double lo_b = std::min(lo.a, hi.a), hi_b = std::max(lo.a, hi.a);
      const double width = hi_b - lo_b;
      double a = cubic(lo.a, lo.f, lo.d, hi.a, hi.f, hi.d);
      if (!std::isfinite(a) || a < lo_b + 0.1 * width || a > hi_b - 0.1 * width) {
        a = 0.5 * (lo.a + hi.a);
      }
      if (width <= 1e-16 * std::max(1.0, hi_b)) break;
      Eval e = eval_at(a);
      const double f = e.value;
      const double d = e.gradient.dot(direction);
      if (!std::isfinite(f) || f > f0 + opt.c1 * a * d0 || f >= lo.f) {
        hi = Point{a, f, d, std::nullopt};
      } else {
        if (std::abs(d) <= -opt.c2 * d0) {
          res.success = true;
          res.step = a;
          res.eval = std::move(e);
          return res;
        }
        if (d * (hi.a - lo.a) >= 0.0) hi = lo;
        lo = Point{a, f, d, std::move(e)};
      }
    }
    return res;
  };

  Point prev{0.0, f0, d0, std::nullopt};
  double a = initial_step;
  for (int i = 0; res.evaluations < opt.max_line_search; ++i) {
    Eval e = eval_at(a);
    const double f = e.value;
    const double d = e.gradient.dot(direction);
    if (!std::isfinite(f) || f > f0 + opt.c1 * a * d0 ||
        (i > 0 && f >= prev.f)) {
      return zoom(prev, Point{a, std::isfinite(f) ? f : HUGE_VAL, d, std::nullopt});
    }
    if (std::abs(d) <= -opt.c2 * d0) {
      res.success = true;
      res.step = a;
      res.eval = std::move(e);
      return res;
    }
    if (d >= 0.0) return zoom(Point{a, f, d, std::move(e)}, prev);
    prev = Point{a, f, d, std::move(e)};
    a *= 2.0;
  }
  return res;
}

/// Limited-memory inverse Hessian approximation (two-loop recursion).
class LbfgsMemory {
 public:
  explicit LbfgsMemory(int history_size) : capacity_(history_size) {}

  void clear() {
    s_.clear();
    y_.clear();
    rho_.clear();
  }

  bool empty() const { return s_.empty(); }
  std::size_t size() const { return s_.size(); }

  /// Stores the pair unless it violates the curvature condition.
  bool update(const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
    const double sy = s.dot(y);
    if (!(sy > 1e-12 * y.squaredNorm())) return false;
    if (static_cast<int>(s_.size()) == capacity_) {
      s_.pop_front();
      y_.pop_front();
      rho_.pop_front();
    }
    s_.push_back(s);
    y_.push_back(y);
    rho_.push_back(1.0 / sy);
    return true;
  }

  /// Descent direction -H g.
  Eigen::VectorXd direction(const Eigen::VectorXd& g) const {
    Eigen::VectorXd q = g;
    const std::size_t m = s_.size();
    std::vector<double> alpha(m);
    for (std::size_t k = m; k-- > 0;) {
      alpha[k] = rho_[k] * s_[k].dot(q);
      q -= alpha[k] * y_[k];
    }
    if (m > 0) q *= s_.back().dot(y_.back()) / y_.back().squaredNorm();
    for (std::size_t k = 0; k < m; ++k) {
      const double beta = rho_[k] * y_[k].dot(q);
      q += (alpha[k] - beta) * s_[k];
    }
    return -q;
  }

 private:
  int capacity_;
  std::deque<Eigen::VectorXd> s_, y_;
  std::deque<double> rho_;
};

enum class StepKind { line_search, fallback };

/// Stepwise L-BFGS driver; the caller owns the outer loop so it can apply
/// early stopping between iterations.
template <class Eval>
class LbfgsMinimizer {
 public:
  explicit LbfgsMinimizer(LbfgsOptions opt)
      : opt_(opt), memory_(opt.history_size) {
    opt_.validate();
  }

  /// Advances `x` by one iteration; `current` holds the objective at `x` on
  /// entry and at the new iterate on exit. A failed line search falls back
  /// to a normalized gradient step of size initial_step / (1 + failures)
  /// and clears the curvature memory.
  template <class Objective>
  StepKind iterate(Objective& objective, Eigen::VectorXd& x, Eval& current) {
    Eigen::VectorXd dir = memory_.direction(current.gradient);
    if (!(dir.dot(current.gradient) < 0.0)) {
      memory_.clear();
      dir = -current.gradient;
    }
    double a0 = opt_.initial_step;
    if (memory_.empty()) {
      a0 *= std::min(1.0, 1.0 / std::max(current.gradient.template lpNorm<1>(), 1e-300));
    }
    auto ls = strong_wolfe_search<Eval>(objective, x, current, dir, a0, opt_);
    evaluations_ += ls.evaluations;
    if (ls.success) {
      const Eigen::VectorXd s = ls.step * dir;
      memory_.update(s, ls.eval->gradient - current.gradient);
      x += s;
      current = std::move(*ls.eval);
      return StepKind::line_search;
    }
    ++failures_;
    memory_.clear();
    const double g_norm = current.gradient.norm();
    const double eta = opt_.initial_step / (1.0 + failures_);
    x -= (eta / std::max(1.0, g_norm)) * current.gradient;
    current = objective(x);
    ++evaluations_;
    return StepKind::fallback;
  }

  int failures() const { return failures_; }
  long evaluations() const { return evaluations_; }

 private:
  LbfgsOptions opt_;
  LbfgsMemory memory_;
  int failures_ = 0;
  long evaluations_ = 0;
};

/// Plain value/gradient pair for objectives without extra payload.
struct ValueAndGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

struct MinimizeReport {
  int iterations = 0;
  bool converged = false;
  double value = 0.0;
};

/// Runs L-BFGS until |g|_inf <= gradient_tolerance or max_iterations.
template <class Objective>
MinimizeReport lbfgs_minimize(Objective objective, Eigen::VectorXd& x,
                              int max_iterations, double gradient_tolerance,
                              const LbfgsOptions& opt = {}) {
  LbfgsMinimizer<ValueAndGradient> solver(opt);
  ValueAndGradient cur = objective(x);
  MinimizeReport rep;
  while (rep.iterations < max_iterations) {
    if (cur.gradient.lpNorm<Eigen::Infinity>() <= gradient_tolerance) {
      rep.converged = true;
      break;
    }
    solver.iterate(objective, x, cur);
    ++rep.iterations;
  }
  rep.converged = rep.converged ||
                  cur.gradient.lpNorm<Eigen::Infinity>() <= gradient_tolerance;
  rep.value = cur.value;
  return rep;
}

}  // namespace pinnmpc
