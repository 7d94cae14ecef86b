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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "pinnmpc/integrators.hpp"

namespace pinnmpc {
namespace {

using Scalar1 = Eigen::Matrix<double, 1, 1>;

const auto kDecay = [](const Scalar1& x) -> Scalar1 { return -x; };

struct ZeroModel {
  StateDerivative operator()(const State&, const ControlVector&) const {
    return {};
  }
};

State tumbling_state() {
  State x = State::hover_at({0.2, -0.1, 1.0});
  x.q = quat_from_euler(0.1, -0.05, 0.3);
  x.v = {0.5, -0.2, 0.1};
  x.omega = {0.5, -0.3, 0.2};
  return x;
}

const ControlVector kUnbalanced{1.80, 1.70, 1.75, 1.76};

TEST(OdeCoreTest, EulerDecayStep) {
  EXPECT_NEAR(ode::euler(kDecay, Scalar1(1.0), 0.1)[0], 0.9, 1e-15);
}

TEST(OdeCoreTest, Rk4DecayStep) {
  const double x = ode::rk4(kDecay, Scalar1(1.0), 0.1)[0];
  EXPECT_NEAR(x, 0.9048375, 1e-12);
  EXPECT_LT(std::abs(x - std::exp(-0.1)), 1e-6);
}

TEST(OdeCoreTest, Dopri5DecayInterval) {
  ode::AdaptiveStats stats;
  const double x = ode::dopri5(kDecay, Scalar1(1.0), 2.0, 1e-10, 1e-12, 10000,
                               ode::NoPostStep{}, &stats)[0];
  EXPECT_NEAR(x, std::exp(-2.0), 1e-9);
  EXPECT_GT(stats.accepted, 1);
}

TEST(StepTest, ZeroDerivativeLeavesStateUnchanged) {
  const State x = tumbling_state();
  for (Scheme s : {Scheme::euler, Scheme::rk4, Scheme::rk45}) {
    IntegratorSpec spec;
    spec.scheme = s;
    spec.step = 0.01;
    const State y = step(ZeroModel{}, x, Control{}, spec);
    EXPECT_LT((y.to_vector() - x.to_vector()).norm(), 1e-15) << scheme_name(s);
  }
}

TEST(StepTest, QuaternionStaysUnit) {
  const NominalModel model{QuadParams{}};
  for (Scheme s : {Scheme::euler, Scheme::rk4, Scheme::rk45}) {
    IntegratorSpec spec;
    spec.scheme = s;
    spec.step = 0.05;
    State x = tumbling_state();
    x.omega = {3.0, -2.0, 1.0};
    for (int i = 0; i < 40; ++i) {
      x = step(model, x, Control{kUnbalanced}, spec);
      EXPECT_NEAR(x.q.norm(), 1.0, 1e-9);
    }
  }
}

TEST(StepTest, Rk45ReportsExhaustedBudget) {
  IntegratorSpec spec;
  spec.scheme = Scheme::rk45;
  spec.step = 5.0;
  spec.rel_tol = 1e-12;
  spec.abs_tol = 1e-14;
  spec.max_steps = 3;
  try {
    step(NominalModel{QuadParams{}}, tumbling_state(), Control{kUnbalanced}, spec);
    FAIL() << "expected IntegrationError";
  } catch (const IntegrationError& e) {
    EXPECT_GE(e.last_accepted_time(), 0.0);
    EXPECT_LT(e.last_accepted_time(), 5.0);
  }
}

TEST(StepTest, RejectsInvalidSpec) {
  IntegratorSpec spec;
  spec.step = 0.0;
  EXPECT_THROW(step(ZeroModel{}, State{}, Control{}, spec), ConfigError);
}

TEST(RolloutTest, SingleNodeZeroDynamics) {
  const State x0 = tumbling_state();
  const std::vector<ControlVector> u{ControlVector::Zero()};
  const auto states = rollout(ZeroModel{}, x0, u, 1.0, IntegratorSpec{});
  ASSERT_EQ(states.size(), 2u);
  for (const State& s : states) EXPECT_EQ(s.to_vector(), x0.to_vector());
}

TEST(RolloutTest, HoverStaysPut) {
  const QuadParams params;
  const State x0 = State::hover_at({1.0, 2.0, 1.0});
  const std::vector<ControlVector> u(
      10, ControlVector::Constant(params.hover_thrust()));
  IntegratorSpec spec;
  spec.step = 0.002;
  const auto states = rollout(NominalModel{params}, x0, u, 1.0, spec);
  ASSERT_EQ(states.size(), 11u);
  EXPECT_LT((states.back().p - x0.p).norm(), 1e-6);
}

TEST(RolloutTest, NodeIndexAttachedToFailures) {
  struct BlowsUpPastX {
    StateDerivative operator()(const State& x, const ControlVector&) const {
      StateDerivative d;
      d.dp.x() = x.p.x() > 1.5 ? std::nan("") : 1.0;
      return d;
    }
  };
  IntegratorSpec spec;
  spec.scheme = Scheme::rk45;
  spec.max_steps = 50;
  const std::vector<ControlVector> u(3, ControlVector::Zero());
  try {
    rollout(BlowsUpPastX{}, State{}, u, 3.0, spec);
    FAIL() << "expected RolloutError";
  } catch (const RolloutError& e) {
    EXPECT_EQ(e.node(), 1u);
  }
}

double order_slope(const std::vector<double>& h, const std::vector<double>& err) {
  // least-squares slope of log(err) against log(h)
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double lx = std::log(h[i]), ly = std::log(err[i]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double measured_order(Scheme scheme, double h0) {
  const NominalModel model{QuadParams{}};
  const State x0 = tumbling_state();
  IntegratorSpec oracle;
  oracle.scheme = Scheme::rk45;
  oracle.rel_tol = 1e-13;
  oracle.abs_tol = 1e-15;
  const State ref = integrate(model, x0, kUnbalanced, 1.0, oracle);
  std::vector<double> hs, errs;
  for (int k = 0; k < 5; ++k) {
    IntegratorSpec spec;
    spec.scheme = scheme;
    spec.step = h0 / std::pow(2.0, k);
    const State y = integrate(model, x0, kUnbalanced, 1.0, spec);
    hs.push_back(spec.step);
    errs.push_back((y.to_vector() - ref.to_vector()).norm());
  }
  return order_slope(hs, errs);
}

TEST(ConvergenceTest, EulerIsFirstOrder) {
  EXPECT_NEAR(measured_order(Scheme::euler, 0.01), 1.0, 0.3);
}

TEST(ConvergenceTest, Rk4IsFourthOrder) {
  EXPECT_NEAR(measured_order(Scheme::rk4, 0.1), 4.0, 0.3);
}

TEST(ConvergenceTest, Rk4ErrorDropsSixteenfoldPerTwoHalvings) {
  const NominalModel model{QuadParams{}};
  const State x0 = tumbling_state();
  IntegratorSpec oracle;
  oracle.scheme = Scheme::rk45;
  oracle.rel_tol = 1e-13;
  oracle.abs_tol = 1e-15;
  const State ref = integrate(model, x0, kUnbalanced, 1.0, oracle);
  auto err = [&](double h) {
    IntegratorSpec spec;
    spec.step = h;
    return (integrate(model, x0, kUnbalanced, 1.0, spec).to_vector() -
            ref.to_vector()).norm();
  };
  const double e1 = err(0.05), e2 = err(0.0125);
  EXPECT_GE(std::log2(e1 / e2) / 2.0, 3.7);
}

}  // namespace
}  // namespace pinnmpc
