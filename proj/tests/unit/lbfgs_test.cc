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
#include <random>

#include <gtest/gtest.h>

#include "pinnmpc/lbfgs.hpp"

namespace pinnmpc {
namespace {

struct LeastSquares {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;

  ValueAndGradient operator()(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd r = a * x - b;
    return {r.squaredNorm(), 2.0 * a.transpose() * r};
  }
};

LeastSquares random_problem(int m, int n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  LeastSquares p{Eigen::MatrixXd(m, n), Eigen::VectorXd(m)};
  for (int i = 0; i < m; ++i) {
    p.b[i] = nd(gen);
    for (int j = 0; j < n; ++j) p.a(i, j) = nd(gen);
  }
  return p;
}

TEST(Lbfgs, LeastSquaresMatchesNormalEquations) {
  const auto prob = random_problem(40, 12, 3);
  const Eigen::VectorXd exact =
      (prob.a.transpose() * prob.a).ldlt().solve(prob.a.transpose() * prob.b);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(12);
  const auto rep = lbfgs_minimize(prob, x, 50, 1e-12);
  EXPECT_LE(rep.iterations, 50);
  EXPECT_LT((x - exact).lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(Lbfgs, MinimizesRosenbrock) {
  auto rosen = [](const Eigen::VectorXd& x) {
    const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    ValueAndGradient e{a * a + 100.0 * b * b, Eigen::VectorXd(2)};
    e.gradient << -2.0 * a - 400.0 * x[0] * b, 200.0 * b;
    return e;
  };
  Eigen::VectorXd x(2);
  x << -1.2, 1.0;
  const auto rep = lbfgs_minimize(rosen, x, 200, 1e-10);
  EXPECT_TRUE(rep.converged);
  EXPECT_NEAR(x[0], 1.0, 1e-6);
  EXPECT_NEAR(x[1], 1.0, 1e-6);
}

TEST(Lbfgs, AcceptedStepsSatisfyStrongWolfe) {
  const auto prob = random_problem(30, 8, 5);
  LbfgsOptions opt;
  Eigen::VectorXd x = Eigen::VectorXd::Ones(8);
  ValueAndGradient cur = prob(x);
  LbfgsMemory mem(opt.history_size);
  for (int k = 0; k < 10; ++k) {
    const Eigen::VectorXd d = mem.direction(cur.gradient);
    const double d0 = cur.gradient.dot(d);
    ASSERT_LT(d0, 0.0);
    auto ls = strong_wolfe_search<ValueAndGradient>(prob, x, cur, d, 1.0, opt);
    ASSERT_TRUE(ls.success);
    const double a = ls.step;
    EXPECT_LE(ls.eval->value, cur.value + opt.c1 * a * d0);
    EXPECT_LE(std::abs(ls.eval->gradient.dot(d)), -opt.c2 * d0 + 1e-12);
    mem.update(a * d, ls.eval->gradient - cur.gradient);
    x += a * d;
    cur = *ls.eval;
  }
}

TEST(Lbfgs, SearchFailsOnAscentDirection) {
  const auto prob = random_problem(10, 3, 1);
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(3);
  const auto cur = prob(x);
  auto ls = strong_wolfe_search<ValueAndGradient>(prob, x, cur, cur.gradient, 1.0,
                                                  LbfgsOptions{});
  EXPECT_FALSE(ls.success);
}

TEST(Lbfgs, FallsBackWhenLineSearchCannotSucceed) {
  // The objective reports a descent gradient but its value never decreases.
  int calls = 0;
  auto liar = [&](const Eigen::VectorXd& x) {
    ++calls;
    return ValueAndGradient{calls > 1 ? 2.0 : 1.0, Eigen::VectorXd::Ones(x.size())};
  };
  LbfgsOptions opt;
  opt.max_line_search = 5;
  LbfgsMinimizer<ValueAndGradient> solver(opt);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
  ValueAndGradient cur = liar(x);
  EXPECT_EQ(solver.iterate(liar, x, cur), StepKind::fallback);
  EXPECT_EQ(solver.failures(), 1);
  // |g| = 2, step length initial_step / (1 + failures) = 0.5
  EXPECT_NEAR(x.norm(), 0.5, 1e-12);
}

TEST(Lbfgs, InvalidOptionsRejected) {
  LbfgsOptions opt;
  opt.c1 = 0.95;
  EXPECT_THROW(opt.validate(), ConfigError);
  opt = LbfgsOptions{};
  opt.history_size = 0;
  EXPECT_THROW(opt.validate(), ConfigError);
}

}  // namespace
}  // namespace pinnmpc
