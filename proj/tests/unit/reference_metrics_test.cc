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
#include <limits>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "pinnmpc/metrics.hpp"
#include "pinnmpc/reference.hpp"

namespace pinnmpc {
namespace {

ReferenceTrajectory shape(Shape s, double v_max = 1.0, std::uint64_t seed = 0) {
  ReferenceTrajectory t;
  t.shape = s;
  t.v_max = v_max;
  t.seed = seed;
  return t;
}

class AllShapes : public ::testing::TestWithParam<Shape> {};

TEST_P(AllShapes, SpeedNeverExceedsTheLimit) {
  for (double v : {1.0, 2.5}) {
    const ReferenceSampler s(shape(GetParam(), v, 4));
    double top = 0.0;
    for (int i = 0; i <= 20000; ++i) {
      top = std::max(top, s.at(10.0 * i / 20000).velocity.norm());
    }
    EXPECT_LE(top, v + 1e-9);
    // the figure-eight peaks only at its centre crossing, reached after 10 s
    if (GetParam() == Shape::circle) EXPECT_GT(top, 0.999 * v);
  }
}

TEST_P(AllShapes, DerivativesMatchFiniteDifferences) {
  const ReferenceSampler s(shape(GetParam(), 2.0, 6));
  const double h = 1e-5;
  for (double t : {0.5, 1.7, 3.3, 6.1, 8.8}) {
    const auto a = s.at(t - h), b = s.at(t + h), c = s.at(t);
    EXPECT_LT(((b.position - a.position) / (2 * h) - c.velocity).norm(), 1e-6) << t;
    EXPECT_LT(((b.velocity - a.velocity) / (2 * h) - c.acceleration).norm(), 1e-5) << t;
  }
}

TEST_P(AllShapes, PositionIsLipschitzInTime) {
  const ReferenceSampler s(shape(GetParam(), 2.5, 2));
  const double d = 1e-3;
  for (double t = 0.0; t + d <= 10.0; t += 0.0137) {
    EXPECT_LE((s.at(t + d).position - s.at(t).position).norm(), (2.5 + 1e-6) * d);
  }
}

TEST_P(AllShapes, StateHasLevelAttitudeAndNoRotation) {
  const State x = reference_at(shape(GetParam(), 1.0, 1), 4.0);
  EXPECT_EQ(x.q, Eigen::Vector4d(1, 0, 0, 0));
  EXPECT_EQ(x.omega, Eigen::Vector3d::Zero());
}

INSTANTIATE_TEST_SUITE_P(Shapes, AllShapes,
                         ::testing::Values(Shape::circle, Shape::lemniscate, Shape::random),
                         [](const auto& info) { return std::string(shape_name(info.param)); });

TEST(Reference, CircleStartsOnTheXAxis) {
  const ReferenceSampler s(shape(Shape::circle));
  const auto r = s.at(0.0);
  EXPECT_LT((r.position - Eigen::Vector3d(3, 0, 1)).norm(), 1e-12);
  EXPECT_EQ(r.velocity.norm(), 0.0);
  for (double t : {2.5, 7.0}) {
    const auto p = s.at(t).position;
    EXPECT_NEAR(std::hypot(p.x(), p.y()), 3.0, 1e-12);
    EXPECT_NEAR(s.at(t).velocity.norm(), 1.0, 1e-12);
  }
}

TEST(Reference, LemniscateCrossesTheCentre) {
  const ReferenceSampler s(shape(Shape::lemniscate));
  Eigen::Vector3d p, dp, ddp;
  for (double th : {0.0, std::numbers::pi}) {
    s.path(th, p, dp, ddp);
    EXPECT_LT((p - Eigen::Vector3d(0, 0, 1)).norm(), 1e-12);
  }
  s.path(std::numbers::pi / 2, p, dp, ddp);
  EXPECT_NEAR(p.x(), 3.0, 1e-12);
  EXPECT_NEAR(p.y(), 0.0, 1e-12);
}

TEST(Reference, RandomShapeIsSeeded) {
  const ReferenceSampler a(shape(Shape::random, 1.0, 5)), b(shape(Shape::random, 1.0, 5)),
      c(shape(Shape::random, 1.0, 6));
  EXPECT_EQ(a.at(6.0).position, b.at(6.0).position);
  EXPECT_NE(a.at(6.0).position, c.at(6.0).position);
}

TEST(Reference, SamplingBounds) {
  const ReferenceSampler s(shape(Shape::circle));
  EXPECT_THROW(s.at(-1e-3), ConfigError);
  EXPECT_THROW(s.at(10.001), ConfigError);
  EXPECT_EQ(s.at_clamped(12.0).position, s.at(10.0).position);
  ReferenceTrajectory bad = shape(Shape::circle);
  bad.radius = 0.0;
  EXPECT_THROW(ReferenceSampler{bad}, ConfigError);
  EXPECT_EQ(parse_shape("lemniscate"), Shape::lemniscate);
  EXPECT_THROW(parse_shape("square"), ConfigError);
}

// Minimum over every monotone alignment path, by explicit enumeration.
double dtw_bruteforce(const PositionSeries& a, const PositionSeries& b, std::size_t i,
                      std::size_t j) {
  const double here = (a[i] - b[j]).norm();
  if (i + 1 == a.size() && j + 1 == b.size()) return here;
  double best = std::numeric_limits<double>::infinity();
  if (i + 1 < a.size()) best = std::min(best, dtw_bruteforce(a, b, i + 1, j));
  if (j + 1 < b.size()) best = std::min(best, dtw_bruteforce(a, b, i, j + 1));
  if (i + 1 < a.size() && j + 1 < b.size()) {
    best = std::min(best, dtw_bruteforce(a, b, i + 1, j + 1));
  }
  return here + best;
}

PositionSeries line(std::initializer_list<double> xs) {
  PositionSeries s;
  for (double x : xs) s.emplace_back(x, 0.0, 0.0);
  return s;
}

TEST(Metrics, DtwHandExamples) {
  EXPECT_EQ(dtw_distance(line({0, 1, 2}), line({0, 1, 2})), 0.0);
  EXPECT_DOUBLE_EQ(dtw_distance(line({0, 1, 2}), line({0, 2})), 1.0);
  EXPECT_DOUBLE_EQ(dtw_distance(line({0, 0, 0}), line({1})), 3.0);
  // repeated samples are absorbed by warping
  EXPECT_EQ(dtw_distance(line({0, 0, 1, 1, 2}), line({0, 1, 2})), 0.0);
}

TEST(Metrics, DtwMatchesExhaustiveAlignment) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::uniform_int_distribution<int> len(1, 6);
  for (int trial = 0; trial < 200; ++trial) {
    PositionSeries a(len(gen)), b(len(gen));
    for (auto& p : a) p = {d(gen), d(gen), d(gen)};
    for (auto& p : b) p = {d(gen), d(gen), d(gen)};
    EXPECT_NEAR(dtw_distance(a, b), dtw_bruteforce(a, b, 0, 0), 1e-12);
    EXPECT_NEAR(dtw_distance(a, b), dtw_distance(b, a), 1e-12);
  }
}

TEST(Metrics, RmseAndRatios) {
  EXPECT_DOUBLE_EQ(rmse(line({0, 0}), line({3, 4})), std::sqrt(12.5));
  EXPECT_THROW(rmse(line({0}), line({0, 1})), ConfigError);
  EXPECT_THROW(dtw_distance({}, line({0})), ConfigError);
  EXPECT_DOUBLE_EQ(normalized_error(46.07, 100.0), 46.07);
  EXPECT_DOUBLE_EQ(relative_increase(1.5, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(relative_increase(0.5, 1.0), 0.5);
  EXPECT_THROW(normalized_error(1.0, 0.0), ConfigError);
}

TEST(Metrics, LatencyStatistics) {
  EXPECT_DOUBLE_EQ(median_of({3, 1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(median_of({4, 1, 2, 3}), 2.5);
  int calls = 0;
  const LatencyStats s = bench_latency([&] { ++calls; }, 3, 20);
  EXPECT_EQ(calls, 23);
  EXPECT_EQ(s.samples.size(), 20u);
  EXPECT_GE(s.mean, 0.0);
  EXPECT_THROW(bench_latency([] {}, 0, 0), ConfigError);
}

}  // namespace
}  // namespace pinnmpc
