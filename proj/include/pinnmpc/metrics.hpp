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
#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "pinnmpc/errors.hpp"

namespace pinnmpc {

using PositionSeries = std::vector<Eigen::Vector3d>;

/// Convention string embedded in reports next to DTW values.
inline constexpr const char* kDtwConvention =
    "sum of euclidean point distances along the optimal monotone alignment";

/// Dynamic time warping distance with a two-row dynamic program.
inline double dtw_distance(const PositionSeries& a, const PositionSeries& b) {
  if (a.empty() || b.empty()) throw ConfigError("dtw_distance needs non-empty series");
  const std::size_t m = b.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
  prev[0] = 0.0;
  for (const auto& ai : a) {
    cur[0] = inf;
    for (std::size_t j = 1; j <= m; ++j) {
      cur[j] = (ai - b[j - 1]).norm() + std::min({prev[j], cur[j - 1], prev[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

inline double rmse(const PositionSeries& a, const PositionSeries& b) {
  if (a.size() != b.size()) throw ConfigError("rmse needs equal-length series");
  if (a.empty()) throw ConfigError("rmse needs non-empty series");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]).squaredNorm();
  return std::sqrt(s / static_cast<double>(a.size()));
}

/// value as a percentage of baseline.
inline double normalized_error(double value, double baseline) {
  if (!(baseline > 0.0)) throw ConfigError("normalized_error needs baseline > 0");
  return 100.0 * value / baseline;
}

/// |x - ideal| / ideal.
inline double relative_increase(double x, double ideal) {
  if (!(ideal > 0.0)) throw ConfigError("relative_increase needs ideal > 0");
  return std::abs(x - ideal) / ideal;
}

struct LatencyStats {
  double mean = 0.0;    // s
  double median = 0.0;  // s
  std::vector<double> samples;
};

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Wall-clock timing of `fn` after `warmup` untimed calls.
template <class Fn>
LatencyStats bench_latency(Fn&& fn, int warmup, int trials) {
  if (trials < 1) throw ConfigError("bench_latency needs trials >= 1");
  using clock = std::chrono::steady_clock;
  for (int i = 0; i < warmup; ++i) fn();
  LatencyStats s;
  s.samples.reserve(static_cast<std::size_t>(trials));
  for (int i = 0; i < trials; ++i) {
    const auto t0 = clock::now();
    fn();
    const auto t1 = clock::now();
    s.samples.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  double sum = 0.0;
  for (double x : s.samples) sum += x;
  s.mean = sum / trials;
  s.median = median_of(s.samples);
  return s;
}

}  // namespace pinnmpc
