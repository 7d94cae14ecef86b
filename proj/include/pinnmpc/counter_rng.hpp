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
#include <cstdint>
#include <numbers>

namespace pinnmpc {

/// Key of a counter-based random stream: the same key always yields the
/// same numbers, independent of evaluation order.
struct RngKey {
  std::uint64_t seed = 0;
  std::uint64_t counter = 0;

  friend bool operator==(const RngKey&, const RngKey&) = default;
};

namespace detail {

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_key(const RngKey& key, std::uint64_t lane) {
  return mix64(mix64(mix64(key.seed) ^ key.counter) ^
               (lane * 0xd1b54a32d192ed03ULL));
}

}  // namespace detail

/// Uniform double in (0, 1) for lane `lane` of `key`.
inline double counter_uniform(const RngKey& key, std::uint64_t lane) {
  const std::uint64_t bits = detail::hash_key(key, lane) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// Standard normal variate for component `component` of `key` (Box-Muller
/// on two dedicated lanes).
inline double counter_normal(const RngKey& key, std::uint64_t component) {
  const double u1 = counter_uniform(key, 2 * component);
  const double u2 = counter_uniform(key, 2 * component + 1);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace pinnmpc
