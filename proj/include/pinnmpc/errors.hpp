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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pinnmpc {

/// Input contained NaN or infinity.
class NonFiniteError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A quaternion that must be unit length is not.
class NormalizationError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid configuration value.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// API misuse, e.g. backward() without a recorded forward trace.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Adaptive integration ran out of steps.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double last_accepted_time)
      : std::runtime_error(what), last_accepted_time_(last_accepted_time) {}

  double last_accepted_time() const { return last_accepted_time_; }

 private:
  double last_accepted_time_;
};

/// An integration error raised while propagating a multi-node rollout.
class RolloutError : public IntegrationError {
 public:
  RolloutError(const std::string& what, double last_accepted_time,
               std::size_t node)
      : IntegrationError(what, last_accepted_time), node_(node) {}

  std::size_t node() const { return node_; }

 private:
  std::size_t node_;
};

/// MPC predictor failed mid-rollout.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::size_t node)
      : std::runtime_error(what), node_(node) {}

  std::size_t node() const { return node_; }

 private:
  std::size_t node_;
};

/// Training aborted (non-finite loss).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pinnmpc
