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
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pinnmpc/dataset.hpp"
#include "pinnmpc/errors.hpp"
#include "pinnmpc/lbfgs.hpp"
#include "pinnmpc/losses.hpp"
#include "pinnmpc/network.hpp"

namespace pinnmpc {

enum class Optimizer { lbfgs, gradient_descent };

inline Optimizer parse_optimizer(const std::string& s) {
  if (s == "lbfgs") return Optimizer::lbfgs;
  if (s == "gradient-descent") return Optimizer::gradient_descent;
  throw ConfigError("unknown optimizer '" + s + "'");
}

inline const char* optimizer_name(Optimizer o) {
  return o == Optimizer::lbfgs ? "lbfgs" : "gradient-descent";
}

struct TrainConfig {
  int max_epochs = 2000;
  int patience = 500;
  Optimizer optimizer = Optimizer::lbfgs;
  int history_size = 50;
  double learning_rate = 1.0;
  LossWeights loss_weights;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (patience < 0 || patience >= max_epochs) {
      throw ConfigError("patience must lie in [0, max_epochs)");
    }
    if (history_size < 1) throw ConfigError("history_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
      throw ConfigError("validation_fraction must lie in [0, 1)");
    }
    loss_weights.validate();
  }
};

struct HistoryRow {
  int epoch = 0;
  LossTerms train;
  double total = 0.0;
  double validation = 0.0;
  bool fallback = false;
};

struct TrainResult {
  Network network;  // parameters with the best validation loss
  std::vector<HistoryRow> history;
  int best_epoch = 0;  // 0: the initial parameters were never improved on
  double best_validation = 0.0;
  int fallback_steps = 0;
  std::string stop_reason;
  LossTerms final_train;       // terms of the returned network
  LossTerms final_validation;
};

/// Seeded split of a dataset into training and validation parts; each of
/// 𝒫 and 𝒟 contributes round(fraction * size) validation entries.
struct DatasetSplit {
  Dataset train;
  Dataset validation;
};

inline DatasetSplit split_dataset(const Dataset& ds, double fraction,
                                  std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  auto split = [&](const auto& items, auto& train, auto& val) {
    std::vector<std::size_t> idx(items.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), gen);
    const auto n_val = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(items.size())));
    std::vector<std::size_t> v(idx.begin(), idx.begin() + n_val);
    std::vector<std::size_t> t(idx.begin() + n_val, idx.end());
    std::sort(v.begin(), v.end());
    std::sort(t.begin(), t.end());
    for (auto i : v) val.push_back(items[i]);
    for (auto i : t) train.push_back(items[i]);
  };
  DatasetSplit out;
  out.train.horizon = out.validation.horizon = ds.horizon;
  out.train.seed = out.validation.seed = ds.seed;
  split(ds.collocation, out.train.collocation, out.validation.collocation);
  split(ds.flight, out.train.flight, out.validation.flight);
  return out;
}

/// Sets input standardization from the dataset and an output map suited to
/// the network's parameterization: with passthrough the output is an
/// increment scaled by horizon * rms(target derivative), otherwise a state
/// standardized like the inputs.
inline void fit_scaling(Network& net, const Dataset& ds) {
  ds.validate();
  std::vector<Eigen::VectorXd> cols;
  for (const auto& p : ds.collocation) cols.push_back(network_input(p.x, p.u, p.t));
  for (const auto& s : ds.flight) cols.push_back(network_input(s.x, s.u, ds.horizon));
  Eigen::MatrixXd m(kNetworkInputs, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) m.col(j) = cols[j];
  const Eigen::VectorXd mean = m.rowwise().mean();
  Eigen::VectorXd sd = ((m.colwise() - mean).array().square().rowwise().mean()).sqrt();
  for (Eigen::Index i = 0; i < sd.size(); ++i) {
    if (!(sd[i] > 1e-8)) sd[i] = 1.0;
  }
  net.input_scaling = {mean, sd};
  net.input_scaling.shift[kTimeInput] = 0.0;
  net.input_scaling.scale[kTimeInput] = ds.horizon;
  if (net.state_passthrough) {
    Eigen::VectorXd rms = Eigen::VectorXd::Zero(kStateDim);
    for (const auto& p : ds.collocation) rms += p.target.to_vector().array().square().matrix();
    rms = (rms / static_cast<double>(ds.collocation.size())).cwiseSqrt() * ds.horizon;
    for (Eigen::Index i = 0; i < rms.size(); ++i) {
      if (!(rms[i] > 1e-12)) rms[i] = 1.0;
    }
    net.output_scaling = {Eigen::VectorXd::Zero(kStateDim), rms};
  } else {
    net.output_scaling = {mean.head(kStateDim), sd.head(kStateDim)};
  }
  net.validate();
}

/// Full-batch training with early stopping on the validation composite
/// loss (the training loss when the validation split is empty). Every
/// epoch is one optimizer iteration. `on_epoch` may observe progress.
inline TrainResult train(Network net, const Dataset& ds, const TrainConfig& cfg,
                         const LossOptions& opt = {},
                         const std::function<void(const HistoryRow&)>& on_epoch = {}) {
  cfg.validate();
  opt.validate();
  ds.validate();
  net.validate();
  const DatasetSplit split = split_dataset(ds, cfg.validation_fraction, cfg.seed);
  if (split.train.collocation.empty()) {
    throw ConfigError("training split has no collocation points");
  }
  const LossBatch train_batch = LossBatch::build(split.train, opt.params);
  const LossBatch val_batch = LossBatch::build(split.validation, opt.params);
  const bool has_val = val_batch.collocation_count() + val_batch.flight_count() > 0;

  auto objective = [&](const Eigen::VectorXd& theta) {
    Network trial = net;
    trial.parameters() = theta;
    return composite_loss(trial, train_batch, cfg.loss_weights, opt, true);
  };
  auto validation_loss = [&](const Network& n, double train_total) {
    if (!has_val) return train_total;
    return composite_loss(n, val_batch, cfg.loss_weights, opt, false).value;
  };
  auto diagnose = [&](int epoch, const LossEvaluation& ev) {
    std::ostringstream os;
    os << "non-finite training loss at epoch " << epoch << ": L_p=" << ev.terms.physics
       << " L_d=" << ev.terms.data << " L_ic=" << ev.terms.ic
       << " |theta|=" << net.parameters().norm();
    return os.str();
  };

  TrainResult result;
  Eigen::VectorXd theta = net.parameters();
  LossEvaluation current = objective(theta);
  if (!std::isfinite(current.value) || !current.gradient.allFinite()) {
    throw TrainingError(diagnose(0, current));
  }
  double best = validation_loss(net, current.value);
  Eigen::VectorXd best_theta = theta;
  int stale = 0;

  LbfgsOptions lopt;
  lopt.history_size = cfg.history_size;
  lopt.initial_step = cfg.learning_rate;
  LbfgsMinimizer<LossEvaluation> lbfgs(lopt);

  result.stop_reason = "max_epochs";
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    HistoryRow row;
    row.epoch = epoch;
    if (cfg.optimizer == Optimizer::lbfgs) {
      row.fallback = lbfgs.iterate(objective, theta, current) == StepKind::fallback;
    } else {
      theta -= cfg.learning_rate * current.gradient;
      current = objective(theta);
    }
    if (!std::isfinite(current.value) || !current.gradient.allFinite()) {
      throw TrainingError(diagnose(epoch, current));
    }
    net.parameters() = theta;
    row.train = current.terms;
    row.total = current.value;
    row.validation = validation_loss(net, current.value);
    if (row.fallback) ++result.fallback_steps;
    result.history.push_back(row);
    if (on_epoch) on_epoch(row);
    if (row.validation < best) {
      best = row.validation;
      best_theta = theta;
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale > cfg.patience) {
      result.stop_reason = "early_stopping";
      break;
    }
  }
  net.parameters() = best_theta;
  result.best_validation = best;
  result.final_train = evaluate_terms(net, train_batch, opt);
  if (has_val) result.final_validation = evaluate_terms(net, val_batch, opt);
  result.network = std::move(net);
  return result;
}

inline CsvTable history_table(const std::vector<HistoryRow>& history,
                              std::vector<std::string> comments = {}) {
  CsvTable t{std::move(comments), {"epoch", "L_p", "L_d", "L_ic", "total", "validation"}, {}};
  for (const auto& r : history) {
    t.rows.push_back({static_cast<double>(r.epoch), r.train.physics, r.train.data,
                      r.train.ic, r.total, r.validation});
  }
  return t;
}

}  // namespace pinnmpc
