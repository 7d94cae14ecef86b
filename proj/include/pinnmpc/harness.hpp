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


// Experiment commands behind the command-line tool. Each command reads and
// writes files under one run directory; every artifact carries the config
// hash and the seeds that produced it.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pinnmpc/config.hpp"
#include "pinnmpc/counter_rng.hpp"
#include "pinnmpc/metrics.hpp"
#include "pinnmpc/tracking.hpp"

namespace pinnmpc {

namespace fs = std::filesystem;

/// Independent sub-streams of the dataset seed.
enum class SeedStream : std::uint64_t { collocation = 1, flight = 2, holdout = 3 };

inline std::uint64_t derived_seed(std::uint64_t base, SeedStream s) {
  return detail::hash_key(RngKey{base, static_cast<std::uint64_t>(s)}, 0);
}

/// File layout of a run directory.
struct RunPaths {
  fs::path root;

  fs::path config() const { return root / "config.json"; }
  fs::path collocation(const Skew& s) const {
    return root / "data" / ("collocation_" + s.label() + ".csv");
  }
  fs::path flight(const Skew& s) const {
    return root / "data" / ("flight_" + s.label() + ".csv");
  }
  fs::path holdout() const { return root / "data" / "holdout.csv"; }
  fs::path network(const Skew& s) const { return root / ("network_" + s.label() + ".txt"); }
  fs::path history(const Skew& s) const { return root / ("history_" + s.label() + ".csv"); }
  fs::path train_summary(const Skew& s) const {
    return root / ("train_" + s.label() + ".json");
  }
  fs::path tracking(const std::string& traj, const std::string& ctrl) const {
    return root / "tracking" / (traj + "__" + ctrl + ".csv");
  }
  fs::path metrics() const { return root / "metrics.json"; }
  fs::path latency_json() const { return root / "latency.json"; }
  fs::path latency_csv() const { return root / "latency.csv"; }
  fs::path report_json() const { return root / "report.json"; }
  fs::path report_tracking() const { return root / "report_tracking.csv"; }
  fs::path report_relative() const { return root / "report_relative_rmse.csv"; }
};

/// A run: its configuration, directory and the stream receiving progress.
struct Run {
  ExperimentConfig config;
  RunPaths paths;
  std::string hash;
  std::ostream* log = nullptr;

  Run(ExperimentConfig cfg, fs::path root, std::ostream* log_stream = nullptr)
      : config(std::move(cfg)), paths{std::move(root)}, hash(config_hash(config)),
        log(log_stream) {
    config.validate();
  }

  std::vector<std::string> stamp() const {
    const auto& s = config.seeds;
    return {"config_hash " + hash,
            "seeds dataset=" + std::to_string(s.dataset) + " init=" +
                std::to_string(s.init) + " simulation=" + std::to_string(s.simulation),
            std::string("version ") + kVersion};
  }

  Json stamp_json() const {
    return {{"config_hash", hash},
            {"seeds",
             {{"dataset", config.seeds.dataset},
              {"init", config.seeds.init},
              {"simulation", config.seeds.simulation}}},
            {"version", kVersion}};
  }

  void note(const std::string& line) const {
    if (log) *log << line << '\n' << std::flush;
  }
};

namespace detail {

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError("cannot create output directory " + dir.string());
  }
}

inline void write_json(const fs::path& path, const Json& j) {
  ensure_dir(path.parent_path());
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << std::setw(2) << j << '\n';
}

inline Json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path.string());
  try {
    return Json::parse(is);
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + " is not valid JSON: " + e.what());
  }
}

inline void write_config_echo(const Run& run) {
  Json j = to_json(run.config);
  j["config_hash"] = run.hash;
  write_json(run.paths.config(), j);
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string trajectory_label(const ReferenceTrajectory& t) {
  std::string s = shape_name(t.shape);
  if (t.shape != Shape::random) s += "_r" + fmt(t.radius);
  s += "_v" + fmt(t.v_max);
  if (t.shape == Shape::random) s += "_s" + std::to_string(t.seed);
  return s;
}

/// Controller label of the network trained on skew index `i`.
inline std::string ramp_net_label(const std::vector<Skew>& skews, std::size_t i) {
  return i == 0 ? std::string("ramp-net") : "ramp-net@" + skews[i].label();
}

inline void write_failure_dump(const fs::path& path, const Run& run, const std::string& what) {
  ensure_dir(path.parent_path());
  std::ofstream os(path);
  for (const auto& c : run.stamp()) os << "# " << c << '\n';
  os << what << '\n';
}

}  // namespace detail

/// Sample counts per skew plus the shared holdout size.
struct GenDataSummary {
  std::vector<std::pair<Skew, SplitCounts>> counts;
  std::size_t holdout = 0;
};

/// Writes collocation and flight CSVs for every skew and a common flight
/// holdout. Smaller sets are prefixes of larger ones drawn from the same
/// streams, so skews differ only in their mix.
inline GenDataSummary cmd_gen_data(const Run& run) {
  const auto& c = run.config;
  detail::ensure_dir(run.paths.root / "data");
  detail::write_config_echo(run);
  std::size_t max_colloc = 0, max_flight = 0;
  GenDataSummary summary;
  for (const auto& s : c.dataset.skews) {
    const SplitCounts n = split_counts(c.dataset.total_points, s.num, s.den);
    summary.counts.emplace_back(s, n);
    max_colloc = std::max(max_colloc, n.collocation);
    max_flight = std::max(max_flight, n.flight);
  }
  const auto colloc = sample_collocation(max_colloc, c.dataset.sampling, c.dataset.horizon,
                                         c.quad, c.uncertainty_config(),
                                         derived_seed(c.seeds.dataset, SeedStream::collocation));
  const FlightDataConfig fcfg = c.flight_config();
  const auto flight =
      max_flight > 0
          ? collect_flight_data(fcfg, max_flight,
                                derived_seed(c.seeds.dataset, SeedStream::flight))
          : std::vector<FlightSample>{};
  for (const auto& [s, n] : summary.counts) {
    const std::vector<CollocationPoint> cp(colloc.begin(),
                                           colloc.begin() + static_cast<long>(n.collocation));
    const std::vector<FlightSample> fp(flight.begin(),
                                       flight.begin() + static_cast<long>(n.flight));
    auto comments = run.stamp();
    comments.push_back("skew " + s.label());
    write_csv_file(run.paths.collocation(s).string(), collocation_table(cp, comments));
    write_csv_file(run.paths.flight(s).string(), flight_table(fp, c.dataset.horizon, comments));
    run.note("gen-data skew " + s.label() + ": " + std::to_string(n.collocation) +
             " collocation, " + std::to_string(n.flight) + " flight");
  }
  const auto holdout = collect_flight_data(fcfg, c.dataset.holdout_samples,
                                           derived_seed(c.seeds.dataset, SeedStream::holdout));
  write_csv_file(run.paths.holdout().string(),
                 flight_table(holdout, c.dataset.horizon, run.stamp()));
  summary.holdout = holdout.size();
  return summary;
}

inline Dataset load_dataset(const Run& run, const Skew& s) {
  const auto cpath = run.paths.collocation(s), fpath = run.paths.flight(s);
  for (const auto& p : {cpath, fpath}) {
    if (!fs::exists(p)) throw ConfigError("missing dataset file " + p.string() + " (run gen-data)");
  }
  Dataset ds;
  ds.seed = run.config.seeds.dataset;
  ds.collocation = collocation_from_table(read_csv_file(cpath.string()));
  double h = 0.0;
  ds.flight = flight_from_table(read_csv_file(fpath.string()), &h);
  ds.horizon = run.config.dataset.horizon;
  if (!ds.flight.empty() && std::abs(h - ds.horizon) > 1e-12) {
    throw ConfigError("flight file horizon differs from dataset.horizon");
  }
  ds.validate();
  return ds;
}

inline std::vector<FlightSample> load_holdout(const Run& run) {
  const auto p = run.paths.holdout();
  if (!fs::exists(p)) throw ConfigError("missing holdout file " + p.string() + " (run gen-data)");
  return flight_from_table(read_csv_file(p.string()));
}

/// Untrained network with data-fitted scalings.
inline Network prepare_network(const ExperimentConfig& c, const Dataset& ds) {
  Network net(c.network.layer_sizes);
  net.state_passthrough = c.network.state_passthrough;
  net.initialize_glorot(c.seeds.init);
  fit_scaling(net, ds);
  if (c.network.position_input_scale > 0.0) {
    for (int i = 0; i < 3; ++i) net.input_scaling.scale[i] = c.network.position_input_scale;
  }
  return net;
}

/// State errors in units of the output scale, derivative errors in units
/// of output scale per horizon.
inline LossOptions loss_options(const ExperimentConfig& c, const Network& net) {
  LossOptions o;
  o.mode = c.train.residual;
  o.params = c.quad;
  if (c.train.normalize_components) {
    const StateVector s = net.output_scaling.scale;
    o.state_component_weights = s.cwiseAbs2().cwiseInverse();
    o.physics_component_weights =
        o.state_component_weights * (c.dataset.horizon * c.dataset.horizon);
  }
  return o;
}

struct TrainSummary {
  Skew skew;
  TrainResult result;
  double holdout_data_loss = 0.0;  // plain squared norm, comparable across runs
  double seconds = 0.0;
};

inline Json train_summary_json(const Run& run, const TrainSummary& t) {
  const auto& r = t.result;
  Json j = run.stamp_json();
  j["skew"] = t.skew.label();
  j["epochs"] = r.history.size();
  j["best_epoch"] = r.best_epoch;
  j["best_validation"] = r.best_validation;
  j["stop_reason"] = r.stop_reason;
  j["fallback_steps"] = r.fallback_steps;
  j["final_train"] = {{"physics", r.final_train.physics},
                      {"data", r.final_train.data},
                      {"ic", r.final_train.ic}};
  j["final_validation"] = {{"physics", r.final_validation.physics},
                           {"data", r.final_validation.data},
                           {"ic", r.final_validation.ic}};
  j["holdout_data_loss"] = t.holdout_data_loss;
  return j;
}

/// Trains one network per skew and stores it with its loss history.
inline std::vector<TrainSummary> cmd_train(const Run& run) {
  const auto& c = run.config;
  detail::write_config_echo(run);
  const auto holdout = load_holdout(run);
  std::vector<TrainSummary> out;
  for (const auto& s : c.dataset.skews) {
    const Dataset ds = load_dataset(run, s);
    const Network init = prepare_network(c, ds);
    const LossOptions opt = loss_options(c, init);
    TrainConfig tc = c.train.config;
    tc.seed = c.seeds.init;
    TrainSummary summary;
    summary.skew = s;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      summary.result = train(init, ds, tc, opt, [&](const HistoryRow& r) {
        if (r.epoch % 100 == 0) {
          run.note("train " + s.label() + " epoch " + std::to_string(r.epoch) + " L_p " +
                   detail::fmt(r.train.physics) + " L_d " + detail::fmt(r.train.data) +
                   " L_ic " + detail::fmt(r.train.ic) + " val " +
                   detail::fmt(r.validation));
        }
      });
    } catch (const TrainingError& e) {
      const fs::path dump = run.paths.root / ("train_failure_" + s.label() + ".txt");
      detail::write_failure_dump(dump, run, e.what());
      throw TrainingError(std::string(e.what()) + " (diagnostics in " + dump.string() + ")");
    }
    summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    LossOptions plain;
    plain.mode = c.train.residual;
    plain.params = c.quad;
    summary.holdout_data_loss =
        data_loss(summary.result.network, holdout, c.dataset.horizon, plain);
    auto comments = run.stamp();
    comments.push_back("skew " + s.label());
    summary.result.network.save_file(run.paths.network(s).string(), comments);
    write_csv_file(run.paths.history(s).string(),
                   history_table(summary.result.history, comments));
    detail::write_json(run.paths.train_summary(s), train_summary_json(run, summary));
    const auto& f = summary.result.final_train;
    run.note("train " + s.label() + " done: " + std::to_string(summary.result.history.size()) +
             " epochs (" + summary.result.stop_reason + "), L_p " + detail::fmt(f.physics) +
             " L_d " + detail::fmt(f.data) + " L_ic " + detail::fmt(f.ic) +
             ", holdout L_d " + detail::fmt(summary.holdout_data_loss));
    out.push_back(std::move(summary));
  }
  return out;
}

/// Metrics of one closed-loop run.
struct RunMetrics {
  std::string trajectory;
  ReferenceTrajectory reference;
  std::string controller;
  double rmse = 0.0;
  double dtw = 0.0;
  bool diverged = false;
  std::size_t samples = 0;
  double latency_mean = 0.0;    // s
  double latency_median = 0.0;  // s
  double mean_iterations = 0.0;
};

inline Json metrics_json(const RunMetrics& m) {
  return {{"trajectory", m.trajectory},
          {"shape", shape_name(m.reference.shape)},
          {"radius", m.reference.radius},
          {"v_max", m.reference.v_max},
          {"controller", m.controller},
          {"rmse", m.rmse},
          {"dtw", m.dtw},
          {"diverged", m.diverged},
          {"samples", m.samples},
          {"latency_mean_s", m.latency_mean},
          {"latency_median_s", m.latency_median},
          {"mean_iterations", m.mean_iterations}};
}

/// Builds the named controller; ramp-net variants load their network.
inline std::unique_ptr<TrackingController> make_controller(const Run& run,
                                                          const std::string& label) {
  const auto& c = run.config;
  if (label == "ideal") {
    return std::make_unique<MpcController>(
        label, Predictor::true_oracle(c.quad, c.disturbance, c.predictor), c.mpc, c.quad);
  }
  if (label == "nominal") {
    return std::make_unique<MpcController>(label, Predictor::nominal(c.quad, c.predictor),
                                           c.mpc, c.quad);
  }
  if (label == "pid") {
    return std::make_unique<PidTrackingController>(c.pid.gains, c.quad, c.pid.rate);
  }
  for (std::size_t i = 0; i < c.dataset.skews.size(); ++i) {
    if (label != detail::ramp_net_label(c.dataset.skews, i)) continue;
    const auto path = run.paths.network(c.dataset.skews[i]);
    if (!fs::exists(path)) {
      throw ConfigError("missing network " + path.string() + " (run train)");
    }
    auto net = std::make_shared<const Network>(Network::load_file(path.string()));
    return std::make_unique<MpcController>(label, Predictor::pinn(net, c.dataset.horizon),
                                           c.mpc, c.quad);
  }
  throw ConfigError("unknown controller '" + label + "'");
}

/// Controller labels of a suite: ramp-net expands to one entry per skew.
inline std::vector<std::string> controller_labels(const ExperimentConfig& c) {
  std::vector<std::string> out;
  for (const auto& name : c.controllers) {
    if (name != "ramp-net") {
      out.push_back(name);
      continue;
    }
    for (std::size_t i = 0; i < c.dataset.skews.size(); ++i) {
      out.push_back(detail::ramp_net_label(c.dataset.skews, i));
    }
  }
  return out;
}

inline CsvTable tracking_table(const TrackingResult& r, std::vector<std::string> comments) {
  CsvTable t;
  t.comments = std::move(comments);
  t.header = {"t", "ref_x", "ref_y", "ref_z"};
  for (const auto& n : state_column_names()) t.header.push_back(n);
  for (const char* n : {"T0", "T1", "T2", "T3", "latency_s", "iterations"}) t.header.push_back(n);
  for (std::size_t k = 0; k < r.timestamps.size(); ++k) {
    std::vector<double> row{r.timestamps[k], r.reference_positions[k].x(),
                            r.reference_positions[k].y(), r.reference_positions[k].z()};
    const StateVector x = r.states[k].to_vector();
    row.insert(row.end(), x.data(), x.data() + kStateDim);
    row.insert(row.end(), r.controls[k].data(), r.controls[k].data() + kControlDim);
    row.push_back(r.latencies[k]);
    row.push_back(r.iterations[k]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Flies every (trajectory, controller) pair under common simulator noise.
/// Divergence is recorded, not fatal.
inline std::vector<RunMetrics> cmd_simulate(const Run& run) {
  const auto& c = run.config;
  detail::ensure_dir(run.paths.root / "tracking");
  detail::write_config_echo(run);
  const auto labels = controller_labels(c);
  std::vector<std::unique_ptr<TrackingController>> ctrls;
  for (const auto& l : labels) ctrls.push_back(make_controller(run, l));
  std::vector<RunMetrics> all;
  for (const auto& traj : c.trajectories) {
    const std::string tl = detail::trajectory_label(traj);
    for (auto& ctrl : ctrls) {
      const TrackingResult r =
          closed_loop_track(*ctrl, c.sim_config(), traj, traj.duration, c.seeds.simulation);
      RunMetrics m;
      m.trajectory = tl;
      m.reference = traj;
      m.controller = ctrl->name();
      m.rmse = r.position_rmse();
      m.dtw = r.dtw();
      m.diverged = r.diverged;
      m.samples = r.timestamps.size();
      double sum = 0.0, it = 0.0;
      for (double l : r.latencies) sum += l;
      for (int i : r.iterations) it += i;
      m.latency_mean = sum / static_cast<double>(r.latencies.size());
      m.latency_median = median_of(r.latencies);
      m.mean_iterations = it / static_cast<double>(r.iterations.size());
      auto comments = run.stamp();
      comments.push_back("trajectory " + tl + " controller " + m.controller);
      write_csv_file(run.paths.tracking(tl, m.controller).string(), tracking_table(r, comments));
      run.note("simulate " + tl + " " + m.controller + ": rmse " + detail::fmt(m.rmse) +
               " dtw " + detail::fmt(m.dtw) + (m.diverged ? " DIVERGED" : ""));
      all.push_back(m);
    }
  }
  Json j = run.stamp_json();
  j["dtw_convention"] = kDtwConvention;
  j["runs"] = Json::array();
  for (const auto& m : all) j["runs"].push_back(metrics_json(m));
  detail::write_json(run.paths.metrics(), j);
  return all;
}

/// Mean and median wall time of one horizon prediction per method.
struct LatencyTable {
  std::map<std::string, LatencyStats> methods;  // pinn, euler, rk4, rk45
  LatencyStats rk4_double;                      // rk4 at twice the steps
  int steps = 0;
};

inline LatencyTable measure_latency(const ExperimentConfig& c, const Network& net) {
  const double h = c.dataset.horizon;
  const State x0 = State::hover_at({0.5, -0.3, 1.2});
  const ControlVector u = ControlVector::Constant(c.quad.hover_thrust() + 0.05);
  const auto pinn = Predictor::pinn(std::make_shared<const Network>(net), h);
  const NominalModel model{c.quad};
  auto spec = [&](Scheme s, int steps) {
    IntegratorSpec sp;
    sp.scheme = s;
    sp.step = s == Scheme::rk45 ? h : h / steps;
    sp.rel_tol = c.predictor.rel_tol;
    sp.abs_tol = c.predictor.abs_tol;
    return sp;
  };
  volatile double sink = 0.0;
  auto time = [&](auto&& f) {
    return bench_latency([&] { sink = sink + f().p.x(); }, c.bench.warmup, c.bench.trials);
  };
  LatencyTable t;
  t.steps = c.bench.steps;
  t.methods["pinn"] = time([&] { return pinn.step(x0, u, h); });
  for (Scheme s : {Scheme::euler, Scheme::rk4, Scheme::rk45}) {
    const IntegratorSpec sp = spec(s, c.bench.steps);
    t.methods[scheme_name(s)] = time([&] { return integrate(model, x0, u, h, sp); });
  }
  const IntegratorSpec twice = spec(Scheme::rk4, 2 * c.bench.steps);
  t.rk4_double = time([&] { return integrate(model, x0, u, h, twice); });
  return t;
}

inline LatencyTable cmd_bench_latency(const Run& run) {
  const auto& c = run.config;
  detail::write_config_echo(run);
  const auto path = run.paths.network(c.dataset.skews.front());
  if (!fs::exists(path)) throw ConfigError("missing network " + path.string() + " (run train)");
  const LatencyTable t = measure_latency(c, Network::load_file(path.string()));
  Json j = run.stamp_json();
  j["steps_per_horizon"] = t.steps;
  j["trials"] = c.bench.trials;
  for (const auto& [name, s] : t.methods) {
    j["methods"][name] = {{"mean_s", s.mean}, {"median_s", s.median}};
  }
  j["rk4_double_steps"] = {{"mean_s", t.rk4_double.mean}, {"median_s", t.rk4_double.median}};
  detail::write_json(run.paths.latency_json(), j);
  std::ofstream os(run.paths.latency_csv());
  for (const auto& s : run.stamp()) os << "# " << s << '\n';
  os << "statistic,pinn,euler,rk4,rk45\n";
  os << std::setprecision(17);
  for (const char* stat : {"mean", "median"}) {
    os << stat;
    for (const char* m : {"pinn", "euler", "rk4", "rk45"}) {
      const auto& s = t.methods.at(m);
      os << ',' << (std::string(stat) == "mean" ? s.mean : s.median);
    }
    os << '\n';
  }
  run.note("bench-latency: pinn " + detail::fmt(t.methods.at("pinn").mean) + " s, rk4 " +
           detail::fmt(t.methods.at("rk4").mean) + " s at " + std::to_string(t.steps) +
           " steps");
  return t;
}

/// Merges the artifacts of a run directory into report.json and two CSV
/// tables. Only inputs are read, so repeating the report reproduces it.
inline Json cmd_report(const fs::path& dir) {
  const RunPaths paths{dir};
  if (!fs::exists(paths.metrics())) {
    throw ConfigError("no completed experiment in " + dir.string() + "; expected " +
                      paths.metrics().filename().string() + " (simulate), optionally " +
                      paths.config().filename().string() + ", " +
                      paths.latency_json().filename().string() + " and train_*.json");
  }
  Json report;
  report["version"] = kVersion;
  std::vector<std::string> missing;
  const Json metrics = detail::read_json(paths.metrics());
  report["config_hash"] = metrics.value("config_hash", "");
  report["seeds"] = metrics.value("seeds", Json::object());
  if (fs::exists(paths.config())) {
    report["config"] = detail::read_json(paths.config());
  } else {
    missing.push_back(paths.config().filename().string());
  }

  // index by trajectory for normalization
  std::map<std::string, std::map<std::string, Json>> by_traj;
  for (const auto& r : metrics.at("runs")) {
    by_traj[r.at("trajectory").get<std::string>()][r.at("controller").get<std::string>()] = r;
  }
  Json rows = Json::array();
  std::ofstream tcsv(paths.report_tracking());
  tcsv << "# config_hash " << report["config_hash"].get<std::string>() << '\n';
  tcsv << "trajectory,controller,rmse,dtw,dtw_pct_of_nominal,rmse_increase_vs_ideal,diverged\n";
  tcsv << std::setprecision(10);
  std::map<std::string, std::map<std::string, std::vector<double>>> rel;  // shape, ctrl
  for (const auto& r : metrics.at("runs")) {
    const std::string tl = r.at("trajectory");
    const std::string cl = r.at("controller");
    Json row = r;
    const auto& runs = by_traj[tl];
    std::optional<double> pct, inc;
    if (auto it = runs.find("nominal"); it != runs.end() && it->second.at("dtw").get<double>() > 0) {
      pct = normalized_error(r.at("dtw").get<double>(), it->second.at("dtw").get<double>());
    }
    if (auto it = runs.find("ideal"); it != runs.end() && it->second.at("rmse").get<double>() > 0) {
      inc = relative_increase(r.at("rmse").get<double>(), it->second.at("rmse").get<double>());
      if (cl != "ideal") rel[r.at("shape").get<std::string>()][cl].push_back(*inc);
    }
    row["dtw_pct_of_nominal"] = pct ? Json(*pct) : Json(nullptr);
    row["rmse_increase_vs_ideal"] = inc ? Json(*inc) : Json(nullptr);
    rows.push_back(row);
    tcsv << tl << ',' << cl << ',' << r.at("rmse").get<double>() << ','
         << r.at("dtw").get<double>() << ',';
    if (pct) tcsv << *pct;
    tcsv << ',';
    if (inc) tcsv << *inc;
    tcsv << ','
         << (r.at("diverged").get<bool>() ? 1 : 0) << '\n';
  }
  report["tracking"] = rows;

  // relative average RMSE increase over ideal, one row per shape
  std::vector<std::string> ctrls;
  for (const auto& [shape, m] : rel) {
    for (const auto& [cl, v] : m) {
      if (std::find(ctrls.begin(), ctrls.end(), cl) == ctrls.end()) ctrls.push_back(cl);
    }
  }
  std::ofstream rcsv(paths.report_relative());
  rcsv << "# config_hash " << report["config_hash"].get<std::string>() << '\n' << "shape";
  for (const auto& cl : ctrls) rcsv << ',' << cl;
  rcsv << '\n' << std::setprecision(10);
  Json relj = Json::object();
  for (const char* shape : {"random", "circle", "lemniscate"}) {
    auto it = rel.find(shape);
    if (it == rel.end()) continue;
    std::string name = shape;
    name[0] = static_cast<char>(std::toupper(name[0]));
    rcsv << name;
    for (const auto& cl : ctrls) {
      rcsv << ',';
      auto v = it->second.find(cl);
      if (v == it->second.end()) continue;
      double mean = 0.0;
      for (double x : v->second) mean += x;
      mean /= static_cast<double>(v->second.size());
      relj[name][cl] = mean;
      rcsv << mean;
    }
    rcsv << '\n';
  }
  report["relative_rmse_increase"] = relj;

  if (fs::exists(paths.latency_json())) {
    report["latency"] = detail::read_json(paths.latency_json());
  } else {
    missing.push_back(paths.latency_json().filename().string());
  }
  Json training = Json::object();
  std::vector<fs::path> summaries;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string n = e.path().filename().string();
    if (n.rfind("train_", 0) == 0 && e.path().extension() == ".json") summaries.push_back(e.path());
  }
  std::sort(summaries.begin(), summaries.end());
  for (const auto& p : summaries) {
    const Json t = detail::read_json(p);
    training[t.value("skew", p.stem().string())] = t;
  }
  if (summaries.empty()) missing.push_back("train_*.json");
  report["training"] = training;
  report["missing"] = missing;
  detail::write_json(paths.report_json(), report);
  return report;
}

}  // namespace pinnmpc
