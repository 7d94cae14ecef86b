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


// Command-line front end: gen-data, train, simulate, bench-latency, report.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pinnmpc/harness.hpp"

namespace {

struct CommonOptions {
  std::string config;
  std::vector<std::string> seeds;
  std::string out;
  bool smoke = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON); defaults apply when omitted");
  cmd->add_option("--seed", o.seeds, "seed override name=value (dataset, init, simulation)")
      ->take_all();
  cmd->add_option("--out", o.out, "run directory (overrides output_dir)");
  cmd->add_flag("--smoke", o.smoke, "shrink the experiment to a quick check");
}

pinnmpc::Run make_run(const CommonOptions& o) {
  pinnmpc::ExperimentConfig cfg =
      o.config.empty() ? pinnmpc::ExperimentConfig{} : pinnmpc::load_config(o.config);
  for (const auto& s : o.seeds) pinnmpc::apply_seed_override(cfg, s);
  if (o.smoke) pinnmpc::apply_smoke(cfg);
  if (!o.out.empty()) cfg.output_dir = o.out;
  cfg.validate();
  const std::string dir = cfg.output_dir;
  return pinnmpc::Run(std::move(cfg), dir, &std::cout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-informed predictors for quadrotor model predictive control"};
  app.require_subcommand(1);
  CommonOptions gen, trn, sim, bench;
  std::string report_dir;

  auto* g = app.add_subcommand("gen-data", "write collocation, flight and holdout datasets");
  add_common(g, gen);
  auto* t = app.add_subcommand("train", "train one network per dataset skew");
  add_common(t, trn);
  auto* s = app.add_subcommand("simulate", "closed-loop tracking for every controller");
  add_common(s, sim);
  auto* b = app.add_subcommand("bench-latency", "time one horizon prediction per method");
  add_common(b, bench);
  auto* r = app.add_subcommand("report", "merge a run directory into report files");
  r->add_option("--out", report_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (g->parsed()) {
      pinnmpc::cmd_gen_data(make_run(gen));
    } else if (t->parsed()) {
      pinnmpc::cmd_train(make_run(trn));
    } else if (s->parsed()) {
      const auto runs = pinnmpc::cmd_simulate(make_run(sim));
      for (const auto& m : runs) {
        if (m.diverged) std::cout << "warning: " << m.trajectory << " " << m.controller
                                  << " diverged\n";
      }
    } else if (b->parsed()) {
      pinnmpc::cmd_bench_latency(make_run(bench));
    } else if (r->parsed()) {
      const auto rep = pinnmpc::cmd_report(report_dir);
      std::cout << "report written to " << report_dir << "\n";
      for (const auto& m : rep.at("missing")) std::cout << "missing: " << m.get<std::string>() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
