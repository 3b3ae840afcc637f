// Copyright 2026 The modsim Authors
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

// modsim: run, twin, sweep and validate fleet-dispatch scenarios.
//
// Exit codes: 0 success, 1 validation or input error, 2 theorem mismatch.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "modsim/event_io.hpp"
#include "modsim/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitMismatch = 2;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string mode;
  std::string policy;
  std::string reassignment;
  bool dump_graphs = false;
  bool no_wallclock = false;
  int seeds = 1;
  int jobs = 0;
};

modsim::ScenarioConfig load(const Options& o) {
  modsim::ScenarioConfig cfg = modsim::parse_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.mode.empty()) cfg.engine.mode = modsim::parse_mode(o.mode, "--mode");
  if (!o.policy.empty()) cfg.engine.policy = modsim::parse_policy(o.policy, "--policy");
  if (!o.reassignment.empty()) {
    cfg.engine.reassignment = modsim::parse_reassignment(o.reassignment, "--reassignment");
  }
  return cfg;
}

int jobs_for(const Options& o) {
  if (o.jobs > 0) return o.jobs;
  return static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
}

modsim::RunOptions run_options(const Options& o) {
  modsim::RunOptions r;
  r.wallclock = !o.no_wallclock;
  return r;
}

void print_metrics(const modsim::Metrics& m) {
  std::cout << "seed " << m.seed << " " << m.mode << "/" << m.policy << ": " << m.requests
            << " requests, " << m.served << " served, " << m.left << " left, p+ " << m.p_plus
            << ", p- " << m.p_minus << "\n";
}

int cmd_validate(const Options& o) {
  const auto cfg = load(o);
  const auto net = modsim::build_network(cfg);
  modsim::validate_config(cfg, net);
  std::cout << o.config << ": ok (" << net.node_count() << " nodes, " << cfg.vehicles
            << " vehicles)\n";
  return kExitOk;
}

int cmd_run(const Options& o) {
  const auto cfg = load(o);
  const auto net = modsim::build_network(cfg);
  auto options = run_options(o);
  std::unique_ptr<std::ofstream> graphs;
  if (o.dump_graphs) {
    std::filesystem::create_directories(o.out);
    const auto path = std::filesystem::path(o.out) /
                      ("graphs_" + std::to_string(cfg.seed) + "_" +
                       std::string(modsim::to_string(cfg.engine.mode)) + "_" +
                       std::string(modsim::to_string(cfg.engine.policy)) + ".jsonl");
    graphs = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*graphs) throw modsim::ModsimError(path.string() + ": cannot open for writing");
    options.graph_sink = [&graphs](int batch, const modsim::BatchDecision& d) {
      modsim::write_batch_graph(*graphs, batch, d);
    };
  }
  const auto run = modsim::run_scenario(cfg, net, options);
  const std::vector<modsim::Metrics> rows{run.metrics};
  modsim::emit_metrics(rows, nullptr, o.out);
  modsim::emit_event_log(run, o.out);
  print_metrics(run.metrics);
  return kExitOk;
}

int cmd_sweep(const Options& o) {
  const auto cfg = load(o);
  const auto net = modsim::build_network(cfg);
  const auto runs = modsim::sweep(cfg, net, o.seeds, jobs_for(o), run_options(o));
  std::vector<modsim::Metrics> rows;
  for (const auto& run : runs) {
    rows.push_back(run.metrics);
    modsim::emit_event_log(run, o.out);
  }
  modsim::emit_metrics(rows, nullptr, o.out);
  std::cout << rows.size() << " scenarios written to " << o.out << "\n";
  return kExitOk;
}

int cmd_twin(const Options& o) {
  const auto cfg = load(o);
  const auto net = modsim::build_network(cfg);
  std::vector<modsim::TwinResult> runs;
  const auto report = modsim::twin_sweep(cfg, net, o.seeds, jobs_for(o), run_options(o), &runs);
  std::vector<modsim::Metrics> rows;
  for (const auto& r : runs) {
    rows.push_back(r.early.metrics);
    rows.push_back(r.walkaway.metrics);
    modsim::emit_event_log(r.early, o.out);
    modsim::emit_event_log(r.walkaway, o.out);
  }
  modsim::emit_metrics(rows, &report, o.out);
  const auto mismatches = report.mismatches();
  std::cout << report.scenarios_run << " twin runs, " << mismatches.size() << " mismatches\n";
  for (const auto* m : mismatches) {
    std::cout << "  seed " << m->seed << ": " << m->first_divergence << "\n";
  }
  return mismatches.empty() ? kExitOk : kExitMismatch;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Batch fleet-dispatch simulator with an early-rejection twin harness"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "Scenario config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Override the config seed");
    sub->add_option("--mode", o.mode, "hailing or pooling");
  };

  auto* run = app.add_subcommand("run", "Run a single scenario");
  common(run);
  run->add_option("--policy", o.policy, "early or walkaway");
  run->add_option("--reassignment", o.reassignment, "allowed or frozen");
  run->add_option("--out", o.out, "Output directory");
  run->add_flag("--dump-graphs", o.dump_graphs, "Write each batch's graph as JSON lines");
  run->add_flag("--no-wallclock", o.no_wallclock, "Report wallclock_ms as 0");

  auto* twin = app.add_subcommand("twin", "Run EarlyReject against WalkAway and compare");
  common(twin);
  twin->add_option("--reassignment", o.reassignment, "allowed or frozen");
  twin->add_option("--seeds", o.seeds, "Number of consecutive seeds")->check(CLI::PositiveNumber);
  twin->add_option("--jobs", o.jobs, "Parallel runs (default: hardware threads)");
  twin->add_option("--out", o.out, "Output directory");
  twin->add_flag("--no-wallclock", o.no_wallclock, "Report wallclock_ms as 0");

  auto* sweep = app.add_subcommand("sweep", "Run a range of seeds");
  common(sweep);
  sweep->add_option("--policy", o.policy, "early or walkaway");
  sweep->add_option("--reassignment", o.reassignment, "allowed or frozen");
  sweep->add_option("--seeds", o.seeds, "Number of consecutive seeds")->check(CLI::PositiveNumber);
  sweep->add_option("--jobs", o.jobs, "Parallel runs (default: hardware threads)");
  sweep->add_option("--out", o.out, "Output directory");
  sweep->add_flag("--no-wallclock", o.no_wallclock, "Report wallclock_ms as 0");

  auto* validate = app.add_subcommand("validate", "Check a config and exit");
  common(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*run) return cmd_run(o);
    if (*twin) return cmd_twin(o);
    if (*sweep) return cmd_sweep(o);
    return cmd_validate(o);
  } catch (const modsim::ValidationError& e) {
    std::cerr << "invalid: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
}
