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

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modsim/engine.hpp"
#include "modsim/event_io.hpp"
#include "modsim/network.hpp"

namespace modsim {

struct NetworkSpec {
  int grid_width = 0;
  int grid_height = 0;
  Time edge_time = 1;
  std::string edge_list;  // used instead of the grid when set
};

struct ScenarioConfig {
  NetworkSpec network;

  int vehicles = 0;
  int capacity = 1;                // forced to 1 in hailing mode
  std::vector<NodeId> positions;   // empty: uniform random from the seed

  double rate = 0.0;               // arrivals per time unit
  std::optional<Time> demand_horizon;  // default: the last revealing batch time
  Time max_wait_min = 0;
  Time max_wait_max = 0;           // equal to min for a constant window
  double detour_factor = 1.5;

  EngineConfig engine;
  std::uint64_t seed = 0;

  Time effective_demand_horizon() const;
};

// Flat `section.key = value` text with `#` comments. Errors name the field.
ScenarioConfig parse_config(const std::string& path);
ScenarioConfig parse_config_text(const std::string& text, const std::string& base_dir = ".");

Network build_network(const ScenarioConfig& cfg);

// Throws ValidationError naming the offending field.
void validate_config(const ScenarioConfig& cfg, const Network& net);

// Poisson arrivals over the demand horizon, times rounded up to integers,
// uniform OD pairs with distinct endpoints. In hailing mode OD pairs are
// resampled until the direct trip is longer than the largest max_wait.
std::vector<Request> generate_demand(const ScenarioConfig& cfg, const Network& net);

std::vector<Vehicle> initial_fleet(const ScenarioConfig& cfg, const Network& net);

struct Metrics {
  std::uint64_t seed = 0;
  std::string mode;
  std::string policy;
  std::int64_t requests = 0;
  std::int64_t served = 0;
  std::int64_t left = 0;
  std::int64_t p_plus = 0;
  std::int64_t p_minus = 0;
  double mean_wait = 0.0;
  double mean_ride = 0.0;
  Time driven = 0;
  std::int64_t wallclock_ms = 0;
};

struct RunOptions {
  bool diagnostics = true;
  bool wallclock = true;  // false: report 0 so outputs are byte-stable
  Engine::GraphSink graph_sink;
};

struct ScenarioRun {
  EventLogHeader header;
  std::vector<Event> events;
  ObjectiveReport objective;
  Metrics metrics;
  SystemState final_state;
  Diagnostics diagnostics;
};

ScenarioRun run_scenario(const ScenarioConfig& cfg, const Network& net,
                         const RunOptions& options = {});

struct TwinEntry {
  std::uint64_t seed = 0;
  bool served_set_equal = true;
  bool left_set_equal = true;
  bool times_equal = true;
  bool odometers_equal = true;
  std::string first_divergence;  // empty when the runs agree
  std::int64_t wallclock_ms = 0;

  bool equal() const {
    return served_set_equal && left_set_equal && times_equal && odometers_equal;
  }
};

struct TwinResult {
  TwinEntry entry;
  ScenarioRun early;
  ScenarioRun walkaway;
};

// Same scenario under EarlyReject and WalkAway.
TwinResult twin_run(const ScenarioConfig& cfg, const Network& net,
                    const RunOptions& options = {});

// Compares final outcomes of two runs of the same scenario.
TwinEntry compare_runs(std::uint64_t seed, const ScenarioRun& a, const ScenarioRun& b);

struct TheoremReport {
  std::int64_t scenarios_run = 0;
  std::vector<TwinEntry> entries;
  std::int64_t total_ms = 0;
  std::int64_t max_ms = 0;

  void add(const TwinEntry& e);
  std::vector<const TwinEntry*> mismatches() const;
  bool ok() const { return mismatches().empty(); }
};

// Runs `count` consecutive seeds starting at cfg.seed, up to `jobs` at a time.
// Results come back in seed order.
std::vector<ScenarioRun> sweep(const ScenarioConfig& cfg, const Network& net, int count,
                               int jobs = 1, const RunOptions& options = {});
TheoremReport twin_sweep(const ScenarioConfig& cfg, const Network& net, int count,
                         int jobs = 1, const RunOptions& options = {},
                         std::vector<TwinResult>* runs = nullptr);

void write_metrics_csv(std::ostream& out, std::span<const Metrics> rows);
void write_theorem_report(std::ostream& out, const TheoremReport& report);

// metrics.csv and, when given, theorem_report.json under `out_dir`.
void emit_metrics(std::span<const Metrics> rows, const TheoremReport* report,
                  const std::string& out_dir);

// events_<seed>_<mode>_<policy>.jsonl under `out_dir`; returns the path.
std::string emit_event_log(const ScenarioRun& run, const std::string& out_dir);

}  // namespace modsim
