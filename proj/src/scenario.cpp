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

#include "modsim/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace modsim {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config

Time ScenarioConfig::effective_demand_horizon() const {
  if (demand_horizon) return *demand_horizon;
  return static_cast<Time>(engine.horizon - 1) * engine.batch_interval;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename Int>
Int to_int(const std::string& key, const std::string& value) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ValidationError(key, "expected an integer, got '" + value + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  double out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
    throw ValidationError(key, "expected a number, got '" + value + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ValidationError(key, "expected true or false, got '" + value + "'");
}

std::vector<NodeId> to_node_list(const std::string& key, const std::string& value) {
  std::vector<NodeId> out;
  std::string token;
  std::istringstream in(value);
  while (in >> token) {
    if (!token.empty() && token.back() == ',') token.pop_back();
    if (!token.empty()) out.push_back(to_int<NodeId>(key, token));
  }
  return out;
}

}  // namespace

ScenarioConfig parse_config_text(const std::string& text, const std::string& base_dir) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("line " + std::to_string(number), "expected `key = value`");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ValidationError("line " + std::to_string(number), "empty key");
    if (!kv.emplace(key, value).second) throw ValidationError(key, "given more than once");
  }

  ScenarioConfig cfg;
  bool have_horizon = false, have_vehicles = false, have_rate = false;
  bool have_wait = false, have_wait_min = false, have_wait_max = false;
  for (const auto& [key, value] : kv) {
    if (key == "network.width") cfg.network.grid_width = to_int<int>(key, value);
    else if (key == "network.height") cfg.network.grid_height = to_int<int>(key, value);
    else if (key == "network.edge_time") cfg.network.edge_time = to_int<Time>(key, value);
    else if (key == "network.edge_list") {
      const fs::path p(value);
      cfg.network.edge_list = p.is_absolute() ? value : (fs::path(base_dir) / p).string();
    } else if (key == "fleet.vehicles") {
      cfg.vehicles = to_int<int>(key, value);
      have_vehicles = true;
    } else if (key == "fleet.capacity") cfg.capacity = to_int<int>(key, value);
    else if (key == "fleet.positions") cfg.positions = to_node_list(key, value);
    else if (key == "demand.rate") {
      cfg.rate = to_double(key, value);
      have_rate = true;
    } else if (key == "demand.horizon") cfg.demand_horizon = to_int<Time>(key, value);
    else if (key == "demand.max_wait") {
      cfg.max_wait_min = cfg.max_wait_max = to_int<Time>(key, value);
      have_wait = true;
    } else if (key == "demand.max_wait_min") {
      cfg.max_wait_min = to_int<Time>(key, value);
      have_wait_min = true;
    } else if (key == "demand.max_wait_max") {
      cfg.max_wait_max = to_int<Time>(key, value);
      have_wait_max = true;
    } else if (key == "demand.detour_factor") cfg.detour_factor = to_double(key, value);
    else if (key == "engine.batch_interval") cfg.engine.batch_interval = to_int<Time>(key, value);
    else if (key == "engine.horizon") {
      cfg.engine.horizon = to_int<int>(key, value);
      have_horizon = true;
    } else if (key == "engine.mode") cfg.engine.mode = parse_mode(value, key);
    else if (key == "engine.policy") cfg.engine.policy = parse_policy(value, key);
    else if (key == "engine.reassignment") cfg.engine.reassignment = parse_reassignment(value, key);
    else if (key == "engine.w_dist") cfg.engine.weights.dist = to_int<Cost>(key, value);
    else if (key == "engine.w_wait") cfg.engine.weights.wait = to_int<Cost>(key, value);
    else if (key == "engine.w_ride") cfg.engine.weights.ride = to_int<Cost>(key, value);
    else if (key == "engine.max_bundle_size") cfg.engine.max_bundle_size = to_int<int>(key, value);
    else if (key == "engine.drain") cfg.engine.drain = to_bool(key, value);
    else if (key == "seed") cfg.seed = to_int<std::uint64_t>(key, value);
    else throw ValidationError(key, "unknown key");
  }

  if (cfg.network.edge_list.empty() && !kv.count("network.width")) {
    throw ValidationError("network.width", "missing (or give network.edge_list)");
  }
  if (cfg.network.edge_list.empty() && !kv.count("network.height")) {
    throw ValidationError("network.height", "missing (or give network.edge_list)");
  }
  if (!have_vehicles) throw ValidationError("fleet.vehicles", "missing");
  if (!have_rate) throw ValidationError("demand.rate", "missing");
  if (!have_horizon) throw ValidationError("engine.horizon", "missing");
  if (have_wait && (have_wait_min || have_wait_max)) {
    throw ValidationError("demand.max_wait", "give either max_wait or max_wait_min/max_wait_max");
  }
  if (!have_wait && !(have_wait_min && have_wait_max)) {
    throw ValidationError("demand.max_wait", "missing");
  }
  validate_config(cfg, build_network(cfg));
  return cfg;
}

ScenarioConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config", "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), fs::path(path).parent_path().string());
}

Network build_network(const ScenarioConfig& cfg) {
  if (!cfg.network.edge_list.empty()) return load_edge_list(cfg.network.edge_list);
  return build_grid(cfg.network.grid_width, cfg.network.grid_height, cfg.network.edge_time);
}

void validate_config(const ScenarioConfig& cfg, const Network& net) {
  cfg.engine.validate();
  if (cfg.vehicles < 0) throw ValidationError("fleet.vehicles", "must be non-negative");
  if (cfg.capacity < 1) throw ValidationError("fleet.capacity", "must be at least 1");
  if (!cfg.positions.empty()) {
    if (cfg.positions.size() != static_cast<std::size_t>(cfg.vehicles)) {
      throw ValidationError("fleet.positions", "needs one node per vehicle");
    }
    for (NodeId n : cfg.positions) {
      if (!net.has_node(n)) throw ValidationError("fleet.positions", "unknown node " + std::to_string(n));
    }
  }
  if (!(cfg.rate >= 0)) throw ValidationError("demand.rate", "must be non-negative");
  const Time horizon = cfg.effective_demand_horizon();
  if (horizon < 0) throw ValidationError("demand.horizon", "must be non-negative");
  if (cfg.rate > 0 && horizon == 0) {
    throw ValidationError("demand.horizon", "must be positive when demand.rate > 0");
  }
  const Time last_batch = static_cast<Time>(cfg.engine.horizon - 1) * cfg.engine.batch_interval;
  if (horizon > last_batch) {
    throw ValidationError("demand.horizon", "exceeds the last batch time " + std::to_string(last_batch));
  }
  if (cfg.max_wait_min < 1) throw ValidationError("demand.max_wait", "must be at least 1");
  if (cfg.max_wait_max < cfg.max_wait_min) {
    throw ValidationError("demand.max_wait_max", "must not be below demand.max_wait_min");
  }
  if (!(cfg.detour_factor >= 1.0)) throw ValidationError("demand.detour_factor", "must be at least 1");
  if (net.node_count() < 2 && cfg.rate > 0) {
    throw ValidationError("network", "demand needs at least two nodes");
  }
  if (cfg.engine.mode == Mode::kHailing && cfg.rate > 0 && net.diameter() <= cfg.max_wait_max) {
    throw ValidationError("demand.max_wait",
                          "hailing requires trips longer than the maximum waiting time, but no "
                          "trip in the network exceeds " + std::to_string(cfg.max_wait_max));
  }
}

// ---------------------------------------------------------------------------
// Demand and fleet

std::vector<Request> generate_demand(const ScenarioConfig& cfg, const Network& net) {
  validate_config(cfg, net);
  std::vector<Request> out;
  if (cfg.rate <= 0) return out;
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    0x64656dU};
  std::mt19937_64 rng(seq);
  std::exponential_distribution<double> gap(cfg.rate);
  std::uniform_int_distribution<std::size_t> node(0, net.node_count() - 1);
  std::uniform_int_distribution<Time> wait(cfg.max_wait_min, cfg.max_wait_max);
  const auto& nodes = net.nodes();
  const Time horizon = cfg.effective_demand_horizon();
  constexpr int kMaxDraws = 100000;

  double clock = 0.0;
  for (;;) {
    clock += gap(rng);
    if (clock > static_cast<double>(horizon)) break;
    Request r;
    r.id = static_cast<RequestId>(out.size());
    r.request_time = static_cast<Time>(std::ceil(clock));
    int draws = 0;
    for (;; ++draws) {
      if (draws == kMaxDraws) {
        throw ValidationError("demand.max_wait", "could not draw a trip longer than the maximum wait");
      }
      r.origin = nodes[node(rng)];
      r.destination = nodes[node(rng)];
      if (r.origin == r.destination) continue;
      if (cfg.engine.mode == Mode::kHailing &&
          net.travel_time(r.origin, r.destination) <= cfg.max_wait_max) {
        continue;
      }
      break;
    }
    r.max_wait = wait(rng);
    r.max_ride = max_ride_for(net.travel_time(r.origin, r.destination), cfg.detour_factor);
    out.push_back(r);
  }
  return out;
}

std::vector<Vehicle> initial_fleet(const ScenarioConfig& cfg, const Network& net) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    0x666c74U};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<std::size_t> node(0, net.node_count() - 1);
  std::vector<Vehicle> fleet;
  for (int i = 0; i < cfg.vehicles; ++i) {
    Vehicle v;
    v.id = i;
    v.position = cfg.positions.empty() ? net.nodes()[node(rng)] : cfg.positions[static_cast<std::size_t>(i)];
    v.capacity = cfg.engine.mode == Mode::kHailing ? 1 : cfg.capacity;
    fleet.push_back(std::move(v));
  }
  return fleet;
}

// ---------------------------------------------------------------------------
// Runs

ScenarioRun run_scenario(const ScenarioConfig& cfg, const Network& net, const RunOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  auto demand = generate_demand(cfg, net);
  auto fleet = initial_fleet(cfg, net);

  ScenarioRun run;
  run.header.seed = cfg.seed;
  run.header.mode = std::string(to_string(cfg.engine.mode));
  run.header.policy = std::string(to_string(cfg.engine.policy));
  for (const Vehicle& v : fleet) run.header.vehicle_positions.push_back(v.position);

  Engine engine(SystemState(std::move(demand), std::move(fleet)), cfg.engine, net, options.diagnostics);
  if (options.graph_sink) engine.set_graph_sink(options.graph_sink);
  engine.run();

  run.events = engine.events();
  run.final_state = engine.state();
  run.diagnostics = engine.diagnostics();
  run.objective = engine.objective();

  Metrics& m = run.metrics;
  m.seed = cfg.seed;
  m.mode = run.header.mode;
  m.policy = run.header.policy;
  std::int64_t picked = 0, dropped = 0;
  for (const Event& e : run.events) {
    if (e.kind == EventKind::kRevealed) ++m.requests;
    if (e.kind == EventKind::kPickedUp) ++picked;
    if (e.kind == EventKind::kDroppedOff) ++dropped;
  }
  for (const Request& r : run.final_state.requests) {
    if (r.status == RequestStatus::kServed) ++m.served;
    if (r.status == RequestStatus::kLeft) ++m.left;
  }
  m.p_plus = run.objective.p_plus_count;
  m.p_minus = run.objective.p_minus_count;
  m.mean_wait = picked ? static_cast<double>(run.objective.total_wait) / static_cast<double>(picked) : 0.0;
  m.mean_ride = dropped ? static_cast<double>(run.objective.total_ride) / static_cast<double>(dropped) : 0.0;
  m.driven = run.objective.driven;
  if (options.wallclock) {
    m.wallclock_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - started)
                         .count();
  }
  return run;
}

TwinEntry compare_runs(std::uint64_t seed, const ScenarioRun& a, const ScenarioRun& b) {
  TwinEntry e;
  e.seed = seed;
  const auto& ra = a.final_state.requests;
  const auto& rb = b.final_state.requests;
  auto note = [&](std::string text) {
    if (e.first_divergence.empty()) e.first_divergence = std::move(text);
  };
  auto describe = [](const Request& r) {
    switch (r.status) {
      case RequestStatus::kServed:
        return "served " + std::to_string(r.pickup_time) + "->" + std::to_string(r.dropoff_time);
      case RequestStatus::kLeft: return std::string("left");
      default: return std::string(to_string(r.status));
    }
  };
  if (ra.size() != rb.size()) {
    e.served_set_equal = e.left_set_equal = false;
    note("request counts differ: " + std::to_string(ra.size()) + " vs " + std::to_string(rb.size()));
  }
  for (std::size_t i = 0; i < std::min(ra.size(), rb.size()); ++i) {
    const Request& x = ra[i];
    const Request& y = rb[i];
    const bool sx = x.status == RequestStatus::kServed, sy = y.status == RequestStatus::kServed;
    const bool lx = x.status == RequestStatus::kLeft, ly = y.status == RequestStatus::kLeft;
    bool same = true;
    if (sx != sy) e.served_set_equal = same = false;
    if (lx != ly) e.left_set_equal = same = false;
    if (x.pickup_time != y.pickup_time || x.dropoff_time != y.dropoff_time) {
      e.times_equal = same = false;
    }
    if (!same) {
      note("request " + std::to_string(x.id) + ": " + describe(x) + " under " + a.header.policy +
           ", " + describe(y) + " under " + b.header.policy);
    }
  }
  const auto& va = a.final_state.vehicles;
  const auto& vb = b.final_state.vehicles;
  for (std::size_t i = 0; i < std::min(va.size(), vb.size()); ++i) {
    if (va[i].odometer != vb[i].odometer) {
      e.odometers_equal = false;
      note("vehicle " + std::to_string(va[i].id) + ": odometer " + std::to_string(va[i].odometer) +
           " vs " + std::to_string(vb[i].odometer));
    }
  }
  if (va.size() != vb.size()) {
    e.odometers_equal = false;
    note("fleet sizes differ");
  }
  return e;
}

TwinResult twin_run(const ScenarioConfig& cfg, const Network& net, const RunOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  ScenarioConfig early = cfg;
  early.engine.policy = RejectionPolicy::kEarlyReject;
  ScenarioConfig walk = cfg;
  walk.engine.policy = RejectionPolicy::kWalkAway;
  TwinResult out;
  out.early = run_scenario(early, net, options);
  out.walkaway = run_scenario(walk, net, options);
  out.entry = compare_runs(cfg.seed, out.early, out.walkaway);
  if (options.wallclock) {
    out.entry.wallclock_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - started)
                                 .count();
  }
  return out;
}

void TheoremReport::add(const TwinEntry& e) {
  ++scenarios_run;
  total_ms += e.wallclock_ms;
  max_ms = std::max(max_ms, e.wallclock_ms);
  entries.push_back(e);
}

std::vector<const TwinEntry*> TheoremReport::mismatches() const {
  std::vector<const TwinEntry*> out;
  for (const TwinEntry& e : entries) {
    if (!e.equal()) out.push_back(&e);
  }
  return out;
}

namespace {

// Calls fn(i) for i in [0, count) on up to `jobs` threads.
template <typename Fn>
void parallel_for(int count, int jobs, Fn&& fn) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::vector<ScenarioRun> sweep(const ScenarioConfig& cfg, const Network& net, int count, int jobs,
                               const RunOptions& options) {
  std::vector<ScenarioRun> out(static_cast<std::size_t>(std::max(count, 0)));
  parallel_for(count, jobs, [&](int i) {
    ScenarioConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(i);
    out[static_cast<std::size_t>(i)] = run_scenario(c, net, options);
  });
  return out;
}

TheoremReport twin_sweep(const ScenarioConfig& cfg, const Network& net, int count, int jobs,
                         const RunOptions& options, std::vector<TwinResult>* runs) {
  std::vector<TwinResult> results(static_cast<std::size_t>(std::max(count, 0)));
  parallel_for(count, jobs, [&](int i) {
    ScenarioConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(i);
    results[static_cast<std::size_t>(i)] = twin_run(c, net, options);
  });
  TheoremReport report;
  for (const TwinResult& r : results) report.add(r.entry);
  if (runs) *runs = std::move(results);
  return report;
}

// ---------------------------------------------------------------------------
// Output

void write_metrics_csv(std::ostream& out, std::span<const Metrics> rows) {
  out << "seed,mode,policy,requests,served,left,p_plus,p_minus,mean_wait,mean_ride,driven,wallclock_ms\n";
  char wait[32], ride[32];
  for (const Metrics& m : rows) {
    std::snprintf(wait, sizeof wait, "%.4f", m.mean_wait);
    std::snprintf(ride, sizeof ride, "%.4f", m.mean_ride);
    out << m.seed << ',' << m.mode << ',' << m.policy << ',' << m.requests << ',' << m.served << ','
        << m.left << ',' << m.p_plus << ',' << m.p_minus << ',' << wait << ',' << ride << ','
        << m.driven << ',' << m.wallclock_ms << '\n';
  }
}

void write_theorem_report(std::ostream& out, const TheoremReport& report) {
  nlohmann::ordered_json j;
  j["scenarios_run"] = report.scenarios_run;
  auto mismatches = nlohmann::ordered_json::array();
  for (const TwinEntry* e : report.mismatches()) {
    mismatches.push_back({{"seed", e->seed}, {"first_divergence", e->first_divergence}});
  }
  j["mismatches"] = std::move(mismatches);
  auto scenarios = nlohmann::ordered_json::array();
  for (const TwinEntry& e : report.entries) {
    scenarios.push_back({{"seed", e.seed},
                         {"served_set_equal", e.served_set_equal},
                         {"left_set_equal", e.left_set_equal},
                         {"times_equal", e.times_equal},
                         {"odometers_equal", e.odometers_equal},
                         {"wallclock_ms", e.wallclock_ms}});
  }
  j["scenarios"] = std::move(scenarios);
  j["timing"] = {{"total_ms", report.total_ms}, {"max_ms", report.max_ms}};
  out << j.dump(2) << '\n';
}

namespace {

std::ofstream open_output(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw ModsimError(path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModsimError(path.string() + ": cannot open for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw ModsimError(path.string() + ": write failed");
}

}  // namespace

void emit_metrics(std::span<const Metrics> rows, const TheoremReport* report,
                  const std::string& out_dir) {
  const fs::path csv = fs::path(out_dir) / "metrics.csv";
  auto out = open_output(csv);
  write_metrics_csv(out, rows);
  finish(out, csv);
  if (report) {
    const fs::path json = fs::path(out_dir) / "theorem_report.json";
    auto rep = open_output(json);
    write_theorem_report(rep, *report);
    finish(rep, json);
  }
}

std::string emit_event_log(const ScenarioRun& run, const std::string& out_dir) {
  const fs::path path = fs::path(out_dir) / ("events_" + std::to_string(run.header.seed) + "_" +
                                             run.header.mode + "_" + run.header.policy + ".jsonl");
  auto out = open_output(path);
  write_event_log(out, run.header, run.events);
  finish(out, path);
  return path.string();
}

}  // namespace modsim
