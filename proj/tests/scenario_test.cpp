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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "modsim/event_io.hpp"
#include "modsim/scenario.hpp"

namespace {

using namespace modsim;
namespace fs = std::filesystem;

const char* kBase = R"(
network.width = 6
network.height = 6
fleet.vehicles = 4
demand.rate = 1.0
demand.max_wait_min = 2
demand.max_wait_max = 4
engine.horizon = 30
seed = 3
)";

std::string with(const std::string& extra) { return std::string(kBase) + extra; }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("modsim_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

TEST(Config, Defaults) {
  const ScenarioConfig c = parse_config_text(kBase);
  EXPECT_EQ(c.network.grid_width, 6);
  EXPECT_EQ(c.network.edge_time, 1);
  EXPECT_EQ(c.capacity, 1);
  EXPECT_DOUBLE_EQ(c.detour_factor, 1.5);
  EXPECT_EQ(c.engine.batch_interval, 1);
  EXPECT_EQ(c.engine.mode, Mode::kHailing);
  EXPECT_EQ(c.engine.policy, RejectionPolicy::kEarlyReject);
  EXPECT_EQ(c.engine.reassignment, Reassignment::kAllowed);
  EXPECT_EQ(c.engine.weights.dist, 1);
  EXPECT_EQ(c.engine.max_bundle_size, 3);
  EXPECT_TRUE(c.engine.drain);
  EXPECT_EQ(c.effective_demand_horizon(), 29);
  EXPECT_EQ(c.seed, 3U);
}

TEST(Config, ParsesEveryKey) {
  const ScenarioConfig c = parse_config_text(R"(
network.width = 5   # comment
network.height = 4
network.edge_time = 2
fleet.vehicles = 2
fleet.capacity = 3
fleet.positions = 0, 7
demand.rate = 0.5
demand.horizon = 10
demand.max_wait = 3
demand.detour_factor = 2.0
engine.batch_interval = 2
engine.horizon = 8
engine.mode = pooling
engine.policy = walkaway
engine.reassignment = frozen
engine.w_dist = 2
engine.w_wait = 3
engine.w_ride = 4
engine.max_bundle_size = 2
engine.drain = false
seed = 12345678901
)");
  EXPECT_EQ(c.network.edge_time, 2);
  EXPECT_EQ(c.positions, (std::vector<NodeId>{0, 7}));
  EXPECT_EQ(c.max_wait_min, 3);
  EXPECT_EQ(c.max_wait_max, 3);
  EXPECT_EQ(c.effective_demand_horizon(), 10);
  EXPECT_EQ(c.engine.mode, Mode::kPooling);
  EXPECT_EQ(c.engine.reassignment, Reassignment::kFrozen);
  EXPECT_EQ(c.engine.weights.ride, 4);
  EXPECT_FALSE(c.engine.drain);
  EXPECT_EQ(c.seed, 12345678901ULL);
}

TEST(Config, Errors) {
  auto field_of = [](const std::string& text) {
    try {
      parse_config_text(text);
    } catch (const ValidationError& e) {
      return e.field();
    }
    return std::string("no error");
  };
  EXPECT_EQ(field_of(with("demand.rate = -1\n")), "demand.rate");
  EXPECT_EQ(field_of(with("bogus.key = 1\n")), "bogus.key");
  EXPECT_EQ(field_of(with("seed = 4\n")), "seed");
  EXPECT_EQ(field_of(with("fleet.capacity = 0\n")), "fleet.capacity");
  EXPECT_EQ(field_of(with("fleet.positions = 1 2\n")), "fleet.positions");
  EXPECT_EQ(field_of(with("engine.mode = bus\n")), "engine.mode");
  EXPECT_EQ(field_of(with("engine.batch_interval = 0\n")), "engine.batch_interval");
  EXPECT_EQ(field_of(with("demand.horizon = 30\n")), "demand.horizon");
  EXPECT_EQ(field_of(with("demand.detour_factor = 0.5\n")), "demand.detour_factor");
  EXPECT_EQ(field_of(with("engine.max_bundle_size = 9\nengine.mode = pooling\n")),
            "engine.max_bundle_size");
  EXPECT_EQ(field_of(with("fleet.vehicles = x\n")), "fleet.vehicles");
  EXPECT_EQ(field_of("network.width = 3\n"), "network.height");
  EXPECT_EQ(field_of(with("not a pair\n")), "line 10");
  EXPECT_THROW(parse_config("/nonexistent/config.conf"), ValidationError);
}

TEST(Config, RejectsNegativeRate) {
  std::string text = kBase;
  text.replace(text.find("demand.rate = 1.0"), 17, "demand.rate = -1");
  try {
    parse_config_text(text);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "demand.rate");
    EXPECT_NE(std::string(e.what()).find("demand.rate"), std::string::npos);
  }
}

TEST(Config, HailingNeedsTripsLongerThanWaits) {
  // A 3x3 grid has diameter 4, which no trip can exceed with waits up to 4.
  const std::string tiny =
      "network.width = 3\nnetwork.height = 3\nfleet.vehicles = 1\ndemand.rate = 1\n"
      "demand.max_wait = 4\nengine.horizon = 10\n";
  EXPECT_THROW(parse_config_text(tiny), ValidationError);
  EXPECT_NO_THROW(parse_config_text(tiny + "engine.mode = pooling\n"));
}

TEST(Config, EdgeListRelativeToConfig) {
  const fs::path dir = scratch("edges");
  fs::create_directories(dir);
  {
    std::ofstream e(dir / "ring.txt");
    for (int i = 0; i < 12; ++i) e << i << ' ' << (i + 1) % 12 << " 1\n" << (i + 1) % 12 << ' ' << i << " 1\n";
    std::ofstream c(dir / "ring.conf");
    c << "network.edge_list = ring.txt\nfleet.vehicles = 2\ndemand.rate = 0.5\n"
         "demand.max_wait = 3\nengine.horizon = 20\n";
  }
  const ScenarioConfig cfg = parse_config((dir / "ring.conf").string());
  const Network net = build_network(cfg);
  EXPECT_EQ(net.node_count(), 12U);
  EXPECT_EQ(net.diameter(), 6);
  fs::remove_all(dir);
}

TEST(Demand, ZeroRateIsEmpty) {
  ScenarioConfig c = parse_config_text(kBase);
  c.rate = 0;
  EXPECT_TRUE(generate_demand(c, build_network(c)).empty());
}

TEST(Demand, DeterministicPerSeed) {
  const ScenarioConfig c = parse_config_text(kBase);
  const Network net = build_network(c);
  std::ostringstream a, b;
  write_requests(a, generate_demand(c, net));
  write_requests(b, generate_demand(c, net));
  EXPECT_EQ(a.str(), b.str());
  ScenarioConfig other = c;
  other.seed = 4;
  std::ostringstream d;
  write_requests(d, generate_demand(other, net));
  EXPECT_NE(a.str(), d.str());
}

TEST(Demand, PoissonCountsAndFields) {
  ScenarioConfig c = parse_config_text(R"(
network.width = 10
network.height = 10
fleet.vehicles = 5
demand.rate = 2.0
demand.max_wait_min = 3
demand.max_wait_max = 8
engine.horizon = 101
)");
  ASSERT_EQ(c.effective_demand_horizon(), 100);
  const Network net = build_network(c);
  double total = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    c.seed = seed;
    const auto reqs = generate_demand(c, net);
    // Poisson(200): [140, 260] is beyond four standard deviations.
    ASSERT_GE(reqs.size(), 140U);
    ASSERT_LE(reqs.size(), 260U);
    total += static_cast<double>(reqs.size());
    Time last = 0;
    for (std::size_t i = 0; i < reqs.size(); ++i) {
      const Request& r = reqs[i];
      ASSERT_EQ(r.id, static_cast<RequestId>(i));
      ASSERT_GE(r.request_time, last);
      ASSERT_GT(r.request_time, 0);
      ASSERT_LE(r.request_time, 100);
      last = r.request_time;
      const Time direct = net.travel_time(r.origin, r.destination);
      ASSERT_GT(direct, 8);
      ASSERT_GE(r.max_wait, 3);
      ASSERT_LE(r.max_wait, 8);
      ASSERT_EQ(r.max_ride, static_cast<Time>(std::ceil(1.5 * static_cast<double>(direct))));
      ASSERT_EQ(r.status, RequestStatus::kUnrevealed);
    }
  }
  EXPECT_NEAR(total / 100.0, 200.0, 10.0);
}

TEST(Fleet, PositionsFromConfigOrSeed) {
  ScenarioConfig c = parse_config_text(with("fleet.positions = 1 2 3 4\n"));
  const Network net = build_network(c);
  const auto fixed = initial_fleet(c, net);
  ASSERT_EQ(fixed.size(), 4U);
  EXPECT_EQ(fixed[2].position, 3);
  c.positions.clear();
  const auto a = initial_fleet(c, net);
  const auto b = initial_fleet(c, net);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].position, b[i].position);
  c.engine.mode = Mode::kPooling;
  c.capacity = 4;
  EXPECT_EQ(initial_fleet(c, net).front().capacity, 4);
  c.engine.mode = Mode::kHailing;
  EXPECT_EQ(initial_fleet(c, net).front().capacity, 1);
}

TEST(Run, EmptyDemand) {
  ScenarioConfig c = parse_config_text(kBase);
  c.rate = 0;
  const ScenarioRun run = run_scenario(c, build_network(c));
  EXPECT_TRUE(run.events.empty());
  EXPECT_EQ(run.metrics.requests, 0);
  EXPECT_EQ(run.metrics.driven, 0);
  EXPECT_DOUBLE_EQ(run.metrics.mean_wait, 0.0);
}

TEST(Run, NoFleetMeansEveryoneLeaves) {
  for (auto policy : {RejectionPolicy::kEarlyReject, RejectionPolicy::kWalkAway}) {
    ScenarioConfig c = parse_config_text(kBase);
    c.vehicles = 0;
    c.engine.policy = policy;
    const ScenarioRun run = run_scenario(c, build_network(c));
    EXPECT_GT(run.metrics.requests, 0);
    EXPECT_EQ(run.metrics.served, 0);
    EXPECT_EQ(run.metrics.left, run.metrics.requests);
    EXPECT_EQ(run.metrics.p_minus, run.metrics.requests);
    EXPECT_EQ(run.diagnostics.total_violations(), 0);
  }
}

TEST(Run, MetricsMatchFinalState) {
  ScenarioConfig c = parse_config_text(kBase);
  const ScenarioRun run = run_scenario(c, build_network(c));
  EXPECT_EQ(run.metrics.served + run.metrics.left, run.metrics.requests);
  EXPECT_GT(run.metrics.served, 0);
  EXPECT_EQ(run.metrics.p_plus, run.objective.p_plus_count);
  EXPECT_EQ(run.objective, accumulate_objective(run.events, &run.final_state));
  EXPECT_EQ(run.diagnostics.total_violations(), 0);
  EXPECT_EQ(run.header.vehicle_positions.size(), 4U);
}

TEST(Twin, NoAvailabilityAgrees) {
  ScenarioConfig c = parse_config_text(kBase);
  c.vehicles = 0;
  const TwinResult t = twin_run(c, build_network(c));
  EXPECT_TRUE(t.entry.equal()) << t.entry.first_divergence;
  EXPECT_EQ(t.early.metrics.left, t.walkaway.metrics.left);
}

TEST(Twin, AgreesAcrossSeedsAndModes) {
  for (const char* mode : {"hailing", "pooling"}) {
    for (const char* re : {"allowed", "frozen"}) {
      ScenarioConfig c = parse_config_text(with(std::string("engine.mode = ") + mode +
                                                "\nfleet.capacity = 3\nengine.reassignment = " + re + "\n"));
      c.rate = 1.5;
      const TheoremReport rep = twin_sweep(c, build_network(c), 6, 2);
      EXPECT_EQ(rep.scenarios_run, 6);
      for (const TwinEntry* m : rep.mismatches()) ADD_FAILURE() << mode << " " << re << " seed " << m->seed << ": " << m->first_divergence;
    }
  }
}

TEST(Twin, CompareRunsReportsDivergence) {
  ScenarioConfig c = parse_config_text(kBase);
  const Network net = build_network(c);
  const ScenarioRun a = run_scenario(c, net);
  ScenarioRun b = a;
  ASSERT_FALSE(b.final_state.requests.empty());
  b.final_state.requests.front().status = RequestStatus::kLeft;
  b.final_state.requests.front().pickup_time = kNoTime;
  b.final_state.requests.front().dropoff_time = kNoTime;
  const TwinEntry e = compare_runs(c.seed, a, b);
  EXPECT_FALSE(e.equal());
  EXPECT_NE(e.first_divergence.find("request 0"), std::string::npos);
  b = a;
  b.final_state.vehicles.front().odometer += 1;
  EXPECT_FALSE(compare_runs(c.seed, a, b).odometers_equal);
  EXPECT_TRUE(compare_runs(c.seed, a, a).equal());
}

TEST(Output, HeaderOnlyCsv) {
  std::ostringstream out;
  write_metrics_csv(out, {});
  EXPECT_EQ(out.str(), "seed,mode,policy,requests,served,left,p_plus,p_minus,mean_wait,mean_ride,driven,wallclock_ms\n");
  const fs::path dir = scratch("empty_csv");
  emit_metrics({}, nullptr, dir.string());
  EXPECT_EQ(slurp(dir / "metrics.csv"), out.str());
  EXPECT_FALSE(fs::exists(dir / "theorem_report.json"));
  fs::remove_all(dir);
}

TEST(Output, SweepRowsAndStableBytes) {
  ScenarioConfig c = parse_config_text(kBase);
  c.rate = 0.3;
  const Network net = build_network(c);
  RunOptions opts;
  opts.wallclock = false;
  std::string first;
  for (int jobs : {1, 3}) {
    const auto runs = sweep(c, net, 100, jobs, opts);
    ASSERT_EQ(runs.size(), 100U);
    std::vector<Metrics> rows;
    for (const auto& r : runs) rows.push_back(r.metrics);
    std::ostringstream out;
    write_metrics_csv(out, rows);
    const std::string text = out.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 101);
    if (first.empty()) first = text;
    EXPECT_EQ(text, first);
  }
}

TEST(Output, TheoremReportJson) {
  ScenarioConfig c = parse_config_text(kBase);
  RunOptions opts;
  opts.wallclock = false;
  std::vector<TwinResult> runs;
  const TheoremReport rep = twin_sweep(c, build_network(c), 2, 1, opts, &runs);
  ASSERT_EQ(runs.size(), 2U);
  const fs::path dir = scratch("report");
  std::vector<Metrics> rows{runs[0].early.metrics, runs[0].walkaway.metrics};
  emit_metrics(rows, &rep, dir.string());
  const std::string json = slurp(dir / "theorem_report.json");
  EXPECT_NE(json.find("\"scenarios_run\": 2"), std::string::npos);
  EXPECT_NE(json.find("\"mismatches\": []"), std::string::npos);
  EXPECT_NE(json.find("\"timing\""), std::string::npos);
  fs::remove_all(dir);
}

TEST(EventLog, RoundTrip) {
  ScenarioConfig c = parse_config_text(with("engine.policy = walkaway\n"));
  const ScenarioRun run = run_scenario(c, build_network(c));
  std::stringstream buf;
  write_event_log(buf, run.header, run.events);
  const EventLog back = read_event_log(buf);
  EXPECT_EQ(back.header, run.header);
  EXPECT_EQ(back.events, run.events);

  const fs::path dir = scratch("events");
  const std::string path = emit_event_log(run, dir.string());
  EXPECT_EQ(fs::path(path).filename().string(), "events_3_hailing_walkaway.jsonl");
  EXPECT_EQ(slurp(path), buf.str());
  fs::remove_all(dir);

  std::istringstream junk("{\"seed\": 1}\nnot json\n");
  EXPECT_THROW(read_event_log(junk), ModsimError);
}

TEST(EventLog, RequestsRoundTrip) {
  const ScenarioConfig c = parse_config_text(kBase);
  const auto reqs = generate_demand(c, build_network(c));
  std::stringstream buf;
  write_requests(buf, reqs);
  const auto back = read_requests(buf);
  ASSERT_EQ(back.size(), reqs.size());
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    EXPECT_EQ(back[i].origin, reqs[i].origin);
    EXPECT_EQ(back[i].request_time, reqs[i].request_time);
    EXPECT_EQ(back[i].max_ride, reqs[i].max_ride);
  }
}

}  // namespace
