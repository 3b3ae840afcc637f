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

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "modsim/domain.hpp"
#include "modsim/matching.hpp"
#include "modsim/network.hpp"
#include "modsim/pooling.hpp"

namespace modsim {

enum class Mode { kHailing, kPooling };
enum class RejectionPolicy { kEarlyReject, kWalkAway };
enum class Reassignment { kAllowed, kFrozen };

std::string_view to_string(Mode m);
std::string_view to_string(RejectionPolicy p);
std::string_view to_string(Reassignment r);

// Accept the CLI / config spellings; throw ValidationError naming `field`.
Mode parse_mode(std::string_view text, const std::string& field = "engine.mode");
RejectionPolicy parse_policy(std::string_view text, const std::string& field = "engine.policy");
Reassignment parse_reassignment(std::string_view text,
                                const std::string& field = "engine.reassignment");

struct EngineConfig {
  Time batch_interval = 1;
  int horizon = 1;  // batches that reveal demand
  Mode mode = Mode::kHailing;
  RejectionPolicy policy = RejectionPolicy::kEarlyReject;
  Reassignment reassignment = Reassignment::kAllowed;
  CostWeights weights;
  int max_bundle_size = 3;
  // Keep stepping after the horizon, without revealing anything new, until
  // every revealed request is Served or Left.
  bool drain = true;

  void validate() const;
};

enum class EventKind {
  kRevealed,
  kAccepted,
  kRejected,
  kReassigned,
  kUnassigned,
  kPickedUp,
  kDroppedOff,
  kWalkedAway,
};

std::string_view to_string(EventKind k);
EventKind parse_event_kind(std::string_view text);

struct Event {
  int batch = 0;
  EventKind kind = EventKind::kRevealed;
  RequestId request = 0;
  VehicleId vehicle = kNoVehicle;
  // Revealed: request time. Decisions: batch time. PickedUp / DroppedOff:
  // realized time. WalkedAway: latest pickup.
  Time time = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

struct ObjectiveReport {
  std::int64_t p_plus_count = 0;
  std::int64_t p_minus_count = 0;
  Time driven = 0;
  Time total_wait = 0;
  Time total_ride = 0;

  ObjectiveReport& operator+=(const ObjectiveReport& o);
  friend bool operator==(const ObjectiveReport&, const ObjectiveReport&) = default;
};

// Counts P+ / P- events and realized waits and rides. Waits are measured from
// the Revealed event's time. Driving time is not visible in events; it is
// taken from `fleet` odometers when given.
ObjectiveReport accumulate_objective(std::span<const Event> events,
                                     const SystemState* fleet = nullptr);

// Unrevealed requests with request_time in (t - dt, t] become NotAssigned.
std::set<RequestId> reveal_requests(SystemState& s, Time t, const EngineConfig& cfg);

struct BatchDecision {
  std::variant<AssignmentSolution, BundleAssignment> solution;
  std::set<RequestId> considered;                // active at optimization time
  std::set<RequestId> prev_assigned;             // Waiting at optimization time
  std::map<VehicleId, std::vector<RequestId>> assigned;  // per vehicle, ascending
  std::map<VehicleId, Route> routes;             // every vehicle's new route
  std::map<RequestId, std::set<VehicleId>> feasible;  // before any freezing
  std::optional<RVGraph> rv;    // unfrozen graph, hailing
  std::optional<RTVGraph> rtv;  // unfrozen graph, pooling
};

BatchDecision optimize(const SystemState& s, const EngineConfig& cfg, const Network& net);

std::vector<Event> apply_assignment(SystemState& s, const BatchDecision& decision,
                                    const EngineConfig& cfg);

// Moves every vehicle from s.time to s.time + dt, executing the stops reached.
std::vector<Event> transition(SystemState& s, const EngineConfig& cfg, const Network& net);

// WalkAway: NotAssigned requests with t >= latest pickup leave. EarlyReject:
// nothing is swept.
std::vector<Event> walkaway_sweep(SystemState& s, Time t, const EngineConfig& cfg);

struct StepResult {
  std::vector<Event> events;
  ObjectiveReport delta;
};

// Invariant checks made while running. Every `*_violations` counter is
// expected to stay zero.
struct Diagnostics {
  std::vector<int> active_counts;  // requests entering each optimization

  std::int64_t shrinkage_checks = 0;
  std::int64_t shrinkage_violations = 0;  // feasible set grew between batches
  std::int64_t delta_checks = 0;
  std::int64_t delta_violations = 0;      // swap incentive appeared (hailing)
  std::int64_t blocking_checks = 0;
  std::int64_t blocking_violations = 0;   // unassigned request insertable (pooling)
  std::int64_t prev_solution_checks = 0;
  std::int64_t prev_solution_violations = 0;  // confirmed bundle became infeasible
  std::int64_t no_availability_checks = 0;
  std::int64_t no_availability_violations = 0;
  std::int64_t late_assignments = 0;       // requests assigned after first being left out
  std::int64_t first_batch_violations = 0; // EarlyReject undecided at reveal
  std::int64_t window_violations = 0;
  std::int64_t state_violations = 0;

  std::vector<std::string> notes;  // first few violation descriptions

  std::int64_t total_violations() const;
};

class Engine {
 public:
  using GraphSink = std::function<void(int batch, const BatchDecision&)>;

  Engine(SystemState initial, EngineConfig cfg, const Network& net, bool diagnostics = true);

  bool finished() const;
  StepResult step();
  void run();

  void set_graph_sink(GraphSink sink) { sink_ = std::move(sink); }

  const SystemState& state() const { return state_; }
  const EngineConfig& config() const { return cfg_; }
  const std::vector<Event>& events() const { return events_; }
  const ObjectiveReport& objective() const { return objective_; }
  const Diagnostics& diagnostics() const { return diag_; }

 private:
  void check_decision(const BatchDecision& d);
  void check_events(const std::vector<Event>& batch_events, const std::set<RequestId>& revealed);
  void note(std::string text);

  SystemState state_;
  EngineConfig cfg_;
  const Network& net_;
  bool diagnostics_;
  std::vector<Event> events_;
  ObjectiveReport objective_;
  Diagnostics diag_;
  GraphSink sink_;
  int drain_limit_ = 0;

  // Diagnostic memory from the previous batch.
  std::map<RequestId, std::set<VehicleId>> prev_feasible_;
  std::map<VehicleId, RequestId> prev_pairs_;
  std::map<std::pair<RequestId, VehicleId>, Cost> prev_costs_;
  std::set<RequestId> prev_unassigned_;
  std::set<RequestId> left_out_;
  std::set<RequestId> seen_unavailable_;
};

}  // namespace modsim
