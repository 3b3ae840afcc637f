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

#include "modsim/engine.hpp"

#include <algorithm>
#include <array>

namespace modsim {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 8> kEventNames{{
    {EventKind::kRevealed, "Revealed"},
    {EventKind::kAccepted, "Accepted"},
    {EventKind::kRejected, "Rejected"},
    {EventKind::kReassigned, "Reassigned"},
    {EventKind::kUnassigned, "Unassigned"},
    {EventKind::kPickedUp, "PickedUp"},
    {EventKind::kDroppedOff, "DroppedOff"},
    {EventKind::kWalkedAway, "WalkedAway"},
}};

constexpr std::size_t kMaxNotes = 20;

}  // namespace

std::string_view to_string(Mode m) {
  return m == Mode::kHailing ? "hailing" : "pooling";
}

std::string_view to_string(RejectionPolicy p) {
  return p == RejectionPolicy::kEarlyReject ? "early" : "walkaway";
}

std::string_view to_string(Reassignment r) {
  return r == Reassignment::kAllowed ? "allowed" : "frozen";
}

Mode parse_mode(std::string_view text, const std::string& field) {
  if (text == "hailing") return Mode::kHailing;
  if (text == "pooling") return Mode::kPooling;
  throw ValidationError(field, "expected hailing or pooling, got '" + std::string(text) + "'");
}

RejectionPolicy parse_policy(std::string_view text, const std::string& field) {
  if (text == "early") return RejectionPolicy::kEarlyReject;
  if (text == "walkaway") return RejectionPolicy::kWalkAway;
  throw ValidationError(field, "expected early or walkaway, got '" + std::string(text) + "'");
}

Reassignment parse_reassignment(std::string_view text, const std::string& field) {
  if (text == "allowed") return Reassignment::kAllowed;
  if (text == "frozen") return Reassignment::kFrozen;
  throw ValidationError(field, "expected allowed or frozen, got '" + std::string(text) + "'");
}

void EngineConfig::validate() const {
  if (batch_interval < 1) throw ValidationError("engine.batch_interval", "must be at least 1");
  if (horizon < 1) throw ValidationError("engine.horizon", "must be at least 1");
  if (weights.dist < 0 || weights.wait < 0 || weights.ride < 0) {
    throw ValidationError("engine.weights", "cost weights must be non-negative");
  }
  if (mode == Mode::kPooling && (max_bundle_size < 1 || max_bundle_size > kMaxBundleSize)) {
    throw ValidationError("engine.max_bundle_size",
                          "must be between 1 and " + std::to_string(kMaxBundleSize));
  }
}

std::string_view to_string(EventKind k) {
  for (const auto& [kind, name] : kEventNames) {
    if (kind == k) return name;
  }
  return "?";
}

EventKind parse_event_kind(std::string_view text) {
  for (const auto& [kind, name] : kEventNames) {
    if (name == text) return kind;
  }
  throw ModsimError("unknown event kind '" + std::string(text) + "'");
}

ObjectiveReport& ObjectiveReport::operator+=(const ObjectiveReport& o) {
  p_plus_count += o.p_plus_count;
  p_minus_count += o.p_minus_count;
  driven += o.driven;
  total_wait += o.total_wait;
  total_ride += o.total_ride;
  return *this;
}

ObjectiveReport accumulate_objective(std::span<const Event> events, const SystemState* fleet) {
  ObjectiveReport rep;
  std::map<RequestId, Time> revealed;
  std::map<RequestId, Time> picked;
  for (const Event& e : events) {
    switch (e.kind) {
      case EventKind::kRevealed: revealed[e.request] = e.time; break;
      case EventKind::kUnassigned: ++rep.p_plus_count; break;
      case EventKind::kRejected:
      case EventKind::kWalkedAway: ++rep.p_minus_count; break;
      case EventKind::kPickedUp: {
        picked[e.request] = e.time;
        auto it = revealed.find(e.request);
        if (it != revealed.end()) rep.total_wait += e.time - it->second;
        break;
      }
      case EventKind::kDroppedOff: {
        auto it = picked.find(e.request);
        if (it != picked.end()) rep.total_ride += e.time - it->second;
        break;
      }
      default: break;
    }
  }
  if (fleet) {
    for (const Vehicle& v : fleet->vehicles) rep.driven += v.odometer;
  }
  return rep;
}

std::set<RequestId> reveal_requests(SystemState& s, Time t, const EngineConfig& cfg) {
  std::set<RequestId> out;
  for (Request& r : s.requests) {
    if (r.status == RequestStatus::kUnrevealed && r.request_time > t - cfg.batch_interval &&
        r.request_time <= t) {
      r.status = RequestStatus::kNotAssigned;
      out.insert(r.id);
    }
  }
  return out;
}

BatchDecision optimize(const SystemState& s, const EngineConfig& cfg, const Network& net) {
  BatchDecision d;
  const Time t = s.time;
  for (RequestId r : s.active_requests()) {
    d.considered.insert(r);
    d.feasible[r];
    if (s.request(r).status == RequestStatus::kWaiting) d.prev_assigned.insert(r);
  }
  const bool frozen = cfg.reassignment == Reassignment::kFrozen;

  if (cfg.mode == Mode::kHailing) {
    RVGraph g = build_rv_graph(s, t, net, cfg.weights);
    for (const RvEdge& e : g.edges) d.feasible[e.request].insert(e.vehicle);
    const RVGraph solved = frozen ? freeze_rv_graph(g, s) : g;
    AssignmentSolution sol = solve_hailing(solved, d.prev_assigned, penalties_for(solved));
    for (const auto& [v, r] : sol.pairs) {
      d.assigned[v] = {r};
      d.routes[v] = solved.find(r, v)->route;
    }
    for (const auto& [v, base] : g.baseline_routes) d.routes.emplace(v, base);
    d.solution = std::move(sol);
    d.rv = std::move(g);
  } else {
    RTVGraph g = build_rtv_graph(s, t, net, cfg.weights, cfg.max_bundle_size);
    for (const VbEdge& e : g.vb_edges) {
      const auto& m = g.bundle(e.bundle).members;
      if (m.size() == 1) d.feasible[m.front()].insert(e.vehicle);
    }
    const RTVGraph solved = frozen ? freeze_rtv_graph(g, s) : g;
    BundleAssignment sol = solve_pooling(solved, d.prev_assigned, penalties_for(solved));
    for (const auto& [v, b] : sol.pairs) {
      d.assigned[v] = solved.bundle(b).members;
      d.routes[v] = solved.find(v, b)->best_route;
    }
    for (const auto& [v, base] : g.baseline_routes) d.routes.emplace(v, base);
    d.solution = std::move(sol);
    d.rtv = std::move(g);
  }
  return d;
}

std::vector<Event> apply_assignment(SystemState& s, const BatchDecision& d,
                                    const EngineConfig& cfg) {
  std::map<RequestId, VehicleId> owner;
  for (const auto& [v, rs] : d.assigned) {
    if (!s.has_vehicle(v)) {
      throw ModsimError("apply_assignment: unknown vehicle " + std::to_string(v));
    }
    for (RequestId r : rs) {
      if (!d.considered.count(r) || !s.has_request(r)) {
        throw ModsimError("apply_assignment: request " + std::to_string(r) +
                          " was not active at optimization");
      }
      if (!owner.emplace(r, v).second) {
        throw ModsimError("apply_assignment: request " + std::to_string(r) +
                          " assigned twice");
      }
    }
  }

  std::vector<Event> unassigned, decided, rejected;
  const int batch = s.batch;
  const Time t = s.time;
  for (RequestId r : d.considered) {
    Request& req = s.request(r);
    auto it = owner.find(r);
    if (it == owner.end()) {
      if (req.status == RequestStatus::kWaiting) {
        unassigned.push_back({batch, EventKind::kUnassigned, r, req.vehicle, t});
        req.status = RequestStatus::kNotAssigned;
        req.vehicle = kNoVehicle;
      }
      if (cfg.policy == RejectionPolicy::kEarlyReject &&
          req.status == RequestStatus::kNotAssigned) {
        rejected.push_back({batch, EventKind::kRejected, r, kNoVehicle, t});
        req.status = RequestStatus::kLeft;
        req.leave_reason = LeaveReason::kOperatorReject;
      }
    } else if (req.status == RequestStatus::kNotAssigned) {
      decided.push_back({batch, EventKind::kAccepted, r, it->second, t});
      req.status = RequestStatus::kWaiting;
      req.vehicle = it->second;
    } else if (req.status == RequestStatus::kWaiting && req.vehicle != it->second) {
      decided.push_back({batch, EventKind::kReassigned, r, it->second, t});
      req.vehicle = it->second;
    } else if (req.status != RequestStatus::kWaiting) {
      throw ModsimError("apply_assignment: request " + std::to_string(r) +
                        " is no longer assignable");
    }
  }
  for (Vehicle& v : s.vehicles) {
    auto it = d.routes.find(v.id);
    if (it != d.routes.end()) v.route = it->second;
  }

  std::vector<Event> out = std::move(unassigned);
  out.insert(out.end(), decided.begin(), decided.end());
  out.insert(out.end(), rejected.begin(), rejected.end());
  return out;
}

namespace {

void execute_stop(SystemState& s, Vehicle& v, const Stop& stop, Time at,
                  std::vector<Event>& events) {
  if (at != stop.planned_arrival) {
    throw ModsimError("vehicle " + std::to_string(v.id) + " reached a stop at " +
                      std::to_string(at) + " instead of " + std::to_string(stop.planned_arrival));
  }
  for (RequestId id : stop.dropoffs) {
    Request& r = s.request(id);
    auto it = std::lower_bound(v.onboard.begin(), v.onboard.end(), id);
    if (r.status != RequestStatus::kOnBoard || it == v.onboard.end() || *it != id) {
      throw ModsimError("vehicle " + std::to_string(v.id) + " cannot drop off request " +
                        std::to_string(id));
    }
    v.onboard.erase(it);
    r.status = RequestStatus::kServed;
    r.dropoff_time = at;
    events.push_back({s.batch, EventKind::kDroppedOff, id, v.id, at});
  }
  for (RequestId id : stop.pickups) {
    Request& r = s.request(id);
    if (r.status != RequestStatus::kWaiting || r.vehicle != v.id) {
      throw ModsimError("vehicle " + std::to_string(v.id) + " cannot pick up request " +
                        std::to_string(id));
    }
    v.onboard.insert(std::lower_bound(v.onboard.begin(), v.onboard.end(), id), id);
    r.status = RequestStatus::kOnBoard;
    r.pickup_time = at;
    events.push_back({s.batch, EventKind::kPickedUp, id, v.id, at});
  }
}

std::vector<Waypoint> trajectory(const Vehicle& v, Time start, const Network& net) {
  std::vector<Waypoint> out;
  NodeId at = v.position;
  Time clock = start;
  for (const Stop& stop : v.route.stops) {
    const PathResult p = net.shortest_path(at, stop.location);
    for (std::size_t i = 1; i < p.node_sequence.size(); ++i) {
      clock += net.travel_time(p.node_sequence[i - 1], p.node_sequence[i]);
      out.push_back({p.node_sequence[i], clock});
    }
    at = stop.location;
  }
  return out;
}

}  // namespace

std::vector<Event> transition(SystemState& s, const EngineConfig& cfg, const Network& net) {
  std::vector<Event> events;
  const Time end = s.time + cfg.batch_interval;
  for (Vehicle& v : s.vehicles) {
    Time clock = v.start_time(s.time);
    NodeId pos = v.position;
    std::size_t done = 0;
    bool stopped = false;
    while (done < v.route.stops.size() && !stopped) {
      const Stop& stop = v.route.stops[done];
      if (pos == stop.location) {
        if (clock > end) break;
        execute_stop(s, v, stop, clock, events);
        ++done;
        continue;
      }
      const PathResult p = net.shortest_path(pos, stop.location);
      for (std::size_t i = 1; i < p.node_sequence.size(); ++i) {
        if (clock >= end) {
          stopped = true;
          break;
        }
        const Time leg = net.travel_time(p.node_sequence[i - 1], p.node_sequence[i]);
        clock += leg;
        v.odometer += leg;
        pos = p.node_sequence[i];
      }
    }
    v.route.stops.erase(v.route.stops.begin(),
                        v.route.stops.begin() + static_cast<std::ptrdiff_t>(done));
    v.position = pos;
    v.ready_time = clock;
    v.path = trajectory(v, v.start_time(end), net);
  }
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return a.time < b.time;
  });
  return events;
}

std::vector<Event> walkaway_sweep(SystemState& s, Time t, const EngineConfig& cfg) {
  std::vector<Event> events;
  if (cfg.policy != RejectionPolicy::kWalkAway) return events;
  for (Request& r : s.requests) {
    if (r.status == RequestStatus::kNotAssigned && t >= latest_pickup(r)) {
      r.status = RequestStatus::kLeft;
      r.leave_reason = LeaveReason::kWalkAway;
      events.push_back({s.batch, EventKind::kWalkedAway, r.id, kNoVehicle, latest_pickup(r)});
    }
  }
  return events;
}

std::int64_t Diagnostics::total_violations() const {
  return shrinkage_violations + delta_violations + blocking_violations +
         prev_solution_violations + no_availability_violations + late_assignments +
         first_batch_violations + window_violations + state_violations;
}

Engine::Engine(SystemState initial, EngineConfig cfg, const Network& net, bool diagnostics)
    : state_(std::move(initial)), cfg_(cfg), net_(net), diagnostics_(diagnostics) {
  cfg_.validate();
  Time last = 0;
  for (const Request& r : state_.requests) {
    last = std::max(last, latest_pickup(r) + r.max_ride);
  }
  const Time span = std::max<Time>(last, static_cast<Time>(cfg_.horizon) * cfg_.batch_interval);
  drain_limit_ = static_cast<int>(span / cfg_.batch_interval) + 2;
}

bool Engine::finished() const {
  if (state_.batch < cfg_.horizon) return false;
  if (!cfg_.drain) return true;
  for (const Request& r : state_.requests) {
    if (r.status == RequestStatus::kNotAssigned || r.status == RequestStatus::kWaiting ||
        r.status == RequestStatus::kOnBoard) {
      return false;
    }
  }
  return true;
}

void Engine::note(std::string text) {
  if (diag_.notes.size() < kMaxNotes) diag_.notes.push_back(std::move(text));
}

StepResult Engine::step() {
  if (finished()) throw ModsimError("step: the run is already finished");
  if (state_.batch > drain_limit_) throw ModsimError("step: requests failed to settle");
  SystemState& s = state_;
  const Time t = s.time;
  StepResult out;

  std::set<RequestId> revealed;
  if (s.batch < cfg_.horizon) revealed = reveal_requests(s, t, cfg_);
  for (RequestId r : revealed) {
    out.events.push_back({s.batch, EventKind::kRevealed, r, kNoVehicle, s.request(r).request_time});
  }

  BatchDecision decision = optimize(s, cfg_, net_);
  if (diagnostics_) check_decision(decision);
  if (sink_) sink_(s.batch, decision);

  std::vector<Time> odometers;
  for (const Vehicle& v : s.vehicles) odometers.push_back(v.odometer);

  auto applied = apply_assignment(s, decision, cfg_);
  auto moved = transition(s, cfg_, net_);
  auto swept = walkaway_sweep(s, t, cfg_);
  for (auto* part : {&applied, &moved, &swept}) {
    out.events.insert(out.events.end(), part->begin(), part->end());
  }

  if (diagnostics_) {
    check_events(out.events, revealed);
    for (RequestId r : revealed) {
      if (cfg_.policy == RejectionPolicy::kWalkAway &&
          s.request(r).status == RequestStatus::kNotAssigned) {
        left_out_.insert(r);
      }
    }
  }

  for (const Event& e : out.events) {
    switch (e.kind) {
      case EventKind::kUnassigned: ++out.delta.p_plus_count; break;
      case EventKind::kRejected:
      case EventKind::kWalkedAway: ++out.delta.p_minus_count; break;
      case EventKind::kPickedUp: out.delta.total_wait += e.time - s.request(e.request).request_time; break;
      case EventKind::kDroppedOff: out.delta.total_ride += e.time - s.request(e.request).pickup_time; break;
      default: break;
    }
  }
  for (std::size_t i = 0; i < s.vehicles.size(); ++i) {
    out.delta.driven += s.vehicles[i].odometer - odometers[i];
  }

  s.batch += 1;
  s.time += cfg_.batch_interval;
  if (diagnostics_) {
    const auto problems = validate_state(s);
    diag_.state_violations += static_cast<std::int64_t>(problems.size());
    for (const auto& p : problems) note("state: " + p.subject + ": " + p.rule);
  }

  events_.insert(events_.end(), out.events.begin(), out.events.end());
  objective_ += out.delta;
  return out;
}

void Engine::run() {
  while (!finished()) step();
}

void Engine::check_decision(const BatchDecision& d) {
  const SystemState& s = state_;
  diag_.active_counts.push_back(static_cast<int>(d.considered.size()));
  const std::string at = "batch " + std::to_string(s.batch) + ": ";

  // Feasible sets only shrink; requests without any feasible vehicle never
  // gain one.
  for (const auto& [r, vs] : d.feasible) {
    auto it = prev_feasible_.find(r);
    if (it != prev_feasible_.end()) {
      ++diag_.shrinkage_checks;
      if (!std::includes(it->second.begin(), it->second.end(), vs.begin(), vs.end())) {
        ++diag_.shrinkage_violations;
        note(at + "feasible set of request " + std::to_string(r) + " grew");
      }
    }
    if (seen_unavailable_.count(r)) {
      ++diag_.no_availability_checks;
      if (!vs.empty()) {
        ++diag_.no_availability_violations;
        note(at + "request " + std::to_string(r) + " gained a feasible vehicle");
      }
    } else if (vs.empty() && !prev_feasible_.count(r)) {
      seen_unavailable_.insert(r);
    }
  }
  prev_feasible_ = d.feasible;

  std::set<RequestId> assigned;
  for (const auto& [v, rs] : d.assigned) assigned.insert(rs.begin(), rs.end());

  for (RequestId r : assigned) {
    if (left_out_.erase(r)) {
      ++diag_.late_assignments;
      note(at + "request " + std::to_string(r) + " assigned after being left out");
    }
  }

  // The confirmed plan must still be feasible.
  std::map<VehicleId, std::vector<RequestId>> waiting;
  for (RequestId r : d.prev_assigned) waiting[s.request(r).vehicle].push_back(r);
  for (const auto& [v, rs] : waiting) {
    ++diag_.prev_solution_checks;
    bool ok = false;
    if (d.rv) {
      ok = rs.size() == 1 && d.rv->find(rs.front(), v) != nullptr;
    } else if (d.rtv) {
      ok = best_route(s.vehicle(v), rs, s.time, net_, cfg_.weights, s).has_value();
    }
    if (!ok) {
      ++diag_.prev_solution_violations;
      note(at + "confirmed plan of vehicle " + std::to_string(v) + " became infeasible");
    }
  }

  // Every feasible vehicle of an unassigned request is busy with a
  // competitor, and in pooling cannot take the request on top.
  for (RequestId r : d.considered) {
    if (assigned.count(r)) continue;
    for (VehicleId v : d.feasible.at(r)) {
      ++diag_.blocking_checks;
      auto it = d.assigned.find(v);
      if (it == d.assigned.end()) {
        ++diag_.blocking_violations;
        note(at + "request " + std::to_string(r) + " left out while vehicle " +
             std::to_string(v) + " is free");
        continue;
      }
      if (!d.rtv || static_cast<int>(it->second.size()) + 1 > cfg_.max_bundle_size) continue;
      std::vector<RequestId> grown = it->second;
      grown.insert(std::lower_bound(grown.begin(), grown.end(), r), r);
      if (best_route(s.vehicle(v), grown, s.time, net_, cfg_.weights, s)) {
        ++diag_.blocking_violations;
        note(at + "request " + std::to_string(r) + " insertable into vehicle " +
             std::to_string(v) + "'s bundle");
      }
    }
  }

  // Cost deltas of retained pairs never exceed those of their competitors.
  if (d.rv) {
    const RVGraph& g = *d.rv;
    std::map<VehicleId, RequestId> pairs;
    for (const auto& [v, rs] : d.assigned) pairs.emplace(v, rs.front());
    for (const auto& [v, rho] : prev_pairs_) {
      auto it = pairs.find(v);
      if (it == pairs.end() || it->second != rho) continue;
      const RvEdge* keep_now = g.find(rho, v);
      auto keep_then = prev_costs_.find({rho, v});
      if (!keep_now || keep_then == prev_costs_.end()) continue;
      for (RequestId r : prev_unassigned_) {
        const RvEdge* now = g.find(r, v);
        auto then = prev_costs_.find({r, v});
        if (!now || then == prev_costs_.end()) continue;
        ++diag_.delta_checks;
        if (keep_now->edge_cost - keep_then->second > now->edge_cost - then->second) {
          ++diag_.delta_violations;
          note(at + "swap incentive between requests " + std::to_string(rho) + " and " +
               std::to_string(r) + " on vehicle " + std::to_string(v));
        }
      }
    }
    prev_pairs_ = std::move(pairs);
    prev_costs_.clear();
    for (const RvEdge& e : g.edges) prev_costs_[{e.request, e.vehicle}] = e.edge_cost;
    prev_unassigned_.clear();
    for (RequestId r : d.considered) {
      if (!assigned.count(r)) prev_unassigned_.insert(r);
    }
  }
}

void Engine::check_events(const std::vector<Event>& batch_events,
                          const std::set<RequestId>& revealed) {
  const std::string at = "batch " + std::to_string(state_.batch) + ": ";
  if (cfg_.policy == RejectionPolicy::kEarlyReject) {
    std::set<RequestId> decided;
    for (const Event& e : batch_events) {
      if (e.kind == EventKind::kAccepted || e.kind == EventKind::kRejected) {
        decided.insert(e.request);
      }
    }
    for (RequestId r : revealed) {
      if (!decided.count(r)) {
        ++diag_.first_batch_violations;
        note(at + "request " + std::to_string(r) + " undecided at reveal");
      }
    }
  }
  for (const Event& e : batch_events) {
    const Request& r = state_.request(e.request);
    if (e.kind == EventKind::kPickedUp && e.time > latest_pickup(r)) {
      ++diag_.window_violations;
      note(at + "request " + std::to_string(r.id) + " picked up late");
    }
    if (e.kind == EventKind::kDroppedOff && e.time - r.pickup_time > r.max_ride) {
      ++diag_.window_violations;
      note(at + "request " + std::to_string(r.id) + " rode too long");
    }
  }
}

}  // namespace modsim
