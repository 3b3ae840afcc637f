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

#include "modsim/matching.hpp"

#include <algorithm>
#include <tuple>

#include "modsim/assignment.hpp"

namespace modsim {
namespace {

// Onboard dropoffs in the order the vehicle currently plans them.
std::vector<StopAction> onboard_actions(const Vehicle& v) {
  std::vector<StopAction> out;
  std::set<RequestId> pending(v.onboard.begin(), v.onboard.end());
  for (const Stop& stop : v.route.stops) {
    for (RequestId id : stop.dropoffs) {
      if (pending.erase(id)) out.push_back({id, false});
    }
  }
  for (RequestId id : pending) out.push_back({id, false});
  return out;
}

struct FleetRelease {
  VehicleId vehicle;
  VehicleRelease release;
};

std::vector<FleetRelease> releases(const SystemState& s, Time t, const Network& net) {
  std::vector<FleetRelease> out;
  out.reserve(s.vehicles.size());
  for (const Vehicle& v : s.vehicles) out.push_back({v.id, release_point(v, t, net, s)});
  return out;
}

std::set<VehicleId> feasible_given(const std::vector<FleetRelease>& fleet,
                                   const Request& r, Time t, const Network& net) {
  std::set<VehicleId> out;
  const Time latest = latest_pickup(r);
  if (t > latest || fleet.empty()) return out;
  const auto reach = net.backward_reachable(r.origin, latest - t);
  for (const auto& [id, rel] : fleet) {
    auto it = reach.find(rel.node);
    if (it != reach.end() && rel.time + it->second <= latest) out.insert(id);
  }
  return out;
}

void check_graph(const RVGraph& g) {
  const std::set<RequestId> reqs(g.requests.begin(), g.requests.end());
  const std::set<VehicleId> vehs(g.vehicles.begin(), g.vehicles.end());
  std::set<std::pair<RequestId, VehicleId>> seen;
  for (const RvEdge& e : g.edges) {
    if (!reqs.count(e.request)) {
      throw ModsimError("inconsistent RV graph: edge references unknown request " +
                        std::to_string(e.request));
    }
    if (!vehs.count(e.vehicle)) {
      throw ModsimError("inconsistent RV graph: edge references unknown vehicle " +
                        std::to_string(e.vehicle));
    }
    if (!seen.emplace(e.request, e.vehicle).second) {
      throw ModsimError("inconsistent RV graph: duplicate edge");
    }
  }
}

AssignmentSolution evaluate(const RVGraph& g, const std::set<RequestId>& prev,
                            std::map<VehicleId, RequestId> pairs) {
  AssignmentSolution sol;
  sol.pairs = std::move(pairs);
  for (const auto& [v, r] : sol.pairs) {
    const RvEdge* e = g.find(r, v);
    (prev.count(r) ? sol.assigned_prev : sol.assigned_new) += 1;
    sol.secondary_cost += e->edge_cost;
    sol.tie_key += tie_break_key(static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(v));
  }
  return sol;
}

}  // namespace

bool better(const PriorityObjective& a, const PriorityObjective& b) {
  return std::make_tuple(-a.assigned_prev, -a.assigned_new, a.secondary_cost, a.tie_key) <
         std::make_tuple(-b.assigned_prev, -b.assigned_new, b.secondary_cost, b.tie_key);
}

const RvEdge* RVGraph::find(RequestId r, VehicleId v) const {
  auto it = std::lower_bound(edges.begin(), edges.end(), std::make_pair(r, v),
                             [](const RvEdge& e, const std::pair<RequestId, VehicleId>& key) {
                               return std::make_pair(e.request, e.vehicle) < key;
                             });
  if (it != edges.end() && it->request == r && it->vehicle == v) return &*it;
  return nullptr;
}

std::set<VehicleId> RVGraph::vehicles_for(RequestId r) const {
  std::set<VehicleId> out;
  for (const RvEdge& e : edges) {
    if (e.request == r) out.insert(e.vehicle);
  }
  return out;
}

Penalties penalties_for(const RVGraph& g) {
  Cost total = 0;
  for (const RvEdge& e : g.edges) total += e.edge_cost;
  Penalties p;
  p.p_minus = 1 + total;
  p.p_plus = 1 + static_cast<Cost>(g.requests.size()) * p.p_minus;
  return p;
}

VehicleRelease release_point(const Vehicle& v, Time t, const Network& net,
                             const SystemState& s) {
  const auto actions = onboard_actions(v);
  if (actions.empty()) return {v.position, v.start_time(t)};
  const Route r = schedule_route(v, actions, t, net, s);
  return {r.stops.back().location, r.stops.back().planned_arrival};
}

std::set<VehicleId> feasible_vehicles(const SystemState& s, const Request& r,
                                      Time t, const Network& net) {
  return feasible_given(releases(s, t, net), r, t, net);
}

std::set<RequestId> competing_requests(const SystemState& s, const Request& r,
                                       Time t, const Network& net) {
  const auto fleet = releases(s, t, net);
  const auto mine = feasible_given(fleet, r, t, net);
  std::set<RequestId> out;
  if (mine.empty()) return out;
  for (RequestId other : s.active_requests()) {
    if (other == r.id) continue;
    const auto theirs = feasible_given(fleet, s.request(other), t, net);
    const bool shared = std::any_of(theirs.begin(), theirs.end(),
                                    [&](VehicleId v) { return mine.count(v) != 0; });
    if (shared) out.insert(other);
  }
  return out;
}

RVGraph build_rv_graph(const SystemState& s, Time t, const Network& net,
                       const CostWeights& weights) {
  RVGraph g;
  g.batch_time = t;
  g.requests = s.active_requests();
  std::map<VehicleId, std::vector<StopAction>> baseline_actions;
  std::map<VehicleId, Cost> baseline_cost;
  for (const Vehicle& v : s.vehicles) {
    g.vehicles.push_back(v.id);
    auto actions = onboard_actions(v);
    Route base = schedule_route(v, actions, t, net, s);
    baseline_cost[v.id] = route_cost(base, v, t, weights, s);
    g.baseline_routes.emplace(v.id, std::move(base));
    baseline_actions.emplace(v.id, std::move(actions));
  }
  const auto fleet = releases(s, t, net);
  for (RequestId rid : g.requests) {
    const Request& r = s.request(rid);
    for (VehicleId vid : feasible_given(fleet, r, t, net)) {
      const Vehicle& v = s.vehicle(vid);
      auto actions = baseline_actions.at(vid);
      actions.push_back({rid, true});
      actions.push_back({rid, false});
      RvEdge e;
      e.request = rid;
      e.vehicle = vid;
      e.route = schedule_route(v, actions, t, net, s);
      const Stop& pickup = e.route.stops[e.route.stops.size() - 2];
      e.pickup_wait = pickup.planned_arrival - t;
      e.edge_cost = route_cost(e.route, v, t, weights, s) - baseline_cost.at(vid);
      g.edges.push_back(std::move(e));
    }
  }
  return g;
}

RVGraph freeze_rv_graph(const RVGraph& g, const SystemState& s) {
  std::map<RequestId, VehicleId> confirmed;
  std::set<VehicleId> committed;
  for (RequestId r : g.requests) {
    const Request& req = s.request(r);
    if (req.status == RequestStatus::kWaiting) {
      confirmed[r] = req.vehicle;
      committed.insert(req.vehicle);
    }
  }
  RVGraph out = g;
  out.edges.clear();
  for (const RvEdge& e : g.edges) {
    auto it = confirmed.find(e.request);
    const bool keep = it != confirmed.end() ? it->second == e.vehicle
                                            : !committed.count(e.vehicle);
    if (keep) out.edges.push_back(e);
  }
  return out;
}

AssignmentSolution solve_hailing(const RVGraph& g,
                                 const std::set<RequestId>& prev_assigned,
                                 const Penalties& penalties) {
  check_graph(g);
  Cost total = 0;
  for (const RvEdge& e : g.edges) total += e.edge_cost;
  if (penalties.p_minus <= total) {
    throw ModsimError("solve_hailing: P- must exceed the total secondary cost");
  }
  if (penalties.p_plus <= static_cast<Cost>(g.requests.size()) * penalties.p_minus) {
    throw ModsimError("solve_hailing: P+ must exceed |requests| * P-");
  }
  if (penalties.p_plus >= (Cost{1} << 50)) {
    throw ModsimError("solve_hailing: penalties too large for exact arithmetic");
  }

  std::vector<RequestId> rows;
  std::vector<VehicleId> cols;
  for (const RvEdge& e : g.edges) {
    if (rows.empty() || rows.back() != e.request) rows.push_back(e.request);
    cols.push_back(e.vehicle);
  }
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  if (rows.empty()) return {};

  // Columns: real vehicles, then one "stay unassigned" column per row.
  using Wide = __int128;
  constexpr int kShift = 56;
  const int n = static_cast<int>(rows.size());
  const int m = static_cast<int>(cols.size());
  AssignmentProblem<Wide> problem(n, m + n);
  for (const RvEdge& e : g.edges) {
    const int i = static_cast<int>(std::lower_bound(rows.begin(), rows.end(), e.request) - rows.begin());
    const int j = static_cast<int>(std::lower_bound(cols.begin(), cols.end(), e.vehicle) - cols.begin());
    Cost primary = e.edge_cost - penalties.p_minus;
    if (prev_assigned.count(e.request)) primary -= penalties.p_plus;
    const Wide w = (static_cast<Wide>(primary) << kShift) +
                   static_cast<Wide>(tie_break_key(static_cast<std::uint64_t>(e.request),
                                                   static_cast<std::uint64_t>(e.vehicle)));
    problem.set_cost(i, j, w);
  }
  for (int i = 0; i < n; ++i) problem.set_cost(i, m + i, Wide{0});

  const auto assignment = problem.solve();
  std::map<VehicleId, RequestId> pairs;
  for (int i = 0; i < n; ++i) {
    if (assignment[i] < m) pairs.emplace(cols[assignment[i]], rows[i]);
  }
  return evaluate(g, prev_assigned, std::move(pairs));
}

AssignmentSolution priority_matching_oracle(const RVGraph& g,
                                            const std::set<RequestId>& prev_assigned) {
  check_graph(g);
  if (g.requests.size() > kOracleMaxSide || g.vehicles.size() > kOracleMaxSide) {
    throw ModsimError("priority_matching_oracle: instance too large");
  }
  std::map<RequestId, std::vector<const RvEdge*>> by_request;
  for (const RvEdge& e : g.edges) by_request[e.request].push_back(&e);
  std::vector<RequestId> order;
  for (const auto& [r, _] : by_request) order.push_back(r);

  AssignmentSolution best;
  std::map<VehicleId, RequestId> current;
  auto recurse = [&](auto&& self, std::size_t k) -> void {
    if (k == order.size()) {
      auto sol = evaluate(g, prev_assigned, current);
      if (better(sol.objective(), best.objective())) best = std::move(sol);
      return;
    }
    self(self, k + 1);
    for (const RvEdge* e : by_request[order[k]]) {
      if (current.count(e->vehicle)) continue;
      current.emplace(e->vehicle, e->request);
      self(self, k + 1);
      current.erase(e->vehicle);
    }
  };
  recurse(recurse, 0);
  return best;
}

}  // namespace modsim
