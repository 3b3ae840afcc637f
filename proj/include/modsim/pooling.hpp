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
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "modsim/domain.hpp"
#include "modsim/matching.hpp"
#include "modsim/network.hpp"

namespace modsim {

struct Bundle {
  BundleId id = 0;
  std::vector<RequestId> members;  // ascending, non-empty
};

struct VbEdge {
  VehicleId vehicle = 0;
  BundleId bundle = 0;
  Route best_route;
  Cost route_cost = 0;  // full cost of best_route
  Cost edge_cost = 0;   // route_cost minus the vehicle's onboard-only cost
};

struct RTVGraph {
  Time batch_time = 0;
  std::vector<RequestId> requests;  // active, ascending
  std::vector<VehicleId> vehicles;  // fleet, ascending
  std::vector<Bundle> bundles;      // indexed by id
  std::vector<VbEdge> vb_edges;     // ascending (vehicle, bundle)
  std::map<RequestId, std::vector<BundleId>> rb_edges;  // B(r)
  std::map<VehicleId, Route> baseline_routes;           // onboard-only

  const Bundle& bundle(BundleId id) const { return bundles.at(static_cast<std::size_t>(id)); }
  const VbEdge* find(VehicleId v, BundleId b) const;
  std::optional<BundleId> find_bundle(std::span<const RequestId> members) const;
};

struct BundleAssignment {
  std::map<VehicleId, BundleId> pairs;
  int assigned_prev = 0;
  int assigned_new = 0;
  Cost secondary_cost = 0;
  std::uint64_t tie_key = 0;

  PriorityObjective objective() const {
    return {assigned_prev, assigned_new, secondary_cost, tie_key};
  }
};

struct RouteChoice {
  Route route;
  Cost cost = 0;
};

inline constexpr int kMaxBundleSize = 6;

// Cheapest feasible route serving the vehicle's onboard dropoffs plus pickup
// and dropoff of every member, by exhaustive search over precedence-valid
// stop orders (ties: lexicographically smallest stop sequence). Empty when
// no order is feasible.
std::optional<RouteChoice> best_route(const Vehicle& v, std::span<const RequestId> members,
                                      Time now, const Network& net,
                                      const CostWeights& weights, const SystemState& s);

struct BundleSet {
  std::vector<Bundle> bundles;
  std::map<RequestId, std::vector<BundleId>> membership;
};

// Bundles of active requests up to `max_bundle_size`. A k-bundle (k >= 2) is
// generated only when all of its (k-1)-sub-bundles have a feasible vehicle,
// and kept only when it has one itself; singletons are always kept.
BundleSet enumerate_bundles(const SystemState& s, Time t, const Network& net,
                            int max_bundle_size, const CostWeights& weights = {});

// `prune = false` evaluates every subset up to the size cap; used to check
// that sub-bundle pruning never drops a feasible bundle.
RTVGraph build_rtv_graph(const SystemState& s, Time t, const Network& net,
                         const CostWeights& weights, int max_bundle_size,
                         bool prune = true);

// Vehicles with a feasible route for the singleton bundle {r}.
std::set<VehicleId> pooling_feasible_vehicles(const RTVGraph& g, RequestId r);

// Bundles not containing `r` that have an edge to a vehicle in `feasible_v`.
std::set<BundleId> competing_bundles(const RTVGraph& g, RequestId r,
                                     const std::set<VehicleId>& feasible_v);

Penalties penalties_for(const RTVGraph& g);

// Restricts each vehicle with Waiting requests to bundles containing all of
// them, and keeps every other vehicle away from those requests.
RTVGraph freeze_rtv_graph(const RTVGraph& g, const SystemState& s);

enum class PoolingObjectiveMode {
  kLexicographic,  // three-component tuple, no big numbers
  kBigM,           // scalar -P+ * prev - P- * new + cost
};

BundleAssignment solve_pooling(const RTVGraph& g, const std::set<RequestId>& prev_assigned,
                               const Penalties& penalties,
                               PoolingObjectiveMode mode = PoolingObjectiveMode::kLexicographic);

inline constexpr std::size_t kPoolingOracleMaxEdges = 20;
BundleAssignment exhaustive_pooling_oracle(const RTVGraph& g,
                                           const std::set<RequestId>& prev_assigned);

std::uint64_t bundle_tie_key(VehicleId v, std::span<const RequestId> members);

}  // namespace modsim
