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
#include <set>
#include <vector>

#include "modsim/domain.hpp"
#include "modsim/network.hpp"

namespace modsim {

// Assignment rewards. P+ protects previously confirmed requests, P- rewards
// each assigned request; both must dominate every secondary cost sum.
struct Penalties {
  Cost p_plus = 0;
  Cost p_minus = 0;
};

// Lexicographic batch objective: more previously assigned requests, then
// more new requests, then lower secondary cost, then the id-derived key.
struct PriorityObjective {
  int assigned_prev = 0;
  int assigned_new = 0;
  Cost secondary_cost = 0;
  std::uint64_t tie_key = 0;

  PriorityObjective& operator+=(const PriorityObjective& o) {
    assigned_prev += o.assigned_prev;
    assigned_new += o.assigned_new;
    secondary_cost += o.secondary_cost;
    tie_key += o.tie_key;
    return *this;
  }
};

// True when `a` is strictly preferred to `b`.
bool better(const PriorityObjective& a, const PriorityObjective& b);

struct RvEdge {
  RequestId request = 0;
  VehicleId vehicle = 0;
  Time pickup_wait = 0;  // planned pickup minus batch time
  Cost edge_cost = 0;    // incremental route cost of serving the request
  Route route;           // the vehicle's full route if assigned
};

struct RVGraph {
  Time batch_time = 0;
  std::vector<RequestId> requests;  // active requests, ascending
  std::vector<VehicleId> vehicles;  // whole fleet, ascending
  std::vector<RvEdge> edges;        // ascending (request, vehicle)
  std::map<VehicleId, Route> baseline_routes;  // onboard-only routes

  const RvEdge* find(RequestId r, VehicleId v) const;
  std::set<VehicleId> vehicles_for(RequestId r) const;
};

struct AssignmentSolution {
  std::map<VehicleId, RequestId> pairs;
  int assigned_prev = 0;
  int assigned_new = 0;
  Cost secondary_cost = 0;
  std::uint64_t tie_key = 0;

  PriorityObjective objective() const {
    return {assigned_prev, assigned_new, secondary_cost, tie_key};
  }
};

// P- = 1 + sum of edge costs, P+ = 1 + |requests| * P-.
Penalties penalties_for(const RVGraph& g);

// Where and when the vehicle becomes free of its onboard commitments.
struct VehicleRelease {
  NodeId node = 0;
  Time time = 0;
};

VehicleRelease release_point(const Vehicle& v, Time t, const Network& net,
                             const SystemState& s);

// Vehicles able to reach the request origin by its latest pickup after
// finishing their onboard dropoffs; found with a backwards search of radius
// latest_pickup(r) - t around the origin.
std::set<VehicleId> feasible_vehicles(const SystemState& s, const Request& r,
                                      Time t, const Network& net);

// Other active requests that some feasible vehicle of `r` could serve.
std::set<RequestId> competing_requests(const SystemState& s, const Request& r,
                                       Time t, const Network& net);

RVGraph build_rv_graph(const SystemState& s, Time t, const Network& net,
                       const CostWeights& weights);

// Keeps only the confirmed (request, vehicle) pairs of Waiting requests and
// removes every other edge touching those requests or vehicles.
RVGraph freeze_rv_graph(const RVGraph& g, const SystemState& s);

AssignmentSolution solve_hailing(const RVGraph& g,
                                 const std::set<RequestId>& prev_assigned,
                                 const Penalties& penalties);

// Exhaustive lexicographic optimum; test oracle for small instances.
inline constexpr std::size_t kOracleMaxSide = 8;
AssignmentSolution priority_matching_oracle(const RVGraph& g,
                                            const std::set<RequestId>& prev_assigned);

}  // namespace modsim
