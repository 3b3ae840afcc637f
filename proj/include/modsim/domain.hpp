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

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "modsim/network.hpp"
#include "modsim/types.hpp"

namespace modsim {

enum class RequestStatus { kUnrevealed, kNotAssigned, kWaiting, kOnBoard, kServed, kLeft };
enum class LeaveReason { kNone, kOperatorReject, kWalkAway };

std::string_view to_string(RequestStatus status);
std::string_view to_string(LeaveReason reason);

struct Request {
  RequestId id = 0;
  NodeId origin = 0;
  NodeId destination = 0;
  Time request_time = 0;
  Time max_wait = 0;
  Time max_ride = 0;

  RequestStatus status = RequestStatus::kUnrevealed;
  VehicleId vehicle = kNoVehicle;  // set while Waiting or OnBoard
  LeaveReason leave_reason = LeaveReason::kNone;
  Time pickup_time = kNoTime;
  Time dropoff_time = kNoTime;
};

// Deadline for the pickup; fixed for the life of the request.
constexpr Time latest_pickup(const Request& r) { return r.request_time + r.max_wait; }

// Legal edges of the request life cycle. Waiting -> NotAssigned is part of
// the machine; whether the engine may take it depends on its configuration.
bool status_transition_allowed(RequestStatus from, RequestStatus to);

// Throws ValidationError when the static tuple is malformed (origin equal to
// destination, non-positive wait, ride bound below the direct trip).
void validate_request(const Request& r, const Network& net);

// Max ride bound from a detour factor: ceil(factor * direct travel time).
Time max_ride_for(Time direct_time, double detour_factor);

struct Stop {
  NodeId location = 0;
  std::vector<RequestId> pickups;
  std::vector<RequestId> dropoffs;
  Time planned_arrival = 0;
};

struct Route {
  std::vector<Stop> stops;

  bool empty() const { return stops.empty(); }
  std::vector<RequestId> pickups() const;
};

struct Waypoint {
  NodeId node = 0;
  Time arrival = 0;
};

struct Vehicle {
  VehicleId id = 0;
  NodeId position = 0;   // current node, or the node being driven to
  Time ready_time = 0;   // when the vehicle stands at `position`
  int capacity = 1;
  std::vector<RequestId> onboard;  // sorted
  Route route;
  std::vector<Waypoint> path;  // remaining node-level trajectory
  Time odometer = 0;

  Time start_time(Time now) const { return ready_time > now ? ready_time : now; }
};

struct SystemState {
  int batch = 0;
  Time time = 0;
  std::vector<Request> requests;  // sorted by id
  std::vector<Vehicle> vehicles;  // sorted by id

  SystemState() = default;
  SystemState(std::vector<Request> reqs, std::vector<Vehicle> fleet);

  const Request& request(RequestId id) const;
  Request& request(RequestId id);
  const Vehicle& vehicle(VehicleId id) const;
  Vehicle& vehicle(VehicleId id);
  bool has_request(RequestId id) const;
  bool has_vehicle(VehicleId id) const;

  // NotAssigned and Waiting requests, ascending id.
  std::vector<RequestId> active_requests() const;
  std::vector<RequestId> with_status(RequestStatus status) const;
};

// One pickup or dropoff of a single request; the location follows from the
// request record.
struct StopAction {
  RequestId request = 0;
  bool pickup = true;

  friend bool operator==(const StopAction&, const StopAction&) = default;
  friend auto operator<=>(const StopAction& a, const StopAction& b) {
    // Pickup sorts before dropoff of the same request.
    if (a.request != b.request) return a.request <=> b.request;
    return b.pickup <=> a.pickup;
  }
};

// Builds a route that executes `actions` in order with zero dwell, starting
// at the vehicle's position no earlier than `now`.
Route schedule_route(const Vehicle& v, std::span<const StopAction> actions,
                     Time now, const Network& net, const SystemState& state);

enum class RouteVerdict {
  kFeasible,
  kStructural,    // malformed: precedence, duplicates, unknown requests
  kPickupWindow,  // pickup after latest_pickup
  kRideTime,      // ride exceeds max_ride
  kCapacity,
  kTiming,        // planned arrivals not realizable
};

std::string_view to_string(RouteVerdict verdict);

struct RouteCheck {
  RouteVerdict verdict = RouteVerdict::kFeasible;
  RequestId request = -1;
  std::size_t stop_index = 0;
  std::string detail;

  bool feasible() const { return verdict == RouteVerdict::kFeasible; }
};

RouteCheck route_feasible(const Vehicle& v, const Route& candidate, Time now,
                          const Network& net, const SystemState& state);

// w.dist * driving + w.wait * sum of planned waits (pickup - request time)
// + w.ride * sum of planned rides (dropoff - pickup), over the route's
// requests. Onboard requests contribute their realized pickup time.
Cost route_cost(const Route& candidate, const Vehicle& v, Time now,
                const CostWeights& weights, const SystemState& state);

struct StateViolation {
  std::string subject;
  std::string rule;
};

std::vector<StateViolation> validate_state(const SystemState& s);

}  // namespace modsim
