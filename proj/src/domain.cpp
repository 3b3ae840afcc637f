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

#include "modsim/domain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace modsim {

std::string_view to_string(RequestStatus status) {
  switch (status) {
    case RequestStatus::kUnrevealed: return "unrevealed";
    case RequestStatus::kNotAssigned: return "not_assigned";
    case RequestStatus::kWaiting: return "waiting";
    case RequestStatus::kOnBoard: return "on_board";
    case RequestStatus::kServed: return "served";
    case RequestStatus::kLeft: return "left";
  }
  return "?";
}

std::string_view to_string(LeaveReason reason) {
  switch (reason) {
    case LeaveReason::kNone: return "none";
    case LeaveReason::kOperatorReject: return "operator_reject";
    case LeaveReason::kWalkAway: return "walk_away";
  }
  return "?";
}

std::string_view to_string(RouteVerdict verdict) {
  switch (verdict) {
    case RouteVerdict::kFeasible: return "feasible";
    case RouteVerdict::kStructural: return "structural";
    case RouteVerdict::kPickupWindow: return "pickup_window";
    case RouteVerdict::kRideTime: return "ride_time";
    case RouteVerdict::kCapacity: return "capacity";
    case RouteVerdict::kTiming: return "timing";
  }
  return "?";
}

bool status_transition_allowed(RequestStatus from, RequestStatus to) {
  using S = RequestStatus;
  switch (from) {
    case S::kUnrevealed: return to == S::kNotAssigned;
    case S::kNotAssigned: return to == S::kWaiting || to == S::kLeft;
    case S::kWaiting:
      return to == S::kOnBoard || to == S::kNotAssigned || to == S::kWaiting;
    case S::kOnBoard: return to == S::kServed;
    case S::kServed:
    case S::kLeft: return false;
  }
  return false;
}

void validate_request(const Request& r, const Network& net) {
  const std::string who = "request " + std::to_string(r.id);
  if (!net.has_node(r.origin)) throw ValidationError(who, "unknown origin node");
  if (!net.has_node(r.destination)) {
    throw ValidationError(who, "unknown destination node");
  }
  if (r.origin == r.destination) {
    throw ValidationError(who, "origin equals destination");
  }
  if (r.request_time < 0) throw ValidationError(who, "negative request time");
  if (r.max_wait <= 0) throw ValidationError(who, "max_wait must be positive");
  if (r.max_ride < net.travel_time(r.origin, r.destination)) {
    throw ValidationError(who, "max_ride below direct travel time");
  }
}

Time max_ride_for(Time direct_time, double detour_factor) {
  const double scaled = detour_factor * static_cast<double>(direct_time);
  const auto bound = static_cast<Time>(std::ceil(scaled - 1e-9));
  return std::max(bound, direct_time);
}

std::vector<RequestId> Route::pickups() const {
  std::vector<RequestId> out;
  for (const Stop& s : stops) out.insert(out.end(), s.pickups.begin(), s.pickups.end());
  std::sort(out.begin(), out.end());
  return out;
}

SystemState::SystemState(std::vector<Request> reqs, std::vector<Vehicle> fleet)
    : requests(std::move(reqs)), vehicles(std::move(fleet)) {
  std::sort(requests.begin(), requests.end(),
            [](const Request& a, const Request& b) { return a.id < b.id; });
  std::sort(vehicles.begin(), vehicles.end(),
            [](const Vehicle& a, const Vehicle& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < requests.size(); ++i) {
    if (requests[i].id == requests[i - 1].id) {
      throw ModsimError("duplicate request id " + std::to_string(requests[i].id));
    }
  }
  for (std::size_t i = 1; i < vehicles.size(); ++i) {
    if (vehicles[i].id == vehicles[i - 1].id) {
      throw ModsimError("duplicate vehicle id " + std::to_string(vehicles[i].id));
    }
  }
}

namespace {

template <typename Vec>
auto find_by_id(Vec& items, std::int32_t id) {
  auto it = std::lower_bound(items.begin(), items.end(), id,
                             [](const auto& item, std::int32_t key) { return item.id < key; });
  return (it != items.end() && it->id == id) ? &*it : nullptr;
}

}  // namespace

const Request& SystemState::request(RequestId id) const {
  if (auto* r = find_by_id(requests, id)) return *r;
  throw ModsimError("unknown request id " + std::to_string(id));
}

Request& SystemState::request(RequestId id) {
  if (auto* r = find_by_id(requests, id)) return *r;
  throw ModsimError("unknown request id " + std::to_string(id));
}

const Vehicle& SystemState::vehicle(VehicleId id) const {
  if (auto* v = find_by_id(vehicles, id)) return *v;
  throw ModsimError("unknown vehicle id " + std::to_string(id));
}

Vehicle& SystemState::vehicle(VehicleId id) {
  if (auto* v = find_by_id(vehicles, id)) return *v;
  throw ModsimError("unknown vehicle id " + std::to_string(id));
}

bool SystemState::has_request(RequestId id) const {
  return find_by_id(requests, id) != nullptr;
}

bool SystemState::has_vehicle(VehicleId id) const {
  return find_by_id(vehicles, id) != nullptr;
}

std::vector<RequestId> SystemState::active_requests() const {
  std::vector<RequestId> out;
  for (const Request& r : requests) {
    if (r.status == RequestStatus::kNotAssigned || r.status == RequestStatus::kWaiting) {
      out.push_back(r.id);
    }
  }
  return out;
}

std::vector<RequestId> SystemState::with_status(RequestStatus status) const {
  std::vector<RequestId> out;
  for (const Request& r : requests) {
    if (r.status == status) out.push_back(r.id);
  }
  return out;
}

Route schedule_route(const Vehicle& v, std::span<const StopAction> actions,
                     Time now, const Network& net, const SystemState& state) {
  Route route;
  NodeId at = v.position;
  Time clock = v.start_time(now);
  for (const StopAction& a : actions) {
    const Request& r = state.request(a.request);
    const NodeId loc = a.pickup ? r.origin : r.destination;
    clock += net.travel_time(at, loc);
    at = loc;
    Stop stop{loc, {}, {}, clock};
    (a.pickup ? stop.pickups : stop.dropoffs).push_back(a.request);
    route.stops.push_back(std::move(stop));
  }
  return route;
}

RouteCheck route_feasible(const Vehicle& v, const Route& candidate, Time now,
                          const Network& net, const SystemState& state) {
  auto fail = [](RouteVerdict verdict, RequestId r, std::size_t stop, std::string why) {
    return RouteCheck{verdict, r, stop, std::move(why)};
  };

  // Structure first, so that malformed routes never report as infeasible.
  std::map<RequestId, std::size_t> pickup_at;
  std::map<RequestId, std::size_t> dropoff_at;
  const std::set<RequestId> onboard(v.onboard.begin(), v.onboard.end());
  for (std::size_t i = 0; i < candidate.stops.size(); ++i) {
    const Stop& s = candidate.stops[i];
    if (s.pickups.empty() && s.dropoffs.empty()) {
      return fail(RouteVerdict::kStructural, -1, i, "stop without actions");
    }
    for (RequestId id : s.pickups) {
      if (!state.has_request(id)) return fail(RouteVerdict::kStructural, id, i, "unknown request");
      if (onboard.count(id)) return fail(RouteVerdict::kStructural, id, i, "pickup of onboard request");
      if (!pickup_at.emplace(id, i).second) {
        return fail(RouteVerdict::kStructural, id, i, "duplicate pickup");
      }
      if (state.request(id).origin != s.location) {
        return fail(RouteVerdict::kStructural, id, i, "pickup away from origin");
      }
    }
    for (RequestId id : s.dropoffs) {
      if (!state.has_request(id)) return fail(RouteVerdict::kStructural, id, i, "unknown request");
      if (!dropoff_at.emplace(id, i).second) {
        return fail(RouteVerdict::kStructural, id, i, "duplicate dropoff");
      }
      if (std::find(s.pickups.begin(), s.pickups.end(), id) != s.pickups.end()) {
        return fail(RouteVerdict::kStructural, id, i, "pickup and dropoff in one stop");
      }
      if (state.request(id).destination != s.location) {
        return fail(RouteVerdict::kStructural, id, i, "dropoff away from destination");
      }
      auto p = pickup_at.find(id);
      if (p == pickup_at.end() && !onboard.count(id)) {
        return fail(RouteVerdict::kStructural, id, i, "dropoff before pickup");
      }
    }
  }
  for (const auto& [id, at] : pickup_at) {
    if (!dropoff_at.count(id)) return fail(RouteVerdict::kStructural, id, at, "pickup without dropoff");
  }
  for (RequestId id : onboard) {
    if (!dropoff_at.count(id)) return fail(RouteVerdict::kStructural, id, 0, "onboard request without dropoff");
  }

  NodeId at = v.position;
  Time clock = v.start_time(now);
  auto load = static_cast<int>(v.onboard.size());
  if (load > v.capacity) return fail(RouteVerdict::kCapacity, -1, 0, "onboard exceeds capacity");
  std::map<RequestId, Time> picked;
  for (RequestId id : v.onboard) picked[id] = state.request(id).pickup_time;

  for (std::size_t i = 0; i < candidate.stops.size(); ++i) {
    const Stop& s = candidate.stops[i];
    const Time earliest = clock + net.travel_time(at, s.location);
    if (s.planned_arrival < earliest) {
      return fail(RouteVerdict::kTiming, -1, i, "planned arrival not realizable");
    }
    clock = s.planned_arrival;
    at = s.location;
    for (RequestId id : s.dropoffs) {
      const Request& r = state.request(id);
      if (clock - picked.at(id) > r.max_ride) {
        return fail(RouteVerdict::kRideTime, id, i, "ride exceeds max_ride");
      }
      --load;
    }
    for (RequestId id : s.pickups) {
      const Request& r = state.request(id);
      if (clock > latest_pickup(r)) {
        return fail(RouteVerdict::kPickupWindow, id, i, "pickup after latest pickup");
      }
      picked[id] = clock;
      ++load;
    }
    if (load > v.capacity) return fail(RouteVerdict::kCapacity, -1, i, "capacity exceeded");
  }
  return {};
}

Cost route_cost(const Route& candidate, const Vehicle& v, Time now,
                const CostWeights& weights, const SystemState& state) {
  Time driving = 0;
  Time waits = 0;
  Time rides = 0;
  Time clock = v.start_time(now);
  std::map<RequestId, Time> picked;
  for (RequestId id : v.onboard) picked[id] = state.request(id).pickup_time;
  for (const Stop& s : candidate.stops) {
    driving += s.planned_arrival - clock;
    clock = s.planned_arrival;
    for (RequestId id : s.pickups) {
      waits += clock - state.request(id).request_time;
      picked[id] = clock;
    }
    for (RequestId id : s.dropoffs) rides += clock - picked.at(id);
  }
  return weights.dist * driving + weights.wait * waits + weights.ride * rides;
}

std::vector<StateViolation> validate_state(const SystemState& s) {
  std::vector<StateViolation> out;
  auto flag = [&](std::string subject, std::string rule) {
    out.push_back({std::move(subject), std::move(rule)});
  };
  auto req_name = [](RequestId id) { return "request " + std::to_string(id); };
  auto veh_name = [](VehicleId id) { return "vehicle " + std::to_string(id); };

  std::map<RequestId, std::vector<VehicleId>> in_routes;
  std::map<RequestId, std::vector<VehicleId>> in_onboard;
  for (const Vehicle& v : s.vehicles) {
    if (static_cast<int>(v.onboard.size()) > v.capacity) {
      flag(veh_name(v.id), "onboard count exceeds capacity");
    }
    std::set<RequestId> dropped;
    std::set<RequestId> picked;
    int load = static_cast<int>(v.onboard.size());
    bool over = false;
    for (const Stop& stop : v.route.stops) {
      for (RequestId id : stop.dropoffs) {
        dropped.insert(id);
        --load;
      }
      for (RequestId id : stop.pickups) {
        picked.insert(id);
        in_routes[id].push_back(v.id);
        ++load;
      }
      over = over || load > v.capacity;
    }
    if (over) flag(veh_name(v.id), "capacity exceeded along route");
    for (RequestId id : v.onboard) {
      in_onboard[id].push_back(v.id);
      if (!dropped.count(id)) flag(req_name(id), "onboard without dropoff in route");
      if (picked.count(id)) flag(req_name(id), "onboard request has a pickup in route");
    }
  }

  for (const Request& r : s.requests) {
    const auto routes = in_routes.count(r.id) ? in_routes[r.id] : std::vector<VehicleId>{};
    const auto boards = in_onboard.count(r.id) ? in_onboard[r.id] : std::vector<VehicleId>{};
    switch (r.status) {
      case RequestStatus::kWaiting:
        if (routes.empty()) {
          flag(req_name(r.id), "waiting but in no vehicle route");
        } else if (routes.size() > 1) {
          flag(req_name(r.id), "referenced by more than one vehicle route");
        } else if (routes.front() != r.vehicle) {
          flag(req_name(r.id), "waiting on a vehicle whose route does not serve it");
        }
        if (!boards.empty()) flag(req_name(r.id), "waiting but onboard a vehicle");
        break;
      case RequestStatus::kOnBoard:
        if (boards.size() != 1 || boards.front() != r.vehicle) {
          flag(req_name(r.id), "on board but not in exactly its vehicle's onboard set");
        }
        if (!routes.empty()) flag(req_name(r.id), "on board but still has a pickup");
        break;
      default:
        if (!routes.empty() || !boards.empty()) {
          flag(req_name(r.id),
               std::string(to_string(r.status)) + " request referenced by a vehicle");
        }
        break;
    }
  }
  return out;
}

}  // namespace modsim
