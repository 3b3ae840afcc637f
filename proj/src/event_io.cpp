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

#include "modsim/event_io.hpp"

#include <istream>
#include <ostream>

#include <json.hpp>

namespace modsim {

using Json = nlohmann::ordered_json;

namespace {

Json route_json(const Route& r) {
  Json stops = Json::array();
  for (const Stop& s : r.stops) {
    stops.push_back({{"node", s.location},
                     {"pickups", s.pickups},
                     {"dropoffs", s.dropoffs},
                     {"arrival", s.planned_arrival}});
  }
  return stops;
}

Json parse_line(const std::string& line, std::size_t number) {
  try {
    return Json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ModsimError("line " + std::to_string(number) + ": " + e.what());
  }
}

}  // namespace

void write_event_log(std::ostream& out, const EventLogHeader& header,
                     std::span<const Event> events) {
  Json h;
  h["seed"] = header.seed;
  h["mode"] = header.mode;
  h["policy"] = header.policy;
  h["vehicles"] = header.vehicle_positions;
  out << h.dump() << '\n';
  for (const Event& e : events) {
    Json j;
    j["batch"] = e.batch;
    j["kind"] = std::string(to_string(e.kind));
    j["request"] = e.request;
    j["vehicle"] = e.vehicle == kNoVehicle ? Json(nullptr) : Json(e.vehicle);
    j["time"] = e.time;
    out << j.dump() << '\n';
  }
  if (!out) throw ModsimError("failed writing event log");
}

EventLog read_event_log(std::istream& in) {
  EventLog log;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const Json j = parse_line(line, number);
    try {
      if (number == 1) {
        log.header.seed = j.at("seed").get<std::uint64_t>();
        log.header.mode = j.at("mode").get<std::string>();
        log.header.policy = j.at("policy").get<std::string>();
        log.header.vehicle_positions = j.at("vehicles").get<std::vector<NodeId>>();
        continue;
      }
      Event e;
      e.batch = j.at("batch").get<int>();
      e.kind = parse_event_kind(j.at("kind").get<std::string>());
      e.request = j.at("request").get<RequestId>();
      e.vehicle = j.at("vehicle").is_null() ? kNoVehicle : j.at("vehicle").get<VehicleId>();
      e.time = j.at("time").get<Time>();
      log.events.push_back(e);
    } catch (const nlohmann::json::exception& e) {
      throw ModsimError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  if (number == 0) throw ModsimError("empty event log");
  return log;
}

void write_requests(std::ostream& out, std::span<const Request> requests) {
  for (const Request& r : requests) {
    Json j;
    j["id"] = r.id;
    j["origin"] = r.origin;
    j["destination"] = r.destination;
    j["request_time"] = r.request_time;
    j["max_wait"] = r.max_wait;
    j["max_ride"] = r.max_ride;
    out << j.dump() << '\n';
  }
  if (!out) throw ModsimError("failed writing requests");
}

std::vector<Request> read_requests(std::istream& in) {
  std::vector<Request> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const Json j = parse_line(line, number);
    try {
      Request r;
      r.id = j.at("id").get<RequestId>();
      r.origin = j.at("origin").get<NodeId>();
      r.destination = j.at("destination").get<NodeId>();
      r.request_time = j.at("request_time").get<Time>();
      r.max_wait = j.at("max_wait").get<Time>();
      r.max_ride = j.at("max_ride").get<Time>();
      out.push_back(r);
    } catch (const nlohmann::json::exception& e) {
      throw ModsimError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

void write_batch_graph(std::ostream& out, int batch, const BatchDecision& d) {
  Json j;
  j["batch"] = batch;
  j["requests"] = std::vector<RequestId>(d.considered.begin(), d.considered.end());
  if (d.rv) {
    j["graph"] = "rv";
    Json edges = Json::array();
    for (const RvEdge& e : d.rv->edges) {
      edges.push_back({{"request", e.request},
                       {"vehicle", e.vehicle},
                       {"pickup_wait", e.pickup_wait},
                       {"cost", e.edge_cost}});
    }
    j["edges"] = std::move(edges);
  } else if (d.rtv) {
    j["graph"] = "rtv";
    Json bundles = Json::array();
    for (const Bundle& b : d.rtv->bundles) bundles.push_back({{"id", b.id}, {"members", b.members}});
    j["bundles"] = std::move(bundles);
    Json edges = Json::array();
    for (const VbEdge& e : d.rtv->vb_edges) {
      edges.push_back({{"vehicle", e.vehicle},
                       {"bundle", e.bundle},
                       {"cost", e.edge_cost},
                       {"route", route_json(e.best_route)}});
    }
    j["edges"] = std::move(edges);
  }
  Json assigned = Json::array();
  for (const auto& [v, rs] : d.assigned) assigned.push_back({{"vehicle", v}, {"requests", rs}});
  j["assigned"] = std::move(assigned);
  out << j.dump() << '\n';
}

}  // namespace modsim
