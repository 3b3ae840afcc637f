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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "modsim/engine.hpp"

namespace modsim {

// First line of every event log.
struct EventLogHeader {
  std::uint64_t seed = 0;
  std::string mode;
  std::string policy;
  std::vector<NodeId> vehicle_positions;  // initial, by vehicle id

  friend bool operator==(const EventLogHeader&, const EventLogHeader&) = default;
};

struct EventLog {
  EventLogHeader header;
  std::vector<Event> events;
};

// JSON lines: the header, then one object per event with keys batch, kind,
// request, vehicle (null when absent) and time.
void write_event_log(std::ostream& out, const EventLogHeader& header,
                     std::span<const Event> events);
EventLog read_event_log(std::istream& in);

// Request tuples as JSON lines, for replaying a generated demand stream.
void write_requests(std::ostream& out, std::span<const Request> requests);
std::vector<Request> read_requests(std::istream& in);

// One JSON line describing the graph a batch was optimized on.
void write_batch_graph(std::ostream& out, int batch, const BatchDecision& decision);

}  // namespace modsim
