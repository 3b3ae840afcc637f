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

#include <cstddef>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "modsim/types.hpp"

namespace modsim {

struct Edge {
  NodeId from = 0;
  NodeId to = 0;
  Time travel_time = 0;
};

struct PathResult {
  Time total_time = 0;
  std::vector<NodeId> node_sequence;
};

// Static directed street network with exact integer travel times.
//
// Shortest-path distances are answered from per-target rows. Networks up to
// kAllPairsLimit nodes get every row at construction; larger ones compute
// rows on first use and memoize them. Either way the object is safe to share
// read-only between threads.
class Network {
 public:
  static constexpr std::size_t kAllPairsLimit = 2000;

  // Validates endpoints, non-negative times and strong connectivity.
  // `extra_nodes` declares nodes that may have no edges (only legal for a
  // single-node network, otherwise connectivity fails).
  Network(std::vector<Edge> edges, std::vector<NodeId> extra_nodes = {});

  Network(Network&&) noexcept;
  Network& operator=(Network&&) noexcept;
  ~Network();

  std::size_t node_count() const { return ids_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<NodeId>& nodes() const { return ids_; }
  const std::vector<Edge>& edges() const { return edges_; }
  bool has_node(NodeId id) const;

  Time travel_time(NodeId from, NodeId to) const;

  // Minimal travel time; among minimal paths the fewest hops, then the
  // lexicographically smallest node sequence.
  PathResult shortest_path(NodeId from, NodeId to) const;

  // Bounded backwards Dijkstra: every node whose travel time to `target` is
  // at most `budget`, keyed by node id.
  std::map<NodeId, Time> backward_reachable(NodeId target, Time budget) const;

  // Largest finite travel time over all ordered pairs.
  Time diameter() const;

 private:
  struct Row {
    std::vector<Time> time;  // indexed by source index
    std::vector<std::int32_t> hops;
  };
  struct Arc {
    std::int32_t head;
    Time travel_time;
  };

  std::size_t index_of(NodeId id) const;
  const Row& row_to(std::size_t target) const;
  Row compute_row(std::size_t target) const;

  std::vector<NodeId> ids_;  // sorted
  std::unordered_map<NodeId, std::size_t> index_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Arc>> out_;  // sorted by head id
  std::vector<std::vector<Arc>> in_;
  mutable std::vector<std::unique_ptr<Row>> rows_;
  mutable std::unique_ptr<std::mutex> rows_mutex_;
};

// 4-connected grid with bidirectional arcs; node (x, y) has id y * width + x.
Network build_grid(int width, int height, Time edge_time);

inline NodeId grid_node(int width, int x, int y) { return y * width + x; }

// Edge-list text: one `from to travel_time` triple per line, `#` comments.
Network parse_edge_list(std::istream& in);
Network load_edge_list(const std::string& path);

}  // namespace modsim
