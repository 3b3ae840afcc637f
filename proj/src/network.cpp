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

#include "modsim/network.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <istream>
#include <queue>
#include <sstream>
#include <tuple>
#include <utility>

namespace modsim {
namespace {

using Label = std::tuple<Time, std::int32_t, std::size_t>;  // time, hops, node

bool all_reached(const std::vector<char>& seen) {
  return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
}

}  // namespace

Network::Network(std::vector<Edge> edges, std::vector<NodeId> extra_nodes)
    : edges_(std::move(edges)), rows_mutex_(std::make_unique<std::mutex>()) {
  std::vector<NodeId> ids = std::move(extra_nodes);
  for (const Edge& e : edges_) {
    if (e.from < 0 || e.to < 0) {
      throw ModsimError("network: node ids must be non-negative");
    }
    if (e.travel_time < 0) {
      throw ModsimError("network: negative travel time on edge " +
                        std::to_string(e.from) + "->" + std::to_string(e.to));
    }
    ids.push_back(e.from);
    ids.push_back(e.to);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.empty()) throw ModsimError("network: no nodes");
  if (ids.front() < 0) throw ModsimError("network: node ids must be non-negative");
  ids_ = std::move(ids);
  for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);

  out_.resize(ids_.size());
  in_.resize(ids_.size());
  for (const Edge& e : edges_) {
    const auto from = index_.at(e.from);
    const auto to = index_.at(e.to);
    out_[from].push_back({static_cast<std::int32_t>(to), e.travel_time});
    in_[to].push_back({static_cast<std::int32_t>(from), e.travel_time});
  }
  auto by_head = [](const Arc& a, const Arc& b) {
    return std::tie(a.head, a.travel_time) < std::tie(b.head, b.travel_time);
  };
  for (auto& arcs : out_) std::sort(arcs.begin(), arcs.end(), by_head);
  for (auto& arcs : in_) std::sort(arcs.begin(), arcs.end(), by_head);

  // Strong connectivity: everything reachable from node 0 in both directions.
  for (const auto* adjacency : {&out_, &in_}) {
    std::vector<char> seen(ids_.size(), 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (const Arc& a : (*adjacency)[u]) {
        if (!seen[a.head]) {
          seen[a.head] = 1;
          stack.push_back(a.head);
        }
      }
    }
    if (!all_reached(seen)) {
      throw ModsimError("network: graph is not strongly connected");
    }
  }

  rows_.resize(ids_.size());
  if (ids_.size() <= kAllPairsLimit) {
    for (std::size_t t = 0; t < ids_.size(); ++t) {
      rows_[t] = std::make_unique<Row>(compute_row(t));
    }
  }
}

Network::Network(Network&&) noexcept = default;
Network& Network::operator=(Network&&) noexcept = default;
Network::~Network() = default;

bool Network::has_node(NodeId id) const { return index_.count(id) != 0; }

std::size_t Network::index_of(NodeId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw ModsimError("network: unknown node id " + std::to_string(id));
  }
  return it->second;
}

Network::Row Network::compute_row(std::size_t target) const {
  const std::size_t n = ids_.size();
  Row row{std::vector<Time>(n, kUnreachable),
          std::vector<std::int32_t>(n, std::numeric_limits<std::int32_t>::max())};
  std::priority_queue<Label, std::vector<Label>, std::greater<>> heap;
  row.time[target] = 0;
  row.hops[target] = 0;
  heap.emplace(0, 0, target);
  while (!heap.empty()) {
    auto [t, h, u] = heap.top();
    heap.pop();
    if (std::tie(t, h) != std::tie(row.time[u], row.hops[u])) continue;
    for (const Arc& a : in_[u]) {
      const Time nt = t + a.travel_time;
      const std::int32_t nh = h + 1;
      if (std::tie(nt, nh) < std::tie(row.time[a.head], row.hops[a.head])) {
        row.time[a.head] = nt;
        row.hops[a.head] = nh;
        heap.emplace(nt, nh, static_cast<std::size_t>(a.head));
      }
    }
  }
  return row;
}

const Network::Row& Network::row_to(std::size_t target) const {
  if (ids_.size() <= kAllPairsLimit) return *rows_[target];
  std::lock_guard<std::mutex> lock(*rows_mutex_);
  if (!rows_[target]) rows_[target] = std::make_unique<Row>(compute_row(target));
  return *rows_[target];
}

Time Network::travel_time(NodeId from, NodeId to) const {
  const auto f = index_of(from);
  const auto t = index_of(to);
  return row_to(t).time[f];
}

PathResult Network::shortest_path(NodeId from, NodeId to) const {
  const auto target = index_of(to);
  auto cur = index_of(from);
  const Row& row = row_to(target);
  PathResult result{row.time[cur], {ids_[cur]}};
  while (cur != target) {
    std::size_t next = cur;
    for (const Arc& a : out_[cur]) {
      if (a.travel_time + row.time[a.head] == row.time[cur] &&
          row.hops[a.head] + 1 == row.hops[cur]) {
        next = static_cast<std::size_t>(a.head);
        break;
      }
    }
    cur = next;
    result.node_sequence.push_back(ids_[cur]);
  }
  return result;
}

std::map<NodeId, Time> Network::backward_reachable(NodeId target,
                                                   Time budget) const {
  const auto t = index_of(target);
  std::map<NodeId, Time> reached;
  if (budget < 0) return reached;
  std::vector<Time> dist(ids_.size(), kUnreachable);
  using Entry = std::pair<Time, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  dist[t] = 0;
  heap.emplace(0, t);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d != dist[u]) continue;
    reached.emplace(ids_[u], d);
    for (const Arc& a : in_[u]) {
      const Time nd = d + a.travel_time;
      if (nd <= budget && nd < dist[a.head]) {
        dist[a.head] = nd;
        heap.emplace(nd, static_cast<std::size_t>(a.head));
      }
    }
  }
  return reached;
}

Time Network::diameter() const {
  Time best = 0;
  for (std::size_t t = 0; t < ids_.size(); ++t) {
    for (Time x : row_to(t).time) best = std::max(best, x);
  }
  return best;
}

Network build_grid(int width, int height, Time edge_time) {
  if (width < 1 || height < 1) {
    throw ValidationError("network", "grid dimensions must be at least 1x1");
  }
  if (edge_time < 1) {
    throw ValidationError("network.edge_time", "must be at least 1");
  }
  std::vector<Edge> edges;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const NodeId u = grid_node(width, x, y);
      if (x + 1 < width) {
        const NodeId v = grid_node(width, x + 1, y);
        edges.push_back({u, v, edge_time});
        edges.push_back({v, u, edge_time});
      }
      if (y + 1 < height) {
        const NodeId v = grid_node(width, x, y + 1);
        edges.push_back({u, v, edge_time});
        edges.push_back({v, u, edge_time});
      }
    }
  }
  return Network(std::move(edges), {0});
}

Network parse_edge_list(std::istream& in) {
  std::vector<Edge> edges;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    long long from = 0, to = 0, time = 0;
    if (!(fields >> from)) continue;  // blank or comment-only
    std::string rest;
    if (!(fields >> to >> time) || (fields >> rest)) {
      throw ModsimError("edge list line " + std::to_string(line_no) +
                        ": expected `from to travel_time`");
    }
    if (from < 0 || to < 0) {
      throw ModsimError("edge list line " + std::to_string(line_no) +
                        ": node ids must be non-negative");
    }
    if (time < 0) {
      throw ModsimError("edge list line " + std::to_string(line_no) +
                        ": travel time must be non-negative");
    }
    edges.push_back({static_cast<NodeId>(from), static_cast<NodeId>(to),
                     static_cast<Time>(time)});
  }
  return Network(std::move(edges));
}

Network load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModsimError("cannot open edge list " + path);
  return parse_edge_list(in);
}

}  // namespace modsim
