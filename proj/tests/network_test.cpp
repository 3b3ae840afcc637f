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

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "modsim/network.hpp"
#include "oracles.hpp"

namespace {

using namespace modsim;

TEST(Grid, DegenerateSingleNode) {
  const Network net = build_grid(1, 1, 1);
  EXPECT_EQ(net.node_count(), 1U);
  EXPECT_EQ(net.edge_count(), 0U);
  EXPECT_EQ(net.travel_time(0, 0), 0);
}

TEST(Grid, EdgeCounts) {
  EXPECT_EQ(build_grid(2, 2, 1).edge_count(), 8U);
  const Network g = build_grid(5, 5, 1);
  EXPECT_EQ(g.node_count(), 25U);
  // Enumerate 4-neighbour pairs directly.
  std::size_t arcs = 0;
  for (int x = 0; x < 5; ++x)
    for (int y = 0; y < 5; ++y)
      for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}})
        if (x + dx >= 0 && x + dx < 5 && y + dy >= 0 && y + dy < 5) ++arcs;
  EXPECT_EQ(arcs, 80U);
  EXPECT_EQ(g.edge_count(), arcs);
}

TEST(Grid, RejectsZeroDimensions) {
  EXPECT_THROW(build_grid(0, 3, 1), ValidationError);
  EXPECT_THROW(build_grid(3, 0, 1), ValidationError);
}

TEST(Grid, NodeNumbering) {
  EXPECT_EQ(grid_node(5, 3, 4), 23);
  EXPECT_EQ(grid_node(10, 0, 0), 0);
}

TEST(TravelTime, UnitGridExamples) {
  const Network g = build_grid(5, 5, 1);
  EXPECT_EQ(g.travel_time(grid_node(5, 0, 0), grid_node(5, 0, 0)), 0);
  EXPECT_EQ(g.travel_time(grid_node(5, 0, 0), grid_node(5, 3, 4)), 7);
  EXPECT_EQ(oracle::bfs_hops(g, grid_node(5, 0, 0), grid_node(5, 3, 4)), 7);
}

TEST(TravelTime, SingleEdgeNetwork) {
  const Network net({{0, 1, 4}, {1, 0, 4}});
  EXPECT_EQ(net.travel_time(0, 1), 4);
}

TEST(TravelTime, UnknownNodeThrows) {
  const Network g = build_grid(3, 3, 1);
  EXPECT_THROW(g.travel_time(0, 99), ModsimError);
  EXPECT_THROW(g.shortest_path(99, 0), ModsimError);
  EXPECT_THROW(g.backward_reachable(99, 3), ModsimError);
}

TEST(Network, RejectsBrokenInputs) {
  EXPECT_THROW(Network({{0, 1, 1}}), ModsimError);            // not strongly connected
  EXPECT_THROW(Network({{0, 1, -1}, {1, 0, 1}}), ModsimError);  // negative time
  EXPECT_THROW(Network({}), ModsimError);
}

TEST(ShortestPath, Identity) {
  const Network g = build_grid(5, 5, 1);
  const PathResult p = g.shortest_path(0, 0);
  EXPECT_EQ(p.total_time, 0);
  EXPECT_EQ(p.node_sequence, std::vector<NodeId>{0});
}

TEST(ShortestPath, StraightLine) {
  const Network g = build_grid(5, 5, 1);
  const PathResult p = g.shortest_path(grid_node(5, 0, 0), grid_node(5, 0, 2));
  EXPECT_EQ(p.total_time, 2);
  EXPECT_EQ(p.node_sequence, (std::vector<NodeId>{0, 5, 10}));
}

TEST(ShortestPath, TieBreaksLexicographically) {
  // 0 -> 1 -> 3 and 0 -> 2 -> 3 both take 2.
  const Network net({{0, 1, 1}, {0, 2, 1}, {1, 3, 1}, {2, 3, 1}, {3, 0, 1}});
  EXPECT_EQ(net.shortest_path(0, 3).node_sequence, (std::vector<NodeId>{0, 1, 3}));
  // On the grid, (0,0) -> (1,1) goes through node 1 rather than node 2.
  const Network g = build_grid(2, 2, 1);
  EXPECT_EQ(g.shortest_path(0, 3).node_sequence, (std::vector<NodeId>{0, 1, 3}));
}

TEST(ShortestPath, PrefersFewerHopsOnEqualTime) {
  const Network net({{0, 1, 1}, {1, 2, 1}, {0, 2, 2}, {2, 0, 1}});
  EXPECT_EQ(net.shortest_path(0, 2).node_sequence, (std::vector<NodeId>{0, 2}));
}

TEST(BackwardReachable, Examples) {
  const Network g = build_grid(5, 5, 1);
  const NodeId center = grid_node(5, 2, 2);
  const auto zero = g.backward_reachable(center, 0);
  EXPECT_EQ(zero.size(), 1U);
  EXPECT_EQ(zero.at(center), 0);
  EXPECT_EQ(g.backward_reachable(center, 1).size(), 5U);
  EXPECT_EQ(g.backward_reachable(center, g.diameter()).size(), 25U);
}

// Random strongly connected networks with a Hamiltonian cycle and extra arcs.
Network random_network(std::mt19937_64& rng, int n) {
  std::uniform_int_distribution<int> node(0, n - 1);
  std::uniform_int_distribution<Time> time(0, 6);
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, time(rng) + 1});
  for (int k = 0; k < 2 * n; ++k) edges.push_back({node(rng), node(rng), time(rng)});
  return Network(edges);
}

TEST(NetworkProperty, MatchesFloydWarshall) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const Network net = random_network(rng, 3 + trial % 12);
    const oracle::Distances fw(net);
    Time diameter = 0;
    for (NodeId a : net.nodes()) {
      for (NodeId b : net.nodes()) {
        ASSERT_EQ(net.travel_time(a, b), fw(a, b));
        diameter = std::max(diameter, fw(a, b));
        const PathResult p = net.shortest_path(a, b);
        ASSERT_EQ(p.total_time, fw(a, b));
        ASSERT_EQ(p.node_sequence.front(), a);
        ASSERT_EQ(p.node_sequence.back(), b);
        Time sum = 0;
        for (std::size_t i = 1; i < p.node_sequence.size(); ++i) {
          sum += fw(p.node_sequence[i - 1], p.node_sequence[i]);
        }
        ASSERT_EQ(sum, p.total_time);
      }
    }
    EXPECT_EQ(net.diameter(), diameter);
    for (NodeId target : net.nodes()) {
      for (Time budget : {0, 2, 5, 11}) {
        const auto reach = net.backward_reachable(target, budget);
        std::map<NodeId, Time> expect;
        for (NodeId u : net.nodes()) {
          if (fw(u, target) <= budget) expect[u] = fw(u, target);
        }
        ASSERT_EQ(reach, expect);
      }
    }
  }
}

TEST(NetworkProperty, LargeNetworkUsesLazyRows) {
  const Network g = build_grid(50, 50, 1);
  ASSERT_GT(g.node_count(), Network::kAllPairsLimit);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> c(0, 49);
  for (int k = 0; k < 30; ++k) {
    const int x0 = c(rng), y0 = c(rng), x1 = c(rng), y1 = c(rng);
    EXPECT_EQ(g.travel_time(grid_node(50, x0, y0), grid_node(50, x1, y1)),
              std::abs(x0 - x1) + std::abs(y0 - y1));
  }
}

TEST(EdgeList, ParsesAndRejects) {
  std::istringstream ok("# tiny\n0 1 3\n1 0 3  # back\n\n");
  const Network net = parse_edge_list(ok);
  EXPECT_EQ(net.travel_time(0, 1), 3);
  std::istringstream bad("0 1\n");
  EXPECT_THROW(parse_edge_list(bad), ModsimError);
  std::istringstream junk("0 1 x\n");
  EXPECT_THROW(parse_edge_list(junk), ModsimError);
  EXPECT_THROW(load_edge_list("/nonexistent/edges.txt"), ModsimError);
}

}  // namespace
