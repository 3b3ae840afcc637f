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

#include "modsim/pooling.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <tuple>

#include "modsim/assignment.hpp"

namespace modsim {

// ---------------------------------------------------------------------------
// best_route

namespace {

struct Slot {
  NodeId origin;
  NodeId destination;
  Time request_time;
  Time latest;
  Time max_ride;
  Time picked_at;  // kNoTime until picked up
  bool onboard;
};

class RouteSearch {
 public:
  RouteSearch(const Vehicle& v, std::span<const RequestId> members, Time now,
              const Network& net, const CostWeights& w, const SystemState& s)
      : weights_(w), capacity_(v.capacity) {
    std::vector<RequestId> ids(v.onboard.begin(), v.onboard.end());
    ids.insert(ids.end(), members.begin(), members.end());
    std::sort(ids.begin(), ids.end());
    for (RequestId id : ids) {
      const Request& r = s.request(id);
      const bool onboard = std::binary_search(v.onboard.begin(), v.onboard.end(), id);
      slot_ids_.push_back(id);
      slots_.push_back({r.origin, r.destination, r.request_time, latest_pickup(r), r.max_ride,
                        onboard ? r.pickup_time : kNoTime, onboard});
      if (!onboard) actions_.push_back({id, true});
      actions_.push_back({id, false});
    }
    std::sort(actions_.begin(), actions_.end());
    for (const StopAction& a : actions_) {
      action_slot_.push_back(slot_of(a.request));
    }

    // Local distance table over: vehicle position, then every slot's origin
    // and destination.
    locations_.push_back(v.position);
    for (const Slot& sl : slots_) {
      locations_.push_back(sl.origin);
      locations_.push_back(sl.destination);
    }
    const std::size_t n = locations_.size();
    dist_.assign(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        dist_[i * n + j] = net.travel_time(locations_[i], locations_[j]);
      }
    }
    start_ = v.start_time(now);
    load0_ = static_cast<int>(v.onboard.size());
  }

  std::optional<RouteChoice> run() {
    if (load0_ > capacity_) return std::nullopt;
    done_.assign(actions_.size(), 0);
    sequence_.clear();
    found_ = false;
    search(0, start_, load0_, 0);
    if (!found_) return std::nullopt;

    RouteChoice choice;
    choice.cost = best_cost_;
    std::size_t at = 0;
    Time clock = start_;
    for (std::size_t k : best_sequence_) {
      const StopAction& a = actions_[k];
      const Slot& sl = slots_[action_slot_[k]];
      const std::size_t loc = location_index(action_slot_[k], a.pickup);
      clock += d(at, loc);
      at = loc;
      Stop stop{a.pickup ? sl.origin : sl.destination, {}, {}, clock};
      (a.pickup ? stop.pickups : stop.dropoffs).push_back(a.request);
      choice.route.stops.push_back(std::move(stop));
    }
    return choice;
  }

 private:
  std::size_t slot_of(RequestId id) const {
    return static_cast<std::size_t>(
        std::lower_bound(slot_ids_.begin(), slot_ids_.end(), id) - slot_ids_.begin());
  }
  static std::size_t location_index(std::size_t slot, bool pickup) {
    return 1 + 2 * slot + (pickup ? 0 : 1);
  }
  Time d(std::size_t a, std::size_t b) const { return dist_[a * locations_.size() + b]; }

  // Remaining-cost lower bound from the current location; kUnreachable when
  // some remaining window can no longer be met.
  Cost lower_bound(std::size_t at, Time clock) const {
    Cost bound = 0;
    Time farthest = 0;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      const Slot& sl = slots_[i];
      const std::size_t dest = location_index(i, false);
      if (sl.picked_at == kNoTime) {
        const std::size_t orig = location_index(i, true);
        const Time arrive = clock + d(at, orig);
        if (arrive > sl.latest) return kUnreachable;
        bound += weights_.wait * (arrive - sl.request_time) + weights_.ride * d(orig, dest);
        farthest = std::max(farthest, d(at, orig) + d(orig, dest));
      } else if (!dropped_[i]) {
        const Time ride = clock + d(at, dest) - sl.picked_at;
        if (ride > sl.max_ride) return kUnreachable;
        bound += weights_.ride * ride;
        farthest = std::max(farthest, d(at, dest));
      }
    }
    return bound + weights_.dist * farthest;
  }

  void search(std::size_t at, Time clock, int load, Cost cost) {
    if (sequence_.size() == actions_.size()) {
      if (!found_ || cost < best_cost_) {
        found_ = true;
        best_cost_ = cost;
        best_sequence_ = sequence_;
      }
      return;
    }
    const Cost bound = lower_bound(at, clock);
    if (bound >= kUnreachable) return;
    if (found_ && cost + bound >= best_cost_) return;

    for (std::size_t k = 0; k < actions_.size(); ++k) {
      if (done_[k]) continue;
      const StopAction& a = actions_[k];
      const std::size_t si = action_slot_[k];
      Slot& sl = slots_[si];
      if (!a.pickup && sl.picked_at == kNoTime) continue;
      const std::size_t loc = location_index(si, a.pickup);
      const Time leg = d(at, loc);
      const Time arrive = clock + leg;
      Cost step = weights_.dist * leg;
      if (a.pickup) {
        if (arrive > sl.latest || load + 1 > capacity_) continue;
        step += weights_.wait * (arrive - sl.request_time);
        sl.picked_at = arrive;
        done_[k] = 1;
        sequence_.push_back(k);
        search(loc, arrive, load + 1, cost + step);
        sequence_.pop_back();
        done_[k] = 0;
        sl.picked_at = kNoTime;
      } else {
        const Time ride = arrive - sl.picked_at;
        if (ride > sl.max_ride) continue;
        step += weights_.ride * ride;
        dropped_[si] = 1;
        done_[k] = 1;
        sequence_.push_back(k);
        search(loc, arrive, load - 1, cost + step);
        sequence_.pop_back();
        done_[k] = 0;
        dropped_[si] = 0;
      }
    }
  }

  CostWeights weights_;
  int capacity_;
  int load0_ = 0;
  Time start_ = 0;
  std::vector<RequestId> slot_ids_;
  std::vector<Slot> slots_;
  std::vector<StopAction> actions_;
  std::vector<std::size_t> action_slot_;
  std::vector<NodeId> locations_;
  std::vector<Time> dist_;

  std::vector<char> done_;
  std::vector<char> dropped_ = std::vector<char>(64, 0);
  std::vector<std::size_t> sequence_;
  std::vector<std::size_t> best_sequence_;
  Cost best_cost_ = 0;
  bool found_ = false;
};

}  // namespace

std::optional<RouteChoice> best_route(const Vehicle& v, std::span<const RequestId> members,
                                      Time now, const Network& net,
                                      const CostWeights& weights, const SystemState& s) {
  if (members.size() > static_cast<std::size_t>(kMaxBundleSize)) {
    throw ModsimError("best_route: bundle larger than the supported maximum");
  }
  if (v.onboard.size() + members.size() > 32) {
    throw ModsimError("best_route: too many requests for exhaustive search");
  }
  return RouteSearch(v, members, now, net, weights, s).run();
}

// ---------------------------------------------------------------------------
// RTV graph

const VbEdge* RTVGraph::find(VehicleId v, BundleId b) const {
  auto it = std::lower_bound(vb_edges.begin(), vb_edges.end(), std::make_pair(v, b),
                             [](const VbEdge& e, const std::pair<VehicleId, BundleId>& key) {
                               return std::make_pair(e.vehicle, e.bundle) < key;
                             });
  if (it != vb_edges.end() && it->vehicle == v && it->bundle == b) return &*it;
  return nullptr;
}

std::optional<BundleId> RTVGraph::find_bundle(std::span<const RequestId> members) const {
  for (const Bundle& b : bundles) {
    if (std::equal(b.members.begin(), b.members.end(), members.begin(), members.end())) {
      return b.id;
    }
  }
  return std::nullopt;
}

namespace {

struct Candidate {
  std::vector<RequestId> members;
  std::vector<VbEdge> edges;  // bundle id filled in later
  std::set<VehicleId> feasible;
};

// Next k-subsets from (k-1)-subsets sharing a (k-2)-prefix, kept only when
// every (k-1)-subset is present in `previous`.
std::vector<std::vector<RequestId>> join_level(
    const std::vector<std::vector<RequestId>>& previous) {
  std::set<std::vector<RequestId>> present(previous.begin(), previous.end());
  std::vector<std::vector<RequestId>> out;
  for (std::size_t i = 0; i < previous.size(); ++i) {
    for (std::size_t j = i + 1; j < previous.size(); ++j) {
      const auto& a = previous[i];
      const auto& b = previous[j];
      if (!std::equal(a.begin(), a.end() - 1, b.begin(), b.end() - 1)) continue;
      std::vector<RequestId> merged = a;
      merged.push_back(b.back());
      if (merged[merged.size() - 2] > merged.back()) {
        std::swap(merged[merged.size() - 2], merged.back());
      }
      bool closed = true;
      for (std::size_t drop = 0; drop + 2 < merged.size() && closed; ++drop) {
        std::vector<RequestId> sub;
        for (std::size_t k = 0; k < merged.size(); ++k) {
          if (k != drop) sub.push_back(merged[k]);
        }
        closed = present.count(sub) != 0;
      }
      if (closed) out.push_back(std::move(merged));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void combinations(const std::vector<RequestId>& pool, std::size_t k, std::size_t from,
                  std::vector<RequestId>& cur, std::vector<std::vector<RequestId>>& out) {
  if (cur.size() == k) {
    out.push_back(cur);
    return;
  }
  for (std::size_t i = from; i < pool.size(); ++i) {
    cur.push_back(pool[i]);
    combinations(pool, k, i + 1, cur, out);
    cur.pop_back();
  }
}

}  // namespace

RTVGraph build_rtv_graph(const SystemState& s, Time t, const Network& net,
                         const CostWeights& weights, int max_bundle_size, bool prune) {
  if (max_bundle_size < 1 || max_bundle_size > kMaxBundleSize) {
    throw ValidationError("engine.max_bundle_size",
                          "must be between 1 and " + std::to_string(kMaxBundleSize));
  }
  RTVGraph g;
  g.batch_time = t;
  g.requests = s.active_requests();

  std::map<VehicleId, Cost> baseline_cost;
  for (const Vehicle& v : s.vehicles) {
    g.vehicles.push_back(v.id);
    auto base = best_route(v, {}, t, net, weights, s);
    if (!base) {
      throw ModsimError("vehicle " + std::to_string(v.id) +
                        " cannot complete its onboard dropoffs");
    }
    baseline_cost[v.id] = base->cost;
    g.baseline_routes.emplace(v.id, std::move(base->route));
  }

  std::vector<Candidate> kept;
  // Per-vehicle feasible bundles of the previous level, for the sub-bundle
  // check on the next one.
  std::map<std::vector<RequestId>, std::set<VehicleId>> level_feasible;
  std::vector<std::vector<RequestId>> level;
  for (RequestId r : g.requests) level.push_back({r});

  for (int k = 1; k <= max_bundle_size && !level.empty(); ++k) {
    std::map<std::vector<RequestId>, std::set<VehicleId>> next_feasible;
    std::vector<std::vector<RequestId>> survivors;
    for (auto& members : level) {
      Candidate c;
      c.members = members;
      for (const Vehicle& v : s.vehicles) {
        if (prune && k >= 2) {
          bool all_sub = true;
          for (std::size_t drop = 0; drop < members.size() && all_sub; ++drop) {
            std::vector<RequestId> sub;
            for (std::size_t i = 0; i < members.size(); ++i) {
              if (i != drop) sub.push_back(members[i]);
            }
            auto it = level_feasible.find(sub);
            all_sub = it != level_feasible.end() && it->second.count(v.id) != 0;
          }
          if (!all_sub) continue;
        }
        auto choice = best_route(v, members, t, net, weights, s);
        if (!choice) continue;
        VbEdge e;
        e.vehicle = v.id;
        e.route_cost = choice->cost;
        e.edge_cost = choice->cost - baseline_cost.at(v.id);
        e.best_route = std::move(choice->route);
        c.edges.push_back(std::move(e));
        c.feasible.insert(v.id);
      }
      if (k == 1 || !c.edges.empty()) {
        if (!c.edges.empty()) {
          survivors.push_back(members);
          next_feasible.emplace(members, c.feasible);
        }
        kept.push_back(std::move(c));
      }
    }
    level_feasible = std::move(next_feasible);
    if (k == max_bundle_size) break;
    if (prune) {
      level = join_level(survivors);
    } else {
      level.clear();
      std::vector<RequestId> cur;
      combinations(g.requests, static_cast<std::size_t>(k + 1), 0, cur, level);
    }
  }

  for (auto& c : kept) {
    const auto id = static_cast<BundleId>(g.bundles.size());
    for (RequestId r : c.members) g.rb_edges[r].push_back(id);
    for (auto& e : c.edges) {
      e.bundle = id;
      g.vb_edges.push_back(std::move(e));
    }
    g.bundles.push_back({id, std::move(c.members)});
  }
  std::sort(g.vb_edges.begin(), g.vb_edges.end(), [](const VbEdge& a, const VbEdge& b) {
    return std::tie(a.vehicle, a.bundle) < std::tie(b.vehicle, b.bundle);
  });
  return g;
}

BundleSet enumerate_bundles(const SystemState& s, Time t, const Network& net,
                            int max_bundle_size, const CostWeights& weights) {
  if (max_bundle_size < 1) {
    throw ValidationError("engine.max_bundle_size", "must be at least 1");
  }
  RTVGraph g = build_rtv_graph(s, t, net, weights, max_bundle_size);
  return {std::move(g.bundles), std::move(g.rb_edges)};
}

std::set<VehicleId> pooling_feasible_vehicles(const RTVGraph& g, RequestId r) {
  std::set<VehicleId> out;
  auto it = g.rb_edges.find(r);
  if (it == g.rb_edges.end()) return out;
  for (BundleId b : it->second) {
    if (g.bundle(b).members.size() != 1) continue;
    for (const VbEdge& e : g.vb_edges) {
      if (e.bundle == b) out.insert(e.vehicle);
    }
  }
  return out;
}

std::set<BundleId> competing_bundles(const RTVGraph& g, RequestId r,
                                     const std::set<VehicleId>& feasible_v) {
  std::set<BundleId> out;
  for (const VbEdge& e : g.vb_edges) {
    if (!feasible_v.count(e.vehicle)) continue;
    const auto& m = g.bundle(e.bundle).members;
    if (!std::binary_search(m.begin(), m.end(), r)) out.insert(e.bundle);
  }
  return out;
}

Penalties penalties_for(const RTVGraph& g) {
  Cost total = 0;
  for (const VbEdge& e : g.vb_edges) total += std::max<Cost>(e.edge_cost, 0);
  Penalties p;
  p.p_minus = 1 + total;
  p.p_plus = 1 + static_cast<Cost>(g.requests.size()) * p.p_minus;
  return p;
}

RTVGraph freeze_rtv_graph(const RTVGraph& g, const SystemState& s) {
  std::map<VehicleId, std::vector<RequestId>> confirmed;
  std::set<RequestId> taken;
  for (RequestId r : g.requests) {
    const Request& req = s.request(r);
    if (req.status == RequestStatus::kWaiting) {
      confirmed[req.vehicle].push_back(r);
      taken.insert(r);
    }
  }
  RTVGraph out = g;
  out.vb_edges.clear();
  for (const VbEdge& e : g.vb_edges) {
    const auto& m = g.bundle(e.bundle).members;
    auto it = confirmed.find(e.vehicle);
    bool keep = true;
    if (it != confirmed.end()) {
      keep = std::includes(m.begin(), m.end(), it->second.begin(), it->second.end());
    }
    for (RequestId r : m) {
      if (!keep) break;
      if (taken.count(r) && (it == confirmed.end() ||
                             !std::binary_search(it->second.begin(), it->second.end(), r))) {
        keep = false;
      }
    }
    if (keep) out.vb_edges.push_back(e);
  }
  return out;
}

std::uint64_t bundle_tie_key(VehicleId v, std::span<const RequestId> members) {
  std::uint64_t h = 0x51ed270b27a9f1c3ULL;
  for (RequestId r : members) h = mix_key(h ^ static_cast<std::uint64_t>(r));
  return tie_break_key(static_cast<std::uint64_t>(v), h);
}

// ---------------------------------------------------------------------------
// Bundle assignment

namespace {

void check_graph(const RTVGraph& g) {
  const std::set<RequestId> reqs(g.requests.begin(), g.requests.end());
  const std::set<VehicleId> vehs(g.vehicles.begin(), g.vehicles.end());
  for (std::size_t i = 0; i < g.bundles.size(); ++i) {
    const Bundle& b = g.bundles[i];
    if (b.id != static_cast<BundleId>(i) || b.members.empty()) {
      throw ModsimError("inconsistent RTV graph: bad bundle " + std::to_string(b.id));
    }
    for (RequestId r : b.members) {
      if (!reqs.count(r)) {
        throw ModsimError("inconsistent RTV graph: bundle references unknown request " +
                          std::to_string(r));
      }
    }
  }
  std::set<std::pair<VehicleId, BundleId>> seen;
  for (const VbEdge& e : g.vb_edges) {
    if (!vehs.count(e.vehicle)) {
      throw ModsimError("inconsistent RTV graph: edge references unknown vehicle " +
                        std::to_string(e.vehicle));
    }
    if (e.bundle < 0 || static_cast<std::size_t>(e.bundle) >= g.bundles.size()) {
      throw ModsimError("inconsistent RTV graph: edge references unknown bundle " +
                        std::to_string(e.bundle));
    }
    if (!seen.emplace(e.vehicle, e.bundle).second) {
      throw ModsimError("inconsistent RTV graph: duplicate edge");
    }
  }
}

PriorityObjective edge_objective(const RTVGraph& g, const VbEdge& e,
                                 const std::set<RequestId>& prev) {
  PriorityObjective o;
  const auto& m = g.bundle(e.bundle).members;
  for (RequestId r : m) (prev.count(r) ? o.assigned_prev : o.assigned_new) += 1;
  o.secondary_cost = e.edge_cost;
  o.tie_key = bundle_tie_key(e.vehicle, m);
  return o;
}

BundleAssignment make_assignment(const RTVGraph& g, const std::set<RequestId>& prev,
                                 std::map<VehicleId, BundleId> pairs) {
  BundleAssignment a;
  a.pairs = std::move(pairs);
  PriorityObjective total;
  for (const auto& [v, b] : a.pairs) total += edge_objective(g, *g.find(v, b), prev);
  a.assigned_prev = total.assigned_prev;
  a.assigned_new = total.assigned_new;
  a.secondary_cost = total.secondary_cost;
  a.tie_key = total.tie_key;
  return a;
}

// Comparison key, smaller is better; additive over edges.
using Key = std::array<__int128, 4>;

Key& operator+=(Key& a, const Key& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

class Mask {
 public:
  explicit Mask(std::size_t bits = 0) : words_((bits + 63) / 64, 0) {}
  void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1U; }
  bool intersects(const Mask& o) const {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (words_[i] & o.words_[i]) return true;
    }
    return false;
  }
  void merge(const Mask& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
  }
  void remove(const Mask& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~o.words_[i];
  }
  int count_and(const Mask& o) const {
    int c = 0;
    for (std::size_t i = 0; i < words_.size(); ++i) c += __builtin_popcountll(words_[i] & o.words_[i]);
    return c;
  }

 private:
  std::vector<std::uint64_t> words_;
};

struct Option {
  const VbEdge* edge;
  Mask members;
  PriorityObjective objective;
  Key key;
};

class BundleSolver {
 public:
  BundleSolver(const RTVGraph& g, const std::set<RequestId>& prev, const Penalties& pen,
               PoolingObjectiveMode mode)
      : g_(g), prev_(prev), pen_(pen), mode_(mode) {}

  std::map<VehicleId, BundleId> solve() {
    // Connected components over vehicles that share requests.
    std::map<VehicleId, std::vector<const VbEdge*>> by_vehicle;
    for (const VbEdge& e : g_.vb_edges) by_vehicle[e.vehicle].push_back(&e);
    std::vector<VehicleId> vehicles;
    for (const auto& [v, _] : by_vehicle) vehicles.push_back(v);
    std::vector<std::size_t> parent(vehicles.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto root = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    std::map<RequestId, std::size_t> owner;
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
      for (const VbEdge* e : by_vehicle[vehicles[i]]) {
        for (RequestId r : g_.bundle(e->bundle).members) {
          auto [it, fresh] = owner.emplace(r, i);
          if (!fresh) parent[root(i)] = root(it->second);
        }
      }
    }
    std::map<std::size_t, std::vector<VehicleId>> components;
    for (std::size_t i = 0; i < vehicles.size(); ++i) components[root(i)].push_back(vehicles[i]);

    std::map<VehicleId, BundleId> result;
    for (const auto& [_, members] : components) {
      solve_component(members, by_vehicle, result);
    }
    return result;
  }

 private:
  Key key_of(const PriorityObjective& o) const {
    if (mode_ == PoolingObjectiveMode::kLexicographic) {
      return {-static_cast<__int128>(o.assigned_prev), -static_cast<__int128>(o.assigned_new),
              static_cast<__int128>(o.secondary_cost), static_cast<__int128>(o.tie_key)};
    }
    const __int128 scalar = -static_cast<__int128>(pen_.p_plus) * o.assigned_prev -
                            static_cast<__int128>(pen_.p_minus) * o.assigned_new +
                            o.secondary_cost;
    return {scalar, static_cast<__int128>(o.tie_key), 0, 0};
  }

  void solve_component(const std::vector<VehicleId>& vehicles,
                       std::map<VehicleId, std::vector<const VbEdge*>>& by_vehicle,
                       std::map<VehicleId, BundleId>& result) {
    std::vector<RequestId> reqs;
    for (VehicleId v : vehicles) {
      for (const VbEdge* e : by_vehicle[v]) {
        const auto& m = g_.bundle(e->bundle).members;
        reqs.insert(reqs.end(), m.begin(), m.end());
      }
    }
    std::sort(reqs.begin(), reqs.end());
    reqs.erase(std::unique(reqs.begin(), reqs.end()), reqs.end());
    prev_mask_ = Mask(reqs.size());
    for (std::size_t i = 0; i < reqs.size(); ++i) {
      if (prev_.count(reqs[i])) prev_mask_.set(i);
    }
    bits_ = reqs.size();

    options_.assign(vehicles.size(), {});
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
      for (const VbEdge* e : by_vehicle[vehicles[i]]) {
        Option o{e, Mask(reqs.size()), edge_objective(g_, *e, prev_), {}};
        for (RequestId r : g_.bundle(e->bundle).members) {
          o.members.set(static_cast<std::size_t>(
              std::lower_bound(reqs.begin(), reqs.end(), r) - reqs.begin()));
        }
        o.key = key_of(o.objective);
        options_[i].push_back(std::move(o));
      }
      std::sort(options_[i].begin(), options_[i].end(),
                [](const Option& a, const Option& b) { return a.key < b.key; });
    }
    // Vehicles with the fewest options are branched on first.
    std::vector<std::size_t> order(vehicles.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return options_[a].size() < options_[b].size();
    });
    std::vector<std::vector<Option>> reordered;
    for (std::size_t i : order) reordered.push_back(std::move(options_[i]));
    options_ = std::move(reordered);

    have_incumbent_ = false;
    choice_.assign(options_.size(), -1);
    Key zero{};
    search(0, Mask(reqs.size()), zero, PriorityObjective{});
    for (std::size_t i = 0; i < options_.size(); ++i) {
      if (best_choice_[i] >= 0) {
        const VbEdge* e = options_[i][static_cast<std::size_t>(best_choice_[i])].edge;
        result.emplace(e->vehicle, e->bundle);
      }
    }
  }

  // Optimistic key for any completion from vehicle `k` on.
  Key bound(std::size_t k, const Mask& used, const Key& current,
            const PriorityObjective& cur_obj) const {
    Key relaxed = current;
    int new_sum = 0;
    Cost cost_floor = 0;
    Mask reach(bits_);
    for (std::size_t i = k; i < options_.size(); ++i) {
      bool first = true;
      int best_new = 0;
      Cost min_cost = 0;
      for (const Option& o : options_[i]) {
        if (o.members.intersects(used)) continue;
        if (first) {
          Key zero{};
          if (o.key < zero) relaxed += o.key;
          first = false;
        }
        best_new = std::max(best_new, o.objective.assigned_new);
        min_cost = std::min(min_cost, o.objective.secondary_cost);
        reach.merge(o.members);
      }
      new_sum += best_new;
      cost_floor += min_cost;
    }
    if (mode_ != PoolingObjectiveMode::kLexicographic) return relaxed;

    const int prev_reach = reach.count_and(prev_mask_);
    reach.remove(prev_mask_);
    const int new_reach = reach.count_and(reach);
    const auto prev_cap = std::min<__int128>(-relaxed[0], cur_obj.assigned_prev + prev_reach);
    const auto new_cap = static_cast<__int128>(cur_obj.assigned_new) + std::min(new_sum, new_reach);
    const Key capped{-prev_cap, -new_cap, static_cast<__int128>(cur_obj.secondary_cost + cost_floor),
                     static_cast<__int128>(cur_obj.tie_key)};
    // Both are valid optimistic keys; the larger one is tighter.
    return std::max(relaxed, capped);
  }

  void search(std::size_t k, const Mask& used, const Key& current,
              const PriorityObjective& cur_obj) {
    if (k == options_.size()) {
      if (!have_incumbent_ || current < incumbent_) {
        have_incumbent_ = true;
        incumbent_ = current;
        best_choice_ = choice_;
      }
      return;
    }
    if (have_incumbent_ && !(bound(k, used, current, cur_obj) < incumbent_)) return;

    for (std::size_t j = 0; j < options_[k].size(); ++j) {
      const Option& o = options_[k][j];
      if (o.members.intersects(used)) continue;
      Mask next = used;
      next.merge(o.members);
      Key next_key = current;
      next_key += o.key;
      PriorityObjective next_obj = cur_obj;
      next_obj += o.objective;
      choice_[k] = static_cast<int>(j);
      search(k + 1, next, next_key, next_obj);
    }
    choice_[k] = -1;
    search(k + 1, used, current, cur_obj);
  }

  const RTVGraph& g_;
  const std::set<RequestId>& prev_;
  Penalties pen_;
  PoolingObjectiveMode mode_;

  std::size_t bits_ = 0;
  Mask prev_mask_;
  std::vector<std::vector<Option>> options_;
  std::vector<int> choice_;
  std::vector<int> best_choice_;
  Key incumbent_{};
  bool have_incumbent_ = false;
};

}  // namespace

BundleAssignment solve_pooling(const RTVGraph& g, const std::set<RequestId>& prev_assigned,
                               const Penalties& penalties, PoolingObjectiveMode mode) {
  check_graph(g);
  Cost total = 0;
  for (const VbEdge& e : g.vb_edges) {
    if (e.edge_cost < 0) throw ModsimError("solve_pooling: negative edge cost");
    total += e.edge_cost;
  }
  if (mode == PoolingObjectiveMode::kBigM) {
    if (penalties.p_minus <= total) {
      throw ModsimError("solve_pooling: P- must exceed the total secondary cost");
    }
    if (penalties.p_plus <= static_cast<Cost>(g.requests.size()) * penalties.p_minus) {
      throw ModsimError("solve_pooling: P+ must exceed |requests| * P-");
    }
  }
  BundleSolver solver(g, prev_assigned, penalties, mode);
  return make_assignment(g, prev_assigned, solver.solve());
}

BundleAssignment exhaustive_pooling_oracle(const RTVGraph& g,
                                           const std::set<RequestId>& prev_assigned) {
  check_graph(g);
  if (g.vb_edges.size() > kPoolingOracleMaxEdges) {
    throw ModsimError("exhaustive_pooling_oracle: instance too large");
  }
  BundleAssignment best;
  std::map<VehicleId, BundleId> current;
  std::set<RequestId> covered;
  auto recurse = [&](auto&& self, std::size_t k) -> void {
    if (k == g.vb_edges.size()) {
      auto a = make_assignment(g, prev_assigned, current);
      if (better(a.objective(), best.objective())) best = std::move(a);
      return;
    }
    self(self, k + 1);
    const VbEdge& e = g.vb_edges[k];
    if (current.count(e.vehicle)) return;
    const auto& m = g.bundle(e.bundle).members;
    if (std::any_of(m.begin(), m.end(), [&](RequestId r) { return covered.count(r) != 0; })) {
      return;
    }
    current.emplace(e.vehicle, e.bundle);
    covered.insert(m.begin(), m.end());
    self(self, k + 1);
    for (RequestId r : m) covered.erase(r);
    current.erase(e.vehicle);
  };
  recurse(recurse, 0);
  return best;
}

}  // namespace modsim
