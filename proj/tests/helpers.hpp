#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "gridsynth/flow.hpp"
#include "gridsynth/street_graph.hpp"

namespace testhelp {

using gridsynth::EdgeKind;
using gridsynth::FlowInstance;
using gridsynth::GeoPoint;
using gridsynth::NodeId;
using gridsynth::StreetGraph;

// random connected street-style graph in a ~500 m box
inline StreetGraph random_street_graph(std::mt19937_64& rng, int n_nodes, int extra_edges) {
  StreetGraph g;
  std::uniform_real_distribution<double> dlat(49.000, 49.005);
  std::uniform_real_distribution<double> dlon(8.400, 8.407);
  std::vector<GeoPoint> pts;
  for (int i = 0; i < n_nodes; ++i) {
    pts.push_back({dlat(rng), dlon(rng)});
    g.add_node(i + 1, pts.back());
  }
  auto len = [&](int a, int b) {
    return std::max(gridsynth::haversine_m(pts[a], pts[b]), 0.5);
  };
  for (int i = 1; i < n_nodes; ++i) {
    std::uniform_int_distribution<int> pick(0, i - 1);
    const int j = pick(rng);
    g.add_edge({i + 1, j + 1, len(i, j), EdgeKind::road, 0, false});
  }
  std::set<std::pair<int, int>> seen;
  for (const auto& e : g.edges())
    seen.insert({std::min(e.a, e.b), std::max(e.a, e.b)});
  int added = 0, tries = 0;
  std::uniform_int_distribution<int> pick(1, n_nodes);
  while (added < extra_edges && ++tries < 200) {
    const int a = pick(rng), b = pick(rng);
    if (a == b || seen.count({std::min(a, b), std::max(a, b)})) continue;
    g.add_edge({a, b, len(a - 1, b - 1), EdgeKind::road, 0, false});
    seen.insert({std::min(a, b), std::max(a, b)});
    ++added;
  }
  return g;
}

// Bellman-Ford distance oracle
inline double bellman_ford(const StreetGraph& g, NodeId s, NodeId t) {
  std::map<NodeId, double> dist;
  for (const auto& [id, _] : g.nodes()) dist[id] = std::numeric_limits<double>::infinity();
  dist[s] = 0.0;
  const auto& edges = g.edges();
  for (std::size_t it = 0; it < g.nodes().size(); ++it) {
    bool changed = false;
    for (const auto& e : edges) {
      if (dist[e.a] + e.length_m < dist[e.b]) {
        dist[e.b] = dist[e.a] + e.length_m;
        changed = true;
      }
      if (dist[e.b] + e.length_m < dist[e.a]) {
        dist[e.a] = dist[e.b] + e.length_m;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return dist[t];
}

// exhaustive TSP over cycles through node 0
inline double brute_tsp(const std::vector<std::vector<double>>& d) {
  const int n = static_cast<int>(d.size());
  if (n <= 2) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += d[i][(i + 1) % n];
    return n == 2 ? 2.0 * d[0][1] : 0.0;
  }
  std::vector<int> perm(n - 1);
  std::iota(perm.begin(), perm.end(), 1);
  double best = std::numeric_limits<double>::infinity();
  do {
    double len = d[0][perm.front()] + d[perm.back()][0];
    for (int i = 0; i + 1 < n - 1; ++i) len += d[perm[i]][perm[i + 1]];
    best = std::min(best, len);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// bitmask DP minimum-weight perfect matching oracle, n <= ~16
inline double dp_matching(const std::vector<std::vector<double>>& w) {
  const int n = static_cast<int>(w.size());
  std::vector<double> dp(1u << n, std::numeric_limits<double>::infinity());
  dp[0] = 0.0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (!std::isfinite(dp[mask])) continue;
    int i = 0;
    while (i < n && (mask >> i & 1)) ++i;
    if (i >= n) continue;
    for (int j = i + 1; j < n; ++j) {
      if (mask >> j & 1) continue;
      const unsigned next = mask | (1u << i) | (1u << j);
      dp[next] = std::min(dp[next], dp[mask] + w[i][j]);
    }
  }
  return dp[(1u << n) - 1];
}

struct BruteMilp {
  bool feasible = false;
  double objective = std::numeric_limits<double>::infinity();
};

// Exhaustive minimum over radial installations: enumerate undirected edge
// subsets forming forests whose components hold exactly one source each,
// orient away from the source, check subtree flows against the oriented
// arc caps and the source availability.
inline BruteMilp brute_force_milp(const FlowInstance& inst) {
  struct UEdge {
    NodeId a, b;
    double cost;
  };
  std::vector<UEdge> edges;
  std::map<std::pair<NodeId, NodeId>, double> cap;
  for (const auto& arc : inst.arcs) {
    cap[{arc.from, arc.to}] = arc.cap_kw;
    if (arc.from < arc.to) edges.push_back({arc.from, arc.to, arc.cost_m});
  }
  std::map<NodeId, double> demand, avail;
  std::vector<NodeId> ids;
  for (const auto& n : inst.nodes) {
    ids.push_back(n.id);
    if (n.residual_kw < 0.0) demand[n.id] = -n.residual_kw;
    if (n.residual_kw > 0.0) avail[n.id] = n.residual_kw;
  }

  const int m = static_cast<int>(edges.size());
  BruteMilp best;
  if (m > 24) return best;  // keep the oracle honest about its scale

  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::map<NodeId, std::vector<std::pair<NodeId, double>>> adj;
    double cost = 0.0;
    bool cyc = false;
    std::map<NodeId, NodeId> uf;
    std::function<NodeId(NodeId)> find = [&](NodeId x) {
      while (uf.count(x) && uf[x] != x) x = uf[x] = uf[uf[x]];
      if (!uf.count(x)) uf[x] = x;
      return x;
    };
    for (int i = 0; i < m && !cyc; ++i) {
      if (!(mask >> i & 1)) continue;
      const auto& e = edges[i];
      const NodeId ra = find(e.a), rb = find(e.b);
      if (ra == rb) cyc = true;
      uf[ra] = rb;
      adj[e.a].push_back({e.b, 0.0});
      adj[e.b].push_back({e.a, 0.0});
      cost += e.cost;
    }
    if (cyc || cost >= best.objective) continue;

    // component roots: exactly one source per component that has any edge or
    // demand; demands must sit in a source component
    std::map<NodeId, NodeId> comp_source;
    bool bad = false;
    for (const auto& [sid, _] : avail) {
      const NodeId root = find(sid);
      if (comp_source.count(root)) {
        bad = true;  // two sources joined: dominated, skip
        break;
      }
      comp_source[root] = sid;
    }
    if (bad) continue;
    for (const auto& [node, _] : demand)
      if (!comp_source.count(find(node))) {
        bad = true;
        break;
      }
    if (bad) continue;
    // every installed edge must live in a source component (otherwise junk)
    for (int i = 0; i < m && !bad; ++i)
      if (mask >> i & 1)
        if (!comp_source.count(find(edges[i].a))) bad = true;
    if (bad) continue;

    // orient away from sources, accumulate subtree demands
    bool ok = true;
    std::map<NodeId, double> outflow;
    for (const auto& [root, sid] : comp_source) {
      // DFS from source
      std::vector<std::pair<NodeId, NodeId>> stack{{sid, -1}};
      std::vector<std::pair<NodeId, NodeId>> order;  // (node, parent)
      while (!stack.empty()) {
        auto [u, p] = stack.back();
        stack.pop_back();
        order.push_back({u, p});
        for (const auto& [v, _] : adj[u])
          if (v != p) stack.push_back({v, u});
      }
      std::map<NodeId, double> subtree;
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        auto [u, p] = *it;
        subtree[u] += demand.count(u) ? demand[u] : 0.0;
        if (p >= 0) {
          if (subtree[u] > cap[{p, u}] + gridsynth::kFlowTolKw) {
            ok = false;
            break;
          }
          subtree[p] += subtree[u];
        }
      }
      if (!ok) break;
      if (subtree[sid] > avail[sid] + gridsynth::kFlowTolKw) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;

    best.feasible = true;
    best.objective = cost;
  }
  if (best.feasible == false) best.objective = std::numeric_limits<double>::infinity();
  return best;
}

// random flow instance on a random street graph
inline FlowInstance random_flow_instance(std::mt19937_64& rng, int n_nodes, int extra_edges,
                                         int n_sources, int n_demands, double cap) {
  StreetGraph g = random_street_graph(rng, n_nodes, extra_edges);
  FlowInstance inst;
  std::vector<NodeId> ids;
  for (const auto& [id, _] : g.nodes()) ids.push_back(id);
  std::shuffle(ids.begin(), ids.end(), rng);
  std::set<NodeId> sources(ids.begin(), ids.begin() + n_sources);
  std::set<NodeId> demands;
  std::uniform_real_distribution<double> dkw(0.5, 4.0);
  std::map<NodeId, double> demand_kw;
  for (int i = n_sources; i < n_sources + n_demands && i < static_cast<int>(ids.size()); ++i) {
    demands.insert(ids[i]);
    demand_kw[ids[i]] = dkw(rng);
  }
  double total = 0.0;
  for (const auto& [_, d] : demand_kw) total += d;
  for (const auto& [id, _] : g.nodes()) {
    double r = 0.0;
    if (sources.count(id)) r = total;
    else if (demands.count(id)) r = -demand_kw[id];
    inst.nodes.push_back({id, r});
  }
  for (const auto& e : g.edges()) {
    inst.arcs.push_back({e.a, e.b, e.length_m, cap, e.kind});
    inst.arcs.push_back({e.b, e.a, e.length_m, cap, e.kind});
  }
  return inst;
}

}  // namespace testhelp
