#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "gridsynth/errors.hpp"
#include "gridsynth/geo.hpp"
#include "gridsynth/log.hpp"

namespace gridsynth {

using NodeId = std::int64_t;

enum class EdgeKind { road, service };

struct StreetEdge {
  NodeId a = 0;
  NodeId b = 0;
  double length_m = 0.0;
  EdgeKind kind = EdgeKind::road;
  std::int64_t way_id = 0;  // originating OSM way, 0 for synthetic edges
  bool footpath = false;    // highway=footway/path
};

enum class BuildingClass { residential, school, kindergarten, community, other_nonresidential };

inline std::string to_string(BuildingClass k) {
  switch (k) {
    case BuildingClass::residential: return "residential";
    case BuildingClass::school: return "school";
    case BuildingClass::kindergarten: return "kindergarten";
    case BuildingClass::community: return "community";
    case BuildingClass::other_nonresidential: return "other-nonresidential";
  }
  return "?";
}

struct Building {
  std::int64_t id = 0;
  std::vector<GeoPoint> footprint;  // closed; last vertex not repeated
  double area_m2 = 0.0;
  std::optional<double> height_m;
  std::optional<int> levels;
  std::optional<int> meters_count;
  BuildingClass klass = BuildingClass::residential;
  NodeId connection_node = -1;  // street-side split node, set by attach_buildings
  NodeId building_node = -1;    // centroid node, set by attach_buildings

  GeoPoint centroid() const { return polygon_centroid(footprint); }
};

struct PathResult {
  double length_m = 0.0;
  std::vector<NodeId> nodes;
};

// Undirected street graph with geodesic edge lengths. Node/edge insertion
// order is deterministic for identical inputs.
class StreetGraph {
 public:
  void add_node(NodeId id, GeoPoint p) {
    if (!valid(p)) throw Error("node " + std::to_string(id) + " has out-of-range coordinates");
    nodes_.emplace(id, p);
  }

  bool has_node(NodeId id) const { return nodes_.count(id) > 0; }

  const GeoPoint& node(NodeId id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw Error("unknown node " + std::to_string(id));
    return it->second;
  }

  std::size_t add_edge(StreetEdge e) {
    if (!has_node(e.a) || !has_node(e.b))
      throw Error("edge references unknown node");
    if (!(e.length_m > 0.0)) throw Error("edge length must be > 0");
    const std::size_t idx = edges_.size();
    edges_.push_back(e);
    adj_[e.a].push_back(idx);
    adj_[e.b].push_back(idx);
    return idx;
  }

  const std::vector<StreetEdge>& edges() const { return edges_; }
  const std::map<NodeId, GeoPoint>& nodes() const { return nodes_; }

  const std::vector<std::size_t>& incident(NodeId n) const {
    static const std::vector<std::size_t> none;
    auto it = adj_.find(n);
    return it == adj_.end() ? none : it->second;
  }

  NodeId substation_node() const { return substation_node_; }
  void set_substation_node(NodeId n) {
    if (!has_node(n)) throw Error("substation node not in graph");
    substation_node_ = n;
  }

  NodeId max_node_id() const { return nodes_.empty() ? 0 : nodes_.rbegin()->first; }

  double total_road_length() const {
    double s = 0.0;
    for (const auto& e : edges_)
      if (e.kind == EdgeKind::road) s += e.length_m;
    return s;
  }

  /// Exact shortest path by edge length. Equal-length alternatives resolve
  /// to the lexicographically smallest node-id sequence.
  PathResult shortest_path(NodeId a, NodeId b) const {
    if (!has_node(a) || !has_node(b)) throw Error("shortest_path: unknown endpoint");
    if (a == b) return {0.0, {a}};

    std::map<NodeId, double> dist;
    std::map<NodeId, NodeId> parent;
    dist[a] = 0.0;
    using Item = std::pair<double, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    pq.push({0.0, a});

    auto path_to = [&](NodeId v) {
      std::vector<NodeId> seq{v};
      while (v != a) {
        v = parent.at(v);
        seq.push_back(v);
      }
      std::reverse(seq.begin(), seq.end());
      return seq;
    };

    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      auto du = dist.find(u);
      if (du == dist.end() || d > du->second) continue;
      for (std::size_t ei : incident(u)) {
        const StreetEdge& e = edges_[ei];
        const NodeId v = e.a == u ? e.b : e.a;
        const double nd = d + e.length_m;
        auto dv = dist.find(v);
        if (dv == dist.end() || nd < dv->second) {
          dist[v] = nd;
          parent[v] = u;
          pq.push({nd, v});
        } else if (nd == dv->second && parent.count(v) && parent[v] != u) {
          // tie: keep the lexicographically smaller prefix sequence
          auto cur = path_to(parent[v]);
          auto alt = path_to(u);
          alt.push_back(v);
          cur.push_back(v);
          if (alt < cur) {
            parent[v] = u;
            pq.push({nd, v});  // re-propagate the improved prefix
          }
        }
      }
    }

    auto db = dist.find(b);
    if (db == dist.end())
      throw NoPathError("no path between " + std::to_string(a) + " and " + std::to_string(b));
    return {db->second, path_to(b)};
  }

  /// Single-source distances over all edges (used by planners).
  std::map<NodeId, double> distances_from(NodeId a) const {
    std::map<NodeId, double> dist;
    dist[a] = 0.0;
    using Item = std::pair<double, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    pq.push({0.0, a});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist.at(u)) continue;
      for (std::size_t ei : incident(u)) {
        const StreetEdge& e = edges_[ei];
        const NodeId v = e.a == u ? e.b : e.a;
        const double nd = d + e.length_m;
        auto it = dist.find(v);
        if (it == dist.end() || nd < it->second) {
          dist[v] = nd;
          pq.push({nd, v});
        }
      }
    }
    return dist;
  }

  /// Connected components as sorted node lists, largest total edge length first.
  std::vector<std::vector<NodeId>> components() const {
    std::set<NodeId> seen;
    std::vector<std::pair<double, std::vector<NodeId>>> comps;
    for (const auto& [id, _] : nodes_) {
      if (seen.count(id)) continue;
      std::vector<NodeId> comp{id};
      seen.insert(id);
      double len = 0.0;
      for (std::size_t i = 0; i < comp.size(); ++i) {
        for (std::size_t ei : incident(comp[i])) {
          const StreetEdge& e = edges_[ei];
          len += e.length_m;  // double-counted, consistent across components
          const NodeId v = e.a == comp[i] ? e.b : e.a;
          if (seen.insert(v).second) comp.push_back(v);
        }
      }
      std::sort(comp.begin(), comp.end());
      comps.push_back({len, std::move(comp)});
    }
    std::stable_sort(comps.begin(), comps.end(),
                     [](const auto& x, const auto& y) { return x.first > y.first; });
    std::vector<std::vector<NodeId>> out;
    out.reserve(comps.size());
    for (auto& [_, c] : comps) out.push_back(std::move(c));
    return out;
  }

  /// Nearest node reachable through road edges (stations snap here).
  NodeId nearest_road_node(const GeoPoint& p) const {
    NodeId best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& [id, q] : nodes_) {
      bool on_road = false;
      for (std::size_t ei : incident(id))
        if (edges_[ei].kind == EdgeKind::road) { on_road = true; break; }
      if (!on_road) continue;
      const double d = haversine_m(p, q);
      if (d < best_d) {
        best_d = d;
        best = id;
      }
    }
    if (best < 0) throw Error("graph has no road nodes");
    return best;
  }

 private:
  std::map<NodeId, GeoPoint> nodes_;
  std::vector<StreetEdge> edges_;
  std::map<NodeId, std::vector<std::size_t>> adj_;
  NodeId substation_node_ = -1;
};

namespace detail {

struct EdgeSplit {
  double s_m;      // offset along the edge from node a
  NodeId node_id;  // new connection node
  GeoPoint pos;
};

}  // namespace detail

/// Attach each building to the nearest road edge: the footprint centroid is
/// orthogonally projected onto the edge, a new connection node splits it and
/// a service edge centroid<->connection node is added. Two nodes per building
/// exist afterwards.
inline StreetGraph attach_buildings(const StreetGraph& graph, std::vector<Building>& buildings,
                                    double max_service_length_m = 100.0) {
  struct Candidate {
    std::size_t edge_idx;
    SegmentProjection proj;
  };

  const auto& edges = graph.edges();

  std::vector<std::string> too_far;
  std::vector<std::pair<std::size_t, Candidate>> picks(buildings.size());

  std::vector<std::size_t> order(buildings.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return buildings[x].id < buildings[y].id; });

  for (std::size_t oi : order) {
    const Building& b = buildings[oi];
    const GeoPoint c = b.centroid();
    Candidate best{0, {}};
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t ei = 0; ei < edges.size(); ++ei) {
      if (edges[ei].kind != EdgeKind::road) continue;
      auto proj = project_onto_segment(c, graph.node(edges[ei].a), graph.node(edges[ei].b));
      if (proj.distance_m < best_d) {
        best_d = proj.distance_m;
        best = {ei, proj};
      }
    }
    if (!(best_d <= max_service_length_m)) {
      too_far.push_back(std::to_string(b.id));
      continue;
    }
    picks[oi] = {oi, best};
  }
  if (!too_far.empty()) {
    std::string msg = "buildings farther than max service length from any road:";
    for (const auto& s : too_far) msg += " " + s;
    throw AttachError(msg);
  }

  // Collect splits per edge, then rebuild. Coincident feet are separated by a
  // small offset along the edge so connection nodes stay distinct.
  constexpr double kFootEps = 0.01;  // meters

  StreetGraph out;
  for (const auto& [id, p] : graph.nodes()) out.add_node(id, p);

  NodeId next_id = graph.max_node_id() + 1;
  std::map<std::size_t, std::vector<detail::EdgeSplit>> splits;

  for (std::size_t oi : order) {
    Building& b = buildings[oi];
    const auto& [_, cand] = picks[oi];
    const StreetEdge& e = edges[cand.edge_idx];
    double s = cand.proj.t * e.length_m;

    auto& list = splits[cand.edge_idx];
    auto collides = [&](double v) {
      for (const auto& sp : list)
        if (std::abs(sp.s_m - v) < kFootEps) return true;
      return false;
    };
    while (collides(s)) s += kFootEps;
    s = std::clamp(s, 0.0, e.length_m);

    const GeoPoint ga = graph.node(e.a);
    const GeoPoint gb = graph.node(e.b);
    const GeoPoint foot = interpolate(ga, gb, e.length_m > 0 ? s / e.length_m : 0.0);

    const NodeId conn = next_id++;
    const NodeId bnode = next_id++;
    out.add_node(conn, foot);
    out.add_node(bnode, b.centroid());
    list.push_back({s, conn, foot});

    const double service_len = std::max(haversine_m(b.centroid(), foot), 1e-3);
    b.connection_node = conn;
    b.building_node = bnode;
    out.add_edge({conn, bnode, service_len, EdgeKind::service, 0, false});
  }

  for (std::size_t ei = 0; ei < edges.size(); ++ei) {
    const StreetEdge& e = edges[ei];
    auto it = splits.find(ei);
    if (it == splits.end()) {
      out.add_edge(e);
      continue;
    }
    auto& list = it->second;
    std::sort(list.begin(), list.end(),
              [](const auto& x, const auto& y) { return x.s_m < y.s_m; });
    NodeId prev = e.a;
    GeoPoint prev_pos = graph.node(e.a);
    for (const auto& sp : list) {
      const double len = std::max(haversine_m(prev_pos, sp.pos), 1e-3);
      out.add_edge({prev, sp.node_id, len, EdgeKind::road, e.way_id, e.footpath});
      prev = sp.node_id;
      prev_pos = sp.pos;
    }
    const double len = std::max(haversine_m(prev_pos, graph.node(e.b)), 1e-3);
    out.add_edge({prev, e.b, len, EdgeKind::road, e.way_id, e.footpath});
  }

  if (graph.substation_node() >= 0) out.set_substation_node(graph.substation_node());
  return out;
}

}  // namespace gridsynth
