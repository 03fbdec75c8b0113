#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gridsynth/errors.hpp"
#include "gridsynth/estimation.hpp"
#include "gridsynth/mv_planner.hpp"
#include "gridsynth/street_graph.hpp"

namespace gridsynth {

inline constexpr double kFlowTolKw = 1e-6;

struct FlowNode {
  NodeId id = 0;
  // positive: source availability (surplus allowed, outflow <= residual);
  // negative: consumption; zero: pass-through street node
  double residual_kw = 0.0;
};

struct FlowArc {
  NodeId from = 0;
  NodeId to = 0;
  double cost_m = 0.0;
  double cap_kw = std::numeric_limits<double>::infinity();
  EdgeKind kind = EdgeKind::road;
};

struct FlowInstance {
  std::vector<FlowNode> nodes;  // sorted by id
  std::vector<FlowArc> arcs;    // directed; every edge present in both directions

  double total_demand_kw() const {
    double d = 0.0;
    for (const auto& n : nodes)
      if (n.residual_kw < 0.0) d -= n.residual_kw;
    return d;
  }

  double total_supply_kw() const {
    double s = 0.0;
    for (const auto& n : nodes)
      if (n.residual_kw > 0.0) s += n.residual_kw;
    return s;
  }

  std::vector<NodeId> sources() const {
    std::vector<NodeId> out;
    for (const auto& n : nodes)
      if (n.residual_kw > 0.0) out.push_back(n.id);
    return out;
  }

  void validate() const {
    std::set<NodeId> ids;
    for (const auto& n : nodes)
      if (!ids.insert(n.id).second) throw Error("flow instance: duplicate node id");
    std::map<std::pair<NodeId, NodeId>, double> seen;
    for (const auto& a : arcs) {
      if (!ids.count(a.from) || !ids.count(a.to))
        throw Error("flow instance: arc references unknown node");
      if (!(a.cost_m > 0.0)) throw Error("flow instance: arc cost must be > 0");
      if (a.cap_kw < 0.0) throw Error("flow instance: negative capacity");
      seen[{a.from, a.to}] = a.cost_m;
    }
    for (const auto& [key, cost] : seen) {
      auto rev = seen.find({key.second, key.first});
      if (rev == seen.end() || rev->second != cost)
        throw Error("flow instance: candidate edges must appear in both directions with equal cost");
    }
    if (total_supply_kw() + kFlowTolKw < total_demand_kw())
      throw Error("flow instance: source availability cannot cover demand");
  }

  /// Copy with all road-kind caps set to `cap_kw` (the CCE loop's scalar).
  FlowInstance with_road_cap(double cap_kw) const {
    FlowInstance out = *this;
    for (auto& a : out.arcs)
      if (a.kind == EdgeKind::road) a.cap_kw = cap_kw;
    return out;
  }
};

/// Installed, oriented edge of a radial solution; flow runs from -> to.
struct InstalledEdge {
  NodeId from = 0;
  NodeId to = 0;
  double flow_kw = 0.0;
  double cost_m = 0.0;
  EdgeKind kind = EdgeKind::road;
};

struct LvSolution {
  std::vector<InstalledEdge> edges;
  double objective_m = 0.0;
  int achieved_cap_kw = 0;             // set by the CCE loop
  int iterations = 0;                  // set by the CCE loop
  std::map<NodeId, NodeId> root_of;    // covered node -> supplying source node

  std::vector<NodeId> roots() const {
    std::set<NodeId> r;
    for (const auto& [_, root] : root_of) r.insert(root);
    return {r.begin(), r.end()};
  }

  double max_source_outflow() const {
    std::map<NodeId, double> out;
    std::set<NodeId> heads;
    for (const auto& e : edges) heads.insert(e.to);
    for (const auto& e : edges)
      if (!heads.count(e.from)) out[e.from] += e.flow_kw;
    double m = 0.0;
    for (const auto& [_, v] : out) m = std::max(m, v);
    return m;
  }
};

/// Convert the attached street graph plus load estimates into a flow
/// instance: building nodes consume their peak share, substation nodes are
/// sources sized to the full demand (the optimizer picks the split), all
/// street and service edges become symmetric candidate arcs.
inline FlowInstance build_instance(const StreetGraph& graph,
                                   const std::vector<Building>& buildings,
                                   const std::vector<LoadEstimate>& estimates,
                                   const std::vector<Substation>& substations,
                                   bool include_footpaths = true) {
  std::map<std::int64_t, double> peak;
  for (const auto& e : estimates) peak[e.building_id] = e.peak_kw;

  std::map<NodeId, double> demand;
  for (const auto& b : buildings) {
    auto it = peak.find(b.id);
    if (it == peak.end() || it->second <= 0.0) continue;
    if (b.building_node < 0)
      throw Error("build_instance: building " + std::to_string(b.id) + " is not attached");
    demand[b.building_node] += it->second;
  }

  double total = 0.0;
  for (const auto& [_, d] : demand) total += d;

  std::set<NodeId> source_nodes;
  for (const auto& s : substations) source_nodes.insert(s.graph_node);
  if (source_nodes.empty()) throw Error("build_instance: no substations");

  FlowInstance inst;
  for (const auto& [id, _] : graph.nodes()) {
    FlowNode n{id, 0.0};
    if (source_nodes.count(id))
      n.residual_kw = total;
    else if (auto it = demand.find(id); it != demand.end())
      n.residual_kw = -it->second;
    inst.nodes.push_back(n);
  }

  for (const auto& e : graph.edges()) {
    if (!include_footpaths && e.footpath) continue;
    inst.arcs.push_back({e.a, e.b, e.length_m, std::numeric_limits<double>::infinity(), e.kind});
    inst.arcs.push_back({e.b, e.a, e.length_m, std::numeric_limits<double>::infinity(), e.kind});
  }

  // every consuming node must be reachable from some source
  std::set<NodeId> reach(source_nodes.begin(), source_nodes.end());
  std::map<NodeId, std::vector<NodeId>> adj;
  for (const auto& a : inst.arcs) adj[a.from].push_back(a.to);
  std::vector<NodeId> stack(reach.begin(), reach.end());
  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    for (NodeId v : adj[u])
      if (reach.insert(v).second) stack.push_back(v);
  }
  std::vector<std::string> unreachable;
  for (const auto& [node, _] : demand)
    if (!reach.count(node)) unreachable.push_back(std::to_string(node));
  if (!unreachable.empty()) {
    std::string msg = "build_instance: consuming nodes unreachable from every substation:";
    for (const auto& s : unreachable) msg += " " + s;
    throw Error(msg);
  }

  inst.validate();
  return inst;
}

}  // namespace gridsynth
