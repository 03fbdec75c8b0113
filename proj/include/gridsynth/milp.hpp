#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "gridsynth/errors.hpp"
#include "gridsynth/flow.hpp"

namespace gridsynth {

enum class MilpStatus { optimal, infeasible };

struct MilpOptions {
  double time_limit_s = 300.0;
  int refresh_depth = 6;       // full dual-ascent refresh interval (decisions)
  std::size_t node_limit = 0;  // 0 = unlimited
  // previously installed forest (directed original edges); used as a warm
  // incumbent, repaired first if the current caps overload it
  std::vector<std::pair<NodeId, NodeId>> warm_start;
  // externally known lower bound on the optimum (e.g. the optimum at a
  // looser capacity); lets the solve stop as soon as the incumbent meets it
  double lower_bound_hint = 0.0;
};

struct MilpStats {
  std::size_t bb_nodes = 0;
  double wall_s = 0.0;
};

struct MilpResult {
  MilpStatus status = MilpStatus::infeasible;
  LvSolution solution;
  std::string infeasibility;  // violated aggregate when detectable
  MilpStats stats;
};

/// Throws unless `sol` is a radial, conserving, capacity-feasible solution of
/// `inst` that covers every consuming node.
inline void check_solution(const FlowInstance& inst, const LvSolution& sol) {
  std::map<NodeId, double> residual;
  std::map<NodeId, double> avail;
  for (const auto& n : inst.nodes) {
    residual[n.id] = n.residual_kw;
    if (n.residual_kw > 0.0) avail[n.id] = n.residual_kw;
  }
  std::map<std::pair<NodeId, NodeId>, std::pair<double, double>> arc;  // (cost, cap)
  for (const auto& a : inst.arcs) arc[{a.from, a.to}] = {a.cost_m, a.cap_kw};

  std::map<NodeId, int> indeg;
  std::map<NodeId, double> in_kw, out_kw;
  double objective = 0.0;
  for (const auto& e : sol.edges) {
    auto it = arc.find({e.from, e.to});
    if (it == arc.end()) throw Error("solution uses a non-candidate edge");
    if (e.flow_kw < -kFlowTolKw) throw Error("negative flow");
    if (e.flow_kw > it->second.second + kFlowTolKw) throw Error("flow exceeds capacity");
    objective += it->second.first;
    if (++indeg[e.to] > 1) throw Error("radiality violated: installed in-degree > 1");
    in_kw[e.to] += e.flow_kw;
    out_kw[e.from] += e.flow_kw;
  }
  if (std::abs(objective - sol.objective_m) > 1e-6 * std::max(1.0, std::abs(objective)))
    throw Error("objective does not match installed costs");

  // conservation: inflow - outflow = demand at consumers, = -served at
  // sources (served <= availability), = 0 at street nodes
  for (const auto& [node, r] : residual) {
    const double net = in_kw[node] - out_kw[node];
    if (r < 0.0) {
      if (std::abs(net - (-r)) > kFlowTolKw)
        throw Error("conservation violated at consuming node " + std::to_string(node));
    } else if (r > 0.0) {
      const double served = -net;
      if (served < -kFlowTolKw) throw Error("source absorbs external flow");
      if (served > avail[node] + kFlowTolKw)
        throw Error("source outflow exceeds availability at node " + std::to_string(node));
    } else if (std::abs(net) > kFlowTolKw) {
      throw Error("conservation violated at street node " + std::to_string(node));
    }
  }

  // forest rooted at sources
  std::map<NodeId, NodeId> parent;
  for (const auto& e : sol.edges) parent[e.to] = e.from;
  std::map<NodeId, char> state;  // 0 unseen, 1 on stack, 2 done
  for (const auto& [start, _] : parent) {
    if (state[start] == 2) continue;
    NodeId cur = start;
    std::vector<NodeId> chain;
    while (state[cur] == 0) {
      state[cur] = 1;
      chain.push_back(cur);
      auto it = parent.find(cur);
      if (it == parent.end()) break;
      cur = it->second;
    }
    if (state[cur] == 1 && parent.count(cur)) throw Error("cycle in installed edges");
    for (NodeId y : chain) state[y] = 2;
  }
  for (const auto& [node, r] : residual) {
    if (!(r < 0.0)) continue;
    NodeId cur = node;
    int hops = 0;
    while (parent.count(cur)) {
      cur = parent[cur];
      if (++hops > static_cast<int>(parent.size()) + 1) throw Error("cycle in installed edges");
    }
    if (!(residual[cur] > 0.0))
      throw Error("consuming node " + std::to_string(node) + " not supplied by a substation");
  }
}

namespace milp_detail {

constexpr double kEps = 1e-9;
constexpr double kFlowEps = 1e-7;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct OrigArc {
  NodeId from, to;
  double cost, cap;
  EdgeKind kind;
};

// Reduced undirected edge; chain lists the original arcs oriented u -> v.
struct REdge {
  int u, v;
  double cost;
  double cap;
  std::vector<OrigArc> chain;
  bool into_u_allowed = true;  // false when u is a source
  bool into_v_allowed = true;
};

struct Reduced {
  std::vector<NodeId> ids;     // reduced index -> original node id
  std::vector<double> demand;  // folded demand, >= 0
  std::vector<double> avail;   // source availability after self-supply
  std::vector<bool> is_source;
  std::vector<REdge> edges;
  std::vector<std::vector<int>> inc;
  struct Forced {
    std::vector<OrigArc> chain;  // oriented in flow direction
    double flow;
  };
  std::vector<Forced> forced;
  double base_cost = 0.0;
  std::string infeasible;
};

inline std::vector<OrigArc> reversed(const std::vector<OrigArc>& chain) {
  std::vector<OrigArc> out;
  out.reserve(chain.size());
  for (auto it = chain.rbegin(); it != chain.rend(); ++it)
    out.push_back({it->to, it->from, it->cost, it->cap, it->kind});
  return out;
}

/// Exactness-preserving reductions: fold forced leaf demands into their
/// neighbor, drop empty dead ends, merge empty degree-2 street nodes.
inline Reduced reduce(const FlowInstance& inst) {
  Reduced r;
  std::map<NodeId, int> index;
  for (const auto& n : inst.nodes) {
    index[n.id] = static_cast<int>(r.ids.size());
    r.ids.push_back(n.id);
    r.demand.push_back(n.residual_kw < 0.0 ? -n.residual_kw : 0.0);
    r.avail.push_back(n.residual_kw > 0.0 ? n.residual_kw : 0.0);
    r.is_source.push_back(n.residual_kw > 0.0);
  }
  const int n = static_cast<int>(r.ids.size());
  r.inc.assign(n, {});

  for (const auto& a : inst.arcs) {
    if (a.from < a.to) continue;  // one undirected edge per arc pair
    REdge e;
    e.u = index.at(a.to);
    e.v = index.at(a.from);
    e.cost = a.cost_m;
    e.cap = a.cap_kw;
    e.chain = {{a.to, a.from, a.cost_m, a.cap_kw, a.kind}};
    e.into_u_allowed = !r.is_source[e.u];
    e.into_v_allowed = !r.is_source[e.v];
    const int idx = static_cast<int>(r.edges.size());
    r.edges.push_back(std::move(e));
    r.inc[r.edges[idx].u].push_back(idx);
    r.inc[r.edges[idx].v].push_back(idx);
  }

  std::vector<bool> node_alive(n, true);
  std::vector<bool> edge_alive(r.edges.size(), true);
  auto degree = [&](int x) {
    int d = 0;
    for (int ei : r.inc[x])
      if (edge_alive[ei]) ++d;
    return d;
  };
  auto only_edge = [&](int x) {
    for (int ei : r.inc[x])
      if (edge_alive[ei]) return ei;
    return -1;
  };
  auto absorb = [&](int x) {
    if (r.is_source[x] && r.demand[x] > 0.0) {
      if (r.avail[x] + kFlowTolKw < r.demand[x]) {
        r.infeasible =
            "source availability below local demand at node " + std::to_string(r.ids[x]);
        return false;
      }
      r.avail[x] -= r.demand[x];
      r.demand[x] = 0.0;
    }
    return true;
  };
  for (int x = 0; x < n; ++x)
    if (!absorb(x)) return r;

  bool changed = true;
  while (changed) {
    changed = false;
    for (int x = 0; x < n; ++x) {
      if (!node_alive[x] || r.is_source[x]) continue;
      const int deg = degree(x);
      if (r.demand[x] <= 0.0) {
        if (deg == 0) {
          node_alive[x] = false;
          changed = true;
        } else if (deg == 1) {
          edge_alive[only_edge(x)] = false;
          node_alive[x] = false;
          changed = true;
        } else if (deg == 2) {
          int e1 = -1, e2 = -1;
          for (int ei : r.inc[x])
            if (edge_alive[ei]) (e1 < 0 ? e1 : e2) = ei;
          const REdge a = r.edges[e1];
          const REdge b = r.edges[e2];
          const int pu = a.u == x ? a.v : a.u;
          const int pv = b.u == x ? b.v : b.u;
          if (pu == pv || pu == x || pv == x) continue;  // stub loop, leave as-is
          REdge m;
          m.u = pu;
          m.v = pv;
          m.cost = a.cost + b.cost;
          m.cap = std::min(a.cap, b.cap);
          auto half1 = a.u == pu ? a.chain : reversed(a.chain);  // pu -> x
          auto half2 = b.u == x ? b.chain : reversed(b.chain);   // x -> pv
          m.chain = half1;
          m.chain.insert(m.chain.end(), half2.begin(), half2.end());
          m.into_u_allowed = !r.is_source[pu];
          m.into_v_allowed = !r.is_source[pv];
          edge_alive[e1] = edge_alive[e2] = false;
          node_alive[x] = false;
          const int idx = static_cast<int>(r.edges.size());
          r.edges.push_back(std::move(m));
          edge_alive.push_back(true);
          r.inc[pu].push_back(idx);
          r.inc[pv].push_back(idx);
          changed = true;
        }
      } else {
        if (deg == 0) {
          r.infeasible = "consuming node " + std::to_string(r.ids[x]) + " is disconnected";
          return r;
        }
        if (deg == 1) {
          const int ei = only_edge(x);
          const REdge& e = r.edges[ei];
          if (r.demand[x] > e.cap + kFlowTolKw) {
            r.infeasible = "demand " + std::to_string(r.demand[x]) + " kW exceeds capacity " +
                           std::to_string(e.cap) + " kW on the only edge into node " +
                           std::to_string(r.ids[x]);
            return r;
          }
          const int y = e.u == x ? e.v : e.u;
          Reduced::Forced f;
          f.chain = e.u == y ? e.chain : reversed(e.chain);  // oriented y -> x
          f.flow = r.demand[x];
          r.forced.push_back(std::move(f));
          r.base_cost += e.cost;
          r.demand[y] += r.demand[x];
          r.demand[x] = 0.0;
          edge_alive[ei] = false;
          node_alive[x] = false;
          if (!absorb(y)) return r;
          changed = true;
        }
      }
    }
  }

  std::vector<REdge> edges;
  for (std::size_t i = 0; i < r.edges.size(); ++i)
    if (edge_alive[i]) edges.push_back(std::move(r.edges[i]));
  r.edges = std::move(edges);
  r.inc.assign(n, {});
  for (std::size_t i = 0; i < r.edges.size(); ++i) {
    r.inc[r.edges[i].u].push_back(static_cast<int>(i));
    r.inc[r.edges[i].v].push_back(static_cast<int>(i));
  }
  return r;
}

// Min-cost flow, successive shortest paths with Johnson potentials.
class MinCostFlow {
 public:
  explicit MinCostFlow(int n) : n_(n), head_(n, -1) {}

  int add(int u, int v, double cap, double cost) {
    const int id = static_cast<int>(arcs_.size());
    arcs_.push_back({v, head_[u], cap, cost});
    head_[u] = id;
    arcs_.push_back({u, head_[v], 0.0, -cost});
    head_[v] = id + 1;
    return id;
  }

  /// Routes up to `target` flow from s to t; returns (value, cost).
  std::pair<double, double> run(int s, int t, double target) {
    std::vector<double> pot(n_, 0.0), dist(n_);
    std::vector<int> pre(n_);
    double value = 0.0, cost = 0.0;
    while (target - value > kFlowTolKw) {
      std::fill(dist.begin(), dist.end(), kInf);
      std::fill(pre.begin(), pre.end(), -1);
      dist[s] = 0.0;
      using Item = std::pair<double, int>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
      pq.push({0.0, s});
      while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[u] + kEps) continue;
        for (int id = head_[u]; id >= 0; id = arcs_[id].next) {
          const Arc& a = arcs_[id];
          if (a.cap <= kFlowTolKw) continue;
          const double nd = d + a.cost + pot[u] - pot[a.to];
          if (nd < dist[a.to] - kEps) {
            dist[a.to] = nd;
            pre[a.to] = id;
            pq.push({nd, a.to});
          }
        }
      }
      if (pre[t] < 0) break;
      const double reach_cap = dist[t];
      for (int i = 0; i < n_; ++i) pot[i] += std::min(dist[i], reach_cap);
      double push = target - value;
      for (int id = pre[t]; id >= 0; id = pre[arcs_[id ^ 1].to])
        push = std::min(push, arcs_[id].cap);
      for (int id = pre[t]; id >= 0; id = pre[arcs_[id ^ 1].to]) {
        arcs_[id].cap -= push;
        arcs_[id ^ 1].cap += push;
        cost += push * arcs_[id].cost;
      }
      value += push;
    }
    return {value, cost};
  }

  double forward_flow(int id) const { return arcs_[id ^ 1].cap; }

 private:
  struct Arc {
    int to, next;
    double cap, cost;
  };
  int n_;
  std::vector<int> head_;
  std::vector<Arc> arcs_;
};

// Branch and bound over directed install decisions on the reduced instance.
// Bounds: Wong dual ascent on the directed connectivity relaxation (valid
// for the capacitated problem) plus a min-cost-flow layer priced with the
// ascent's reduced costs. Between refreshes a child node's connectivity
// bound is parent bound + reduced cost of the newly fixed arc, which stays
// valid because fixing an arc refunds at most its used dual weight.
class Solver {
 public:
  Solver(const Reduced& red, const MilpOptions& opt) : r_(red), opt_(opt) {
    n_ = static_cast<int>(r_.ids.size());
    m_ = static_cast<int>(r_.edges.size());
    forbidden_.assign(2 * m_, 0);
    fixed_.assign(2 * m_, 0);
    parent_fixed_.assign(n_, -1);
    for (int e = 0; e < m_; ++e) {
      if (!r_.edges[e].into_v_allowed) forbidden_[2 * e] = 1;
      if (!r_.edges[e].into_u_allowed) forbidden_[2 * e + 1] = 1;
    }
    double total = 0.0;
    for (int x = 0; x < n_; ++x) {
      if (r_.demand[x] > 0.0) terminals_.push_back(x);
      total += r_.demand[x];
    }
    // when neither edge caps nor source availability can bind, the capacity
    // layer adds nothing and a shortest-path forest is always feasible
    uncapacitated_ = true;
    for (const auto& e : r_.edges)
      if (std::isfinite(e.cap) && e.cap < total - kFlowTolKw) uncapacitated_ = false;
    for (int x = 0; x < n_; ++x)
      if (r_.is_source[x] && r_.avail[x] < total - kFlowTolKw) uncapacitated_ = false;
    start_ = std::chrono::steady_clock::now();
  }

  struct Outcome {
    bool feasible = false;
    double objective = 0.0;
    std::vector<int> arcs;  // installed reduced arcs
    std::size_t bb_nodes = 0;
    std::string infeasibility;
  };

  Outcome run() {
    Outcome out;
    if (terminals_.empty()) {
      out.feasible = true;
      out.objective = r_.base_cost;
      return out;
    }

    auto hint_met = [&] {
      return have_best_ &&
             best_obj_ <= opt_.lower_bound_hint + 1e-9 * std::max(1.0, std::abs(best_obj_));
    };

    if (auto h = insertion_heuristic()) offer_arcs(*h);
    if (!opt_.warm_start.empty()) offer_warm_start();
    if (hint_met()) {
      out.feasible = true;
      out.objective = best_obj_;
      out.arcs = best_arcs_;
      return out;
    }

    Ref ref = full_ascent();
    if (!std::isfinite(ref.bound)) {
      out.infeasibility = "consuming nodes cannot be connected to any substation";
      return out;
    }
    if (auto h = insertion_heuristic(&ref)) offer_arcs(*h);
    if (!uncapacitated_) offer_mcf_rounding(ref);
    log::debug("milp root: n=" + std::to_string(n_) + " m=" + std::to_string(m_) +
               " ub=" + (have_best_ ? std::to_string(best_obj_) : "none") +
               " lb=" + std::to_string(ref.bound));

    // reduced-cost arc elimination: an arc can only be installed by a
    // solution costing at least bound + rc, so anything above the incumbent
    // is dead. Eliminations sharpen the next ascent, so iterate a little.
    if (have_best_) {
      for (int pass = 0; pass < 3; ++pass) {
        const double margin = 1e-9 * std::max(1.0, std::abs(best_obj_));
        int eliminated = 0;
        for (int a = 0; a < 2 * m_; ++a) {
          if (forbidden_[a] || fixed_[a]) continue;
          if (ref.bound + std::max(ref.rc[a], ref.gain[a]) >= best_obj_ - margin) {
            forbidden_[a] = 1;
            ++eliminated;
          }
        }
        if (!eliminated) break;
        ref = full_ascent();
        if (!std::isfinite(ref.bound)) {
          // every better-than-incumbent solution needs an eliminated arc,
          // so the incumbent is optimal
          out.feasible = true;
          out.objective = best_obj_;
          out.arcs = best_arcs_;
          out.bb_nodes = bb_nodes_;
          return out;
        }
        if (auto h = insertion_heuristic(&ref)) offer_arcs(*h);
      }
      log::debug("milp after fixing: lb=" + std::to_string(ref.bound));
    }
    if (hint_met()) {
      out.feasible = true;
      out.objective = best_obj_;
      out.arcs = best_arcs_;
      out.bb_nodes = bb_nodes_;
      return out;
    }
    perm_forbidden_ = forbidden_;

    dfs(ref, 0);
    log::debug("milp done: nodes=" + std::to_string(bb_nodes_) +
               " best=" + (have_best_ ? std::to_string(best_obj_) : "none"));

    out.bb_nodes = bb_nodes_;
    if (have_best_) {
      out.feasible = true;
      out.objective = best_obj_;
      out.arcs = best_arcs_;
    } else {
      out.infeasibility = root_infeasibility_.empty()
                              ? "no radial installation satisfies the capacity limits"
                              : root_infeasibility_;
    }
    return out;
  }

  // arc 2e = u->v, 2e+1 = v->u
  int arc_head(int a) const { return a % 2 == 0 ? r_.edges[a / 2].v : r_.edges[a / 2].u; }
  int arc_tail(int a) const { return a % 2 == 0 ? r_.edges[a / 2].u : r_.edges[a / 2].v; }

 private:
  struct Ref {
    double bound = 0.0;      // base + fixed costs + ascent value at ref point
    std::vector<double> rc;  // per reduced arc
    // fixing arc a refunds the dual weight of every cut it crosses; the
    // remaining child bound is bound + cost(a) - loss(a)
    std::vector<double> gain;  // = cost(a) - loss(a), per reduced arc
  };

  bool arc_allowed(int a) const {
    if (forbidden_[a]) return false;
    if (fixed_[a]) return true;
    return parent_fixed_[arc_head(a)] < 0;  // in-degree slot still free
  }

  double arcs_cost(const std::vector<int>& arcs) const {
    double c = 0.0;
    std::set<int> edges;
    for (int a : arcs)
      if (edges.insert(a / 2).second) c += r_.edges[a / 2].cost;
    return c;
  }

  void check_limits() {
    if (opt_.node_limit && bb_nodes_ > opt_.node_limit)
      throw TimeoutError("MILP node limit exceeded before optimality was proven");
    if ((bb_nodes_ & 0x3f) == 0) {
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
      if (elapsed > opt_.time_limit_s)
        throw TimeoutError("MILP time limit of " + std::to_string(opt_.time_limit_s) +
                           " s exceeded before optimality was proven");
    }
  }

  // Wong dual ascent on the directed connectivity relaxation, processing the
  // active terminal with the (lazily tracked) smallest root component. Fixed
  // arcs cost 0. Each cut W counts ceil(demand(W) / max entering cap) times:
  // a radial solution must cross it with that many installed arcs, which
  // prices the rebalancing that pure connectivity cannot see.
  // bound = +inf when some terminal cannot be connected.
  Ref full_ascent() {
    Ref ref;
    ref.rc.assign(2 * m_, 0.0);
    std::vector<double> loss(2 * m_, 0.0);
    for (int e = 0; e < m_; ++e) {
      ref.rc[2 * e] = fixed_[2 * e] ? 0.0 : r_.edges[e].cost;
      ref.rc[2 * e + 1] = fixed_[2 * e + 1] ? 0.0 : r_.edges[e].cost;
    }
    double value = 0.0;

    std::vector<char> in_w(n_, 0);
    std::vector<int> wlist;
    using QItem = std::pair<int, int>;  // (stale |W|, terminal)
    std::priority_queue<QItem, std::vector<QItem>, std::greater<>> queue;
    for (int t : terminals_) queue.push({1, t});

    while (!queue.empty()) {
      auto [est, t] = queue.top();
      queue.pop();

      // W = nodes that reach t through zero-reduced-cost allowed arcs
      wlist.assign(1, t);
      in_w[t] = 1;
      bool rooted = r_.avail[t] > kFlowTolKw;
      for (std::size_t i = 0; i < wlist.size() && !rooted; ++i) {
        const int y = wlist[i];
        for (int ei : r_.inc[y]) {
          for (int dir = 0; dir < 2; ++dir) {
            const int a = 2 * ei + dir;
            if (arc_head(a) != y || !arc_allowed(a) || ref.rc[a] > kEps) continue;
            const int x = arc_tail(a);
            if (in_w[x]) continue;
            in_w[x] = 1;
            wlist.push_back(x);
            if (r_.avail[x] > kFlowTolKw) {
              rooted = true;
              break;
            }
          }
          if (rooted) break;
        }
      }

      if (rooted) {
        for (int y : wlist) in_w[y] = 0;
        continue;  // terminal done
      }
      if (!queue.empty() && static_cast<int>(wlist.size()) > queue.top().first) {
        // stale size; requeue and try the now-smallest component first
        queue.push({static_cast<int>(wlist.size()), t});
        for (int y : wlist) in_w[y] = 0;
        continue;
      }

      double delta = kInf;
      double max_cap = 0.0;
      double w_demand = 0.0;
      for (int y : wlist) {
        w_demand += r_.demand[y];
        for (int ei : r_.inc[y])
          for (int dir = 0; dir < 2; ++dir) {
            const int a = 2 * ei + dir;
            if (arc_head(a) != y || !arc_allowed(a)) continue;
            if (in_w[arc_tail(a)]) continue;
            max_cap = std::max(max_cap, r_.edges[ei].cap);
            if (ref.rc[a] > kEps) delta = std::min(delta, ref.rc[a]);
          }
      }
      if (!std::isfinite(delta)) {
        for (int y : wlist) in_w[y] = 0;
        ref.bound = kInf;
        return ref;
      }
      double multiplier = 1.0;
      if (std::isfinite(max_cap) && max_cap > kFlowTolKw)
        multiplier = std::max(1.0, std::ceil(w_demand / max_cap - 1e-9));
      value += delta * multiplier;
      for (int y : wlist)
        for (int ei : r_.inc[y])
          for (int dir = 0; dir < 2; ++dir) {
            const int a = 2 * ei + dir;
            if (arc_head(a) != y || !arc_allowed(a) || ref.rc[a] <= kEps) continue;
            if (!in_w[arc_tail(a)]) {
              ref.rc[a] = std::max(0.0, ref.rc[a] - delta);
              loss[a] += delta * multiplier;
            }
          }
      queue.push({static_cast<int>(wlist.size()), t});
      for (int y : wlist) in_w[y] = 0;
    }
    ref.bound = r_.base_cost + fixed_cost_ + value;
    ref.gain.assign(2 * m_, 0.0);
    for (int a = 0; a < 2 * m_; ++a)
      ref.gain[a] = (fixed_[a] ? 0.0 : r_.edges[a / 2].cost) - loss[a];
    return ref;
  }

  struct McfOut {
    bool feasible = false;
    double cost = 0.0;
    std::vector<double> flow;  // per reduced arc
    double unserved = 0.0;
  };

  // Capacity layer: route all demand; free arcs price rc/cap per kW, fixed
  // arcs are free. Also the feasibility oracle of the relaxation.
  McfOut capacity_flow(const Ref& ref) {
    McfOut out;
    const int SS = n_, TT = n_ + 1;
    MinCostFlow mcf(n_ + 2);
    std::vector<int> ids(2 * m_, -1);
    for (int e = 0; e < m_; ++e)
      for (int dir = 0; dir < 2; ++dir) {
        const int a = 2 * e + dir;
        if (!arc_allowed(a)) continue;
        const double cap = r_.edges[e].cap;
        if (cap <= kFlowTolKw) continue;
        const double price = (fixed_[a] || !std::isfinite(cap)) ? 0.0 : ref.rc[a] / cap;
        ids[a] = mcf.add(arc_tail(a), arc_head(a), cap, price);
      }
    double demand_total = 0.0;
    for (int x = 0; x < n_; ++x) {
      if (r_.avail[x] > kFlowTolKw) mcf.add(SS, x, r_.avail[x], 0.0);
      if (r_.demand[x] > 0.0) {
        mcf.add(x, TT, r_.demand[x], 0.0);
        demand_total += r_.demand[x];
      }
    }
    auto [value, cost] = mcf.run(SS, TT, demand_total);
    out.unserved = demand_total - value;
    out.feasible = out.unserved <= kFlowTolKw;
    out.cost = cost;
    out.flow.assign(2 * m_, 0.0);
    for (int a = 0; a < 2 * m_; ++a)
      if (ids[a] >= 0) out.flow[a] = mcf.forward_flow(ids[a]);
    return out;
  }

  // Uncapacitated fast path: one multi-source Dijkstra forest over allowed
  // arcs, preferring zero-reduced-cost arcs (then shorter ones). The forest
  // is radial and rooted at sources by construction, so it doubles as the
  // candidate solution; the capacity bound contribution is zero.
  McfOut forest_flow(const Ref& ref) {
    McfOut out;
    out.flow.assign(2 * m_, 0.0);
    std::vector<double> dist(n_, kInf);
    std::vector<int> via(n_, -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    for (int x = 0; x < n_; ++x)
      if (r_.is_source[x]) {
        dist[x] = 0.0;
        pq.push({0.0, x});
      }
    while (!pq.empty()) {
      auto [d, x] = pq.top();
      pq.pop();
      if (d > dist[x] + kEps) continue;
      for (int ei : r_.inc[x]) {
        for (int dir = 0; dir < 2; ++dir) {
          const int a = 2 * ei + dir;
          if (arc_tail(a) != x || !arc_allowed(a)) continue;
          const int y = arc_head(a);
          const double w = fixed_[a] ? 0.0 : ref.rc[a] * 1e7 + r_.edges[ei].cost;
          if (d + w < dist[y] - kEps) {
            dist[y] = d + w;
            via[y] = a;
            pq.push({dist[y], y});
          }
        }
      }
    }
    for (int t : terminals_)
      if (!(dist[t] < kInf)) {
        out.feasible = false;
        out.unserved = r_.demand[t];
        return out;
      }
    out.feasible = true;
    out.cost = 0.0;
    // subtree flows along the via-forest
    std::vector<std::vector<int>> children(n_);
    std::vector<int> order;
    for (int x = 0; x < n_; ++x) {
      if (via[x] >= 0)
        children[arc_tail(via[x])].push_back(x);
      else
        order.push_back(x);
    }
    for (std::size_t i = 0; i < order.size(); ++i)
      for (int c : children[order[i]]) order.push_back(c);
    std::vector<double> subtree(n_, 0.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      subtree[*it] += r_.demand[*it];
      if (via[*it] >= 0) {
        subtree[arc_tail(via[*it])] += subtree[*it];
        out.flow[via[*it]] = subtree[*it];
      }
    }
    return out;
  }

  // Try to read a radial global solution out of the flow-carrying arcs.
  // On failure conflict_out names the offending arc (in-degree clash or
  // capacity violation) so the search can branch straight at the conflict.
  bool extract(const McfOut& mc, std::vector<int>& arcs_out, double& obj_out,
               int& conflict_out) {
    conflict_out = -1;
    std::vector<int> parent_arc(n_, -1);
    for (int a = 0; a < 2 * m_; ++a) {
      if (!(arc_allowed(a) && mc.flow[a] > kFlowEps)) continue;
      const int head = arc_head(a);
      if (parent_arc[head] >= 0) {
        conflict_out = fixed_[parent_arc[head]] ? a : parent_arc[head];
        return false;
      }
      parent_arc[head] = a;
    }
    // cycles / subtree flows
    {
      std::vector<std::vector<int>> children(n_);
      std::vector<int> order;
      for (int x = 0; x < n_; ++x) {
        if (parent_arc[x] >= 0)
          children[arc_tail(parent_arc[x])].push_back(x);
        else
          order.push_back(x);
      }
      for (std::size_t i = 0; i < order.size(); ++i)
        for (int c : children[order[i]]) order.push_back(c);
      if (static_cast<int>(order.size()) != n_) {
        for (int x = 0; x < n_; ++x)
          if (parent_arc[x] >= 0 &&
              std::find(order.begin(), order.end(), x) == order.end()) {
            conflict_out = parent_arc[x];
            break;
          }
        return false;
      }
      std::vector<double> subtree(n_, 0.0);
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int x = *it;
        subtree[x] += r_.demand[x];
        if (parent_arc[x] >= 0) {
          if (subtree[x] > r_.edges[parent_arc[x] / 2].cap + kFlowTolKw) {
            conflict_out = parent_arc[x];
            return false;
          }
          subtree[arc_tail(parent_arc[x])] += subtree[x];
        } else if (subtree[x] > kFlowTolKw && r_.avail[x] + kFlowTolKw < subtree[x]) {
          return false;
        }
      }
      for (int x = 0; x < n_; ++x)
        if (parent_arc[x] >= 0 && subtree[x] <= kFlowTolKw) parent_arc[x] = -1;
    }
    improve_forest(parent_arc);
    arcs_out.clear();
    for (int x = 0; x < n_; ++x)
      if (parent_arc[x] >= 0) arcs_out.push_back(parent_arc[x]);
    obj_out = r_.base_cost + arcs_cost(arcs_out);
    return true;
  }

  // Exact subtree flows of a candidate forest: caps, availability and
  // acyclicity. Prunes zero-flow branches in place.
  bool forest_feasible(std::vector<int>& parent_arc) {
    std::vector<std::vector<int>> children(n_);
    std::vector<int> order;
    for (int x = 0; x < n_; ++x) {
      if (parent_arc[x] >= 0)
        children[arc_tail(parent_arc[x])].push_back(x);
      else
        order.push_back(x);
    }
    const std::size_t roots = order.size();
    for (std::size_t i = 0; i < order.size(); ++i)
      for (int c : children[order[i]]) order.push_back(c);
    if (static_cast<int>(order.size()) != n_) return false;  // cycle
    (void)roots;
    std::vector<double> subtree(n_, 0.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const int x = *it;
      subtree[x] += r_.demand[x];
      if (parent_arc[x] >= 0) {
        if (subtree[x] > r_.edges[parent_arc[x] / 2].cap + kFlowTolKw) return false;
        subtree[arc_tail(parent_arc[x])] += subtree[x];
      } else if (subtree[x] > kFlowTolKw) {
        if (r_.avail[x] + kFlowTolKw < subtree[x]) return false;
      }
    }
    for (int x = 0; x < n_; ++x)
      if (parent_arc[x] >= 0 && subtree[x] <= kFlowTolKw) parent_arc[x] = -1;
    return true;
  }

  // Branch-exchange improvement: re-parent a subtree through a cheaper
  // unused arc whenever flows stay feasible. Uses only permanently allowed
  // arcs so results remain globally valid incumbents.
  void improve_forest(std::vector<int>& parent_arc) {
    const std::vector<char>& banned = perm_forbidden_.empty() ? forbidden_ : perm_forbidden_;
    std::vector<double> subtree(n_, 0.0);
    auto recompute = [&]() {
      std::fill(subtree.begin(), subtree.end(), 0.0);
      std::vector<std::vector<int>> children(n_);
      std::vector<int> order;
      for (int x = 0; x < n_; ++x) {
        if (parent_arc[x] >= 0)
          children[arc_tail(parent_arc[x])].push_back(x);
        else
          order.push_back(x);
      }
      for (std::size_t i = 0; i < order.size(); ++i)
        for (int c : children[order[i]]) order.push_back(c);
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        subtree[*it] += r_.demand[*it];
        if (parent_arc[*it] >= 0) subtree[arc_tail(parent_arc[*it])] += subtree[*it];
      }
    };
    recompute();

    std::vector<char> marked(n_, 0);
    for (int pass = 0; pass < 8; ++pass) {
      bool improved = false;
      for (int a = 0; a < 2 * m_; ++a) {
        if (banned[a]) continue;
        const int v = arc_head(a);
        const int u = arc_tail(a);
        if (parent_arc[v] < 0 || parent_arc[v] == a) continue;
        const double gain = r_.edges[parent_arc[v] / 2].cost - r_.edges[a / 2].cost;
        if (gain <= 1e-9) continue;
        const double moved = subtree[v];
        if (moved > r_.edges[a / 2].cap + kFlowTolKw) continue;
        // u must sit in a tree and outside v's subtree
        bool inside = false;
        int root = u;
        while (true) {
          if (root == v) {
            inside = true;
            break;
          }
          if (parent_arc[root] < 0) break;
          root = arc_tail(parent_arc[root]);
        }
        if (inside) continue;
        if (!(r_.is_source[root])) continue;  // must stay rooted at a source
        // edges on v's current root chain keep their flow after the move
        std::fill(marked.begin(), marked.end(), 0);
        int old_root = v;
        for (int x = v; parent_arc[x] >= 0; x = arc_tail(parent_arc[x])) {
          marked[x] = 1;
          old_root = arc_tail(parent_arc[x]);
        }
        // capacity along the new chain and at the new root
        bool ok = true;
        for (int x = u; parent_arc[x] >= 0; x = arc_tail(parent_arc[x]))
          if (!marked[x] && subtree[x] + moved > r_.edges[parent_arc[x] / 2].cap + kFlowTolKw) {
            ok = false;
            break;
          }
        if (ok && root != old_root && subtree[root] + moved > r_.avail[root] + kFlowTolKw)
          ok = false;
        if (!ok) continue;
        // apply: subtract along the old chain, add along the new one
        for (int x = arc_tail(parent_arc[v]); ; x = arc_tail(parent_arc[x])) {
          subtree[x] -= moved;
          if (parent_arc[x] < 0) break;
        }
        parent_arc[v] = a;
        for (int x = u; ; x = arc_tail(parent_arc[x])) {
          subtree[x] += moved;
          if (parent_arc[x] < 0) break;
        }
        improved = true;
      }
      if (!improved) break;
    }
  }

  // Map the warm-start edge set onto reduced arcs (a reduced edge is taken
  // when its whole chain appears in the given orientation), repair any
  // capacity overloads under the current caps, and offer the result.
  void offer_warm_start() {
    std::set<std::pair<NodeId, NodeId>> warm(opt_.warm_start.begin(), opt_.warm_start.end());
    std::vector<int> parent(n_, -1);
    for (int e = 0; e < m_; ++e) {
      for (int dir = 0; dir < 2; ++dir) {
        const int a = 2 * e + dir;
        if (forbidden_[a]) continue;
        const auto chain = dir == 0 ? r_.edges[e].chain : reversed(r_.edges[e].chain);
        bool all = true;
        for (const auto& oa : chain)
          if (!warm.count({oa.from, oa.to})) {
            all = false;
            break;
          }
        if (all) {
          parent[arc_head(a)] = a;
          break;
        }
      }
    }
    if (offer_repaired(parent))
      log::debug("warm start accepted: obj=" + std::to_string(best_obj_));
    else
      log::debug("warm start failed");
  }

  // Probe, repair if needed, polish and offer a raw forest. Returns whether
  // anything was offered.
  bool offer_repaired(const std::vector<int>& raw_parent) {
    auto finish = [&](std::vector<int>& parent) {
      improve_forest(parent);
      std::vector<int> arcs;
      for (int x = 0; x < n_; ++x)
        if (parent[x] >= 0) arcs.push_back(parent[x]);
      offer_incumbent(arcs, r_.base_cost + arcs_cost(arcs));
      return true;
    };
    std::vector<int> probe = raw_parent;
    if (forest_feasible(probe)) return finish(probe);
    probe = raw_parent;
    if (repair_forest(probe) && forest_feasible(probe)) return finish(probe);
    probe = raw_parent;
    if (detach_reinsert(probe) && forest_feasible(probe)) return finish(probe);
    return false;
  }

  // Round the fractional capacity flow to a forest (largest inflow wins) and
  // repair it; a capacity-aware incumbent source when greedy insertion fails.
  void offer_mcf_rounding(const Ref& ref) {
    auto mc = capacity_flow(ref);
    if (!mc.feasible) return;
    std::vector<int> parent(n_, -1);
    std::vector<double> best_in(n_, 0.0);
    for (int a = 0; a < 2 * m_; ++a) {
      if (!arc_allowed(a) || mc.flow[a] <= kFlowEps) continue;
      const int head = arc_head(a);
      if (mc.flow[a] > best_in[head]) {
        best_in[head] = mc.flow[a];
        parent[head] = a;
      }
    }
    offer_repaired(parent);
  }

  // Move subtrees off overloaded edges onto capacity-feasible alternatives,
  // cheapest relief first. Returns false when stuck.
  bool repair_forest(std::vector<int>& parent_arc) {
    for (int round = 0; round < 400; ++round) {
      // exact flows
      std::vector<std::vector<int>> children(n_);
      std::vector<int> order;
      for (int x = 0; x < n_; ++x) {
        if (parent_arc[x] >= 0)
          children[arc_tail(parent_arc[x])].push_back(x);
        else
          order.push_back(x);
      }
      for (std::size_t i = 0; i < order.size(); ++i)
        for (int c : children[order[i]]) order.push_back(c);
      if (static_cast<int>(order.size()) != n_) return false;
      std::vector<double> subtree(n_, 0.0);
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        subtree[*it] += r_.demand[*it];
        if (parent_arc[*it] >= 0) subtree[arc_tail(parent_arc[*it])] += subtree[*it];
      }

      // worst overload (edge cap or source availability)
      int bad = -1;  // node whose in-arc (or root) is overloaded
      double excess = kFlowTolKw;
      for (int x = 0; x < n_; ++x) {
        double over = 0.0;
        if (parent_arc[x] >= 0)
          over = subtree[x] - r_.edges[parent_arc[x] / 2].cap;
        else if (subtree[x] > kFlowTolKw)
          over = r_.is_source[x] ? subtree[x] - r_.avail[x] : subtree[x];
        if (over > excess) {
          excess = over;
          bad = x;
        }
      }
      if (bad < 0) return true;

      // members of the overloaded subtree
      std::vector<char> inside(n_, 0);
      std::vector<int> members{bad};
      inside[bad] = 1;
      for (std::size_t i = 0; i < members.size(); ++i)
        for (int c : children[members[i]]) {
          inside[c] = 1;
          members.push_back(c);
        }

      // cheapest re-parenting of any member whose move relieves the overload
      int best_arc = -1;
      double best_delta = kInf;
      std::vector<char> marked(n_, 0);
      int rej_inside = 0, rej_cap = 0, rej_chain = 0, rej_root = 0, rej_avail = 0, cand = 0;
      for (int w : members) {
        const bool orphan = parent_arc[w] < 0;
        if (orphan && (r_.is_source[w] || w != bad)) continue;
        const double moved = subtree[w];
        if (moved <= kFlowTolKw) continue;
        // edges on w's current root chain keep their flow after the move
        std::fill(marked.begin(), marked.end(), 0);
        int old_root = w;
        for (int cur = w; parent_arc[cur] >= 0; cur = arc_tail(parent_arc[cur])) {
          marked[cur] = 1;
          old_root = arc_tail(parent_arc[cur]);
        }
        for (int ei : r_.inc[w]) {
          for (int dir = 0; dir < 2; ++dir) {
            const int a = 2 * ei + dir;
            if (arc_head(a) != w || forbidden_[a] || parent_arc[w] == a) continue;
            ++cand;
            const int x = arc_tail(a);
            if (inside[x]) {
              ++rej_inside;
              continue;  // still routes through the overload
            }
            if (moved > r_.edges[ei].cap + kFlowTolKw) {
              ++rej_cap;
              continue;
            }
            bool ok = true;
            int root = x;
            std::size_t hops = 0;
            for (int y = x; parent_arc[y] >= 0; y = arc_tail(parent_arc[y])) {
              if (!marked[y] &&
                  subtree[y] + moved > r_.edges[parent_arc[y] / 2].cap + kFlowTolKw) {
                ok = false;
                break;
              }
              root = arc_tail(parent_arc[y]);
              if (++hops > static_cast<std::size_t>(n_)) {
                ok = false;
                break;
              }
            }
            if (!ok) {
              ++rej_chain;
              continue;
            }
            if (!r_.is_source[root]) {
              ++rej_root;
              continue;
            }
            if (root != old_root && subtree[root] + moved > r_.avail[root] + kFlowTolKw) {
              ++rej_avail;
              continue;
            }
            const double delta =
                r_.edges[ei].cost - (orphan ? 0.0 : r_.edges[parent_arc[w] / 2].cost);
            if (delta < best_delta) {
              best_delta = delta;
              best_arc = a;
            }
          }
        }
      }
      if (best_arc < 0) {
        log::debug("repair stuck: node=" + std::to_string(r_.ids[bad]) + " excess=" +
                   std::to_string(excess) + " members=" + std::to_string(members.size()) +
                   " cand=" + std::to_string(cand) + " inside=" + std::to_string(rej_inside) +
                   " cap=" + std::to_string(rej_cap) + " chain=" + std::to_string(rej_chain) +
                   " badroot=" + std::to_string(rej_root) +
                   " avail=" + std::to_string(rej_avail));
        return false;
      }
      parent_arc[arc_head(best_arc)] = best_arc;
    }
    return false;
  }

  // improve a raw forest and offer it as an incumbent
  void offer_arcs(const std::vector<int>& raw) {
    std::vector<int> parent(n_, -1);
    for (int a : raw) parent[arc_head(a)] = a;
    improve_forest(parent);
    std::vector<int> arcs;
    for (int x = 0; x < n_; ++x)
      if (parent[x] >= 0) arcs.push_back(parent[x]);
    offer_incumbent(arcs, r_.base_cost + arcs_cost(arcs));
  }

  void offer_incumbent(const std::vector<int>& arcs, double obj) {
    const double margin = 1e-9 * std::max(1.0, std::abs(obj));
    if (!have_best_ || obj < best_obj_ - margin) {
      best_obj_ = obj;
      best_arcs_ = arcs;
      have_best_ = true;
      return;
    }
    if (std::abs(obj - best_obj_) <= margin) {
      auto key = [](std::vector<int> v) {
        std::sort(v.begin(), v.end());
        return v;
      };
      if (key(arcs) < key(best_arcs_)) best_arcs_ = arcs;
    }
  }

  // Greedy radial insertion: attach demands (largest first) to the growing
  // forest along the cheapest capacity-feasible uncovered path. With a dual
  // reference the search stays inside the ascent's saturation graph (arcs of
  // zero reduced cost), which concentrates it on near-optimal arcs.
  std::optional<std::vector<int>> insertion_heuristic(const Ref* guide = nullptr) {
    std::vector<int> parent_arc(n_, -1);
    std::vector<char> covered(n_, 0);
    std::vector<double> up_flow(n_, 0.0);  // flow on the arc into the node
    std::vector<double> src_load(n_, 0.0);
    for (int x = 0; x < n_; ++x)
      if (r_.is_source[x]) covered[x] = 1;

    std::vector<int> todo = terminals_;
    std::stable_sort(todo.begin(), todo.end(),
                     [&](int a, int b) { return r_.demand[a] > r_.demand[b]; });

    if (!insert_terminals(parent_arc, covered, up_flow, src_load, todo, guide))
      return std::nullopt;

    // the insertion checks only saw each terminal's own demand; reject the
    // forest unless the exact subtree flows respect caps and availability
    if (!forest_feasible(parent_arc)) return std::nullopt;
    std::vector<int> arcs;
    for (int x = 0; x < n_; ++x)
      if (parent_arc[x] >= 0) arcs.push_back(parent_arc[x]);
    return arcs;
  }

  // Recompute coverage and exact flows from a partial forest.
  void forest_state(const std::vector<int>& parent_arc, std::vector<char>& covered,
                    std::vector<double>& up_flow, std::vector<double>& src_load) {
    covered.assign(n_, 0);
    up_flow.assign(n_, 0.0);
    src_load.assign(n_, 0.0);
    std::vector<std::vector<int>> children(n_);
    std::vector<int> order;
    for (int x = 0; x < n_; ++x) {
      if (parent_arc[x] >= 0)
        children[arc_tail(parent_arc[x])].push_back(x);
      else
        order.push_back(x);
    }
    for (std::size_t i = 0; i < order.size(); ++i)
      for (int c : children[order[i]]) order.push_back(c);
    std::vector<double> subtree(n_, 0.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      subtree[*it] += r_.demand[*it];
      if (parent_arc[*it] >= 0) subtree[arc_tail(parent_arc[*it])] += subtree[*it];
    }
    for (int x = 0; x < n_; ++x) {
      if (r_.is_source[x]) {
        covered[x] = 1;
        src_load[x] = subtree[x];
      }
      if (parent_arc[x] >= 0) {
        covered[x] = 1;
        up_flow[x] = subtree[x];
      }
    }
  }

  bool insert_terminals(std::vector<int>& parent_arc, std::vector<char>& covered,
                        std::vector<double>& up_flow, std::vector<double>& src_load,
                        const std::vector<int>& todo, const Ref* guide) {
    std::deque<int> queue(todo.begin(), todo.end());
    int bump_budget = 3 * static_cast<int>(todo.size()) + 24;
    while (!queue.empty()) {
      const int t = queue.front();
      queue.pop_front();
      if (covered[t]) continue;
      const double d = r_.demand[t];
      // Dijkstra from t over uncovered nodes; via[x] = installable arc x->y
      std::vector<double> dist(n_, kInf);
      std::vector<int> via(n_, -1);
      dist[t] = 0.0;
      using Item = std::pair<double, int>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
      pq.push({0.0, t});
      struct Junction {
        double cost;
        int node;
        int arc;  // arc junction -> first uncovered node
      };
      std::vector<Junction> junctions;
      while (!pq.empty()) {
        auto [dd, y] = pq.top();
        pq.pop();
        if (dd > dist[y] + kEps) continue;
        for (int ei : r_.inc[y]) {
          for (int dir = 0; dir < 2; ++dir) {
            const int a = 2 * ei + dir;
            if (arc_head(a) != y || !arc_allowed(a)) continue;
            if (guide && guide->rc[a] > kEps) continue;
            if (r_.edges[ei].cap + kFlowTolKw < d) continue;
            const int x = arc_tail(a);
            const double nd = dd + r_.edges[ei].cost;
            if (covered[x]) {
              junctions.push_back({nd, x, a});
              continue;
            }
            if (nd < dist[x] - kEps) {
              dist[x] = nd;
              via[x] = a;
              pq.push({nd, x});
            }
          }
        }
      }
      std::stable_sort(junctions.begin(), junctions.end(),
                       [](const Junction& a, const Junction& b) { return a.cost < b.cost; });
      bool attached = false;
      for (const auto& j : junctions) {
        bool ok = true;
        int cur = j.node;
        while (parent_arc[cur] >= 0) {
          if (up_flow[cur] + d > r_.edges[parent_arc[cur] / 2].cap + kFlowTolKw) {
            ok = false;
            break;
          }
          cur = arc_tail(parent_arc[cur]);
        }
        if (!ok) continue;
        const int root = cur;
        if (src_load[root] + d > r_.avail[root] + kFlowTolKw) continue;
        // install the new path: j.arc, then follow via[] toward t
        std::vector<int> path{j.arc};
        int at = arc_head(j.arc);
        while (at != t) {
          const int a = via[at];
          if (a < 0) break;
          path.push_back(a);
          at = arc_head(a);
        }
        if (at != t) continue;
        for (int a : path) {
          const int head = arc_head(a);
          parent_arc[head] = a;
          covered[head] = 1;
          up_flow[head] = d;
        }
        cur = j.node;
        while (parent_arc[cur] >= 0) {
          up_flow[cur] += d;
          cur = arc_tail(parent_arc[cur]);
        }
        src_load[root] += d;
        // demands sitting on interior path nodes ride along too
        for (int a : path) {
          const int x = arc_head(a);
          if (x == t || r_.demand[x] <= 0.0) continue;
          int walk = x;
          while (parent_arc[walk] >= 0) {
            up_flow[walk] += r_.demand[x];
            walk = arc_tail(parent_arc[walk]);
          }
          src_load[walk] += r_.demand[x];
        }
        attached = true;
        break;
      }
      if (!attached) {
        // bump: free the first saturated edge above the cheapest junction
        // and requeue the displaced demands behind this terminal
        if (junctions.empty() || --bump_budget < 0) return false;
        int blocked = -1;
        for (const auto& j : junctions) {
          int cur = j.node;
          while (parent_arc[cur] >= 0) {
            if (up_flow[cur] + d > r_.edges[parent_arc[cur] / 2].cap + kFlowTolKw) {
              blocked = cur;
              break;
            }
            cur = arc_tail(parent_arc[cur]);
          }
          if (blocked < 0 && src_load[cur] + d > r_.avail[cur] + kFlowTolKw) {
            // availability bound: displace the junction subtree itself
            blocked = j.node;
          }
          if (blocked >= 0) break;
        }
        if (blocked < 0) return false;
        std::vector<int> members{blocked};
        std::vector<std::vector<int>> children(n_);
        for (int x = 0; x < n_; ++x)
          if (parent_arc[x] >= 0) children[arc_tail(parent_arc[x])].push_back(x);
        for (std::size_t i = 0; i < members.size(); ++i)
          for (int c : children[members[i]]) members.push_back(c);
        for (int w : members) {
          parent_arc[w] = -1;
          if (r_.demand[w] > 0.0) queue.push_back(w);
        }
        forest_state(parent_arc, covered, up_flow, src_load);
        queue.push_front(t);
      }
    }
    return true;
  }

  // Detach the worst overloaded subtree and reinsert its demands one by one,
  // which can route through uncovered street nodes where single-arc swaps
  // cannot. Leaves a capacity-feasible forest on success.
  bool detach_reinsert(std::vector<int>& parent_arc) {
    for (int round = 0; round < 8; ++round) {
      std::vector<std::vector<int>> children(n_);
      std::vector<int> order;
      for (int x = 0; x < n_; ++x) {
        if (parent_arc[x] >= 0)
          children[arc_tail(parent_arc[x])].push_back(x);
        else
          order.push_back(x);
      }
      for (std::size_t i = 0; i < order.size(); ++i)
        for (int c : children[order[i]]) order.push_back(c);
      if (static_cast<int>(order.size()) != n_) return false;
      std::vector<double> subtree(n_, 0.0);
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        subtree[*it] += r_.demand[*it];
        if (parent_arc[*it] >= 0) subtree[arc_tail(parent_arc[*it])] += subtree[*it];
      }
      int bad = -1;
      double excess = kFlowTolKw;
      for (int x = 0; x < n_; ++x) {
        double over = 0.0;
        if (parent_arc[x] >= 0)
          over = subtree[x] - r_.edges[parent_arc[x] / 2].cap;
        else if (subtree[x] > kFlowTolKw)
          over = r_.is_source[x] ? subtree[x] - r_.avail[x] : subtree[x];
        if (over > excess) {
          excess = over;
          bad = x;
        }
      }
      if (bad < 0) return true;

      // detach the whole offending subtree
      std::vector<int> members{bad};
      for (std::size_t i = 0; i < members.size(); ++i)
        for (int c : children[members[i]]) members.push_back(c);
      for (int w : members) parent_arc[w] = -1;

      // rebuild coverage and exact flows of the remaining forest
      std::vector<char> covered(n_, 0);
      std::vector<double> up_flow(n_, 0.0), src_load(n_, 0.0);
      for (int x = 0; x < n_; ++x)
        if (r_.is_source[x]) covered[x] = 1;
      children.assign(n_, {});
      order.clear();
      for (int x = 0; x < n_; ++x) {
        if (parent_arc[x] >= 0)
          children[arc_tail(parent_arc[x])].push_back(x);
        else
          order.push_back(x);
      }
      for (std::size_t i = 0; i < order.size(); ++i)
        for (int c : children[order[i]]) order.push_back(c);
      std::fill(subtree.begin(), subtree.end(), 0.0);
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        subtree[*it] += r_.demand[*it];
        if (parent_arc[*it] >= 0) subtree[arc_tail(parent_arc[*it])] += subtree[*it];
      }
      for (int x = 0; x < n_; ++x) {
        if (parent_arc[x] >= 0) {
          covered[x] = 1;
          up_flow[x] = subtree[x];
          int root = arc_tail(parent_arc[x]);
          while (parent_arc[root] >= 0) root = arc_tail(parent_arc[root]);
          (void)root;
        }
      }
      for (int x = 0; x < n_; ++x)
        if (r_.is_source[x]) src_load[x] = subtree[x];

      std::vector<int> todo;
      for (int t : terminals_)
        if (!covered[t]) todo.push_back(t);
      std::stable_sort(todo.begin(), todo.end(),
                       [&](int a, int b) { return r_.demand[a] > r_.demand[b]; });
      if (!insert_terminals(parent_arc, covered, up_flow, src_load, todo, nullptr))
        return false;
    }
    return false;
  }

  void dfs(const Ref& ref, int depth_since_ref) {
    ++bb_nodes_;
    check_limits();
    if ((bb_nodes_ & 0x3fff) == 0)
      log::debug("milp progress: nodes=" + std::to_string(bb_nodes_) +
                 " best=" + (have_best_ ? std::to_string(best_obj_) : "none") +
                 " ref_lb=" + std::to_string(ref.bound));

    double sum_rc = 0.0, sum_gain = 0.0;
    for (int a : fixed_since_ref_) {
      sum_rc += ref.rc[a];
      sum_gain += ref.gain[a];
    }
    const double lb_conn = ref.bound + std::max(sum_rc, sum_gain);
    const double ub_margin = have_best_ ? 1e-9 * std::max(1.0, std::abs(best_obj_)) : 0.0;
    if (have_best_ && lb_conn >= best_obj_ - ub_margin) return;

    // the exact capacity layer runs at reference points; between refreshes a
    // cheap Dijkstra forest supplies flows and extraction checks caps exactly
    const bool exact_layer = !uncapacitated_ && (depth_since_ref == 0 || bb_nodes_ == 1);
    auto mc = exact_layer ? capacity_flow(ref) : forest_flow(ref);
    if (!mc.feasible) {
      if (bb_nodes_ == 1)
        root_infeasibility_ = "capacity cut: " + std::to_string(mc.unserved) +
                              " kW of demand cannot be routed under the capacity limits";
      return;
    }
    const double lb = lb_conn + mc.cost;
    if (have_best_ && lb >= best_obj_ - ub_margin) return;

    std::vector<int> cand;
    double cand_obj = 0.0;
    int conflict = -1;
    if (extract(mc, cand, cand_obj, conflict)) {
      offer_incumbent(cand, cand_obj);
      if (cand_obj <= lb + 1e-9 * std::max(1.0, std::abs(cand_obj))) return;  // subtree solved
    }

    // branch at the extraction conflict when there is one, otherwise on the
    // free arc moving the most cost-weighted flow
    int pick = -1;
    if (conflict >= 0 && !fixed_[conflict] && arc_allowed(conflict)) pick = conflict;
    if (pick < 0) {
      double score = 0.0;
      for (int a = 0; a < 2 * m_; ++a) {
        if (fixed_[a] || !arc_allowed(a) || mc.flow[a] <= kFlowEps) continue;
        const double s = r_.edges[a / 2].cost * mc.flow[a];
        if (s > score + kEps) {
          score = s;
          pick = a;
        }
      }
    }
    if (pick < 0) {
      for (int a = 0; a < 2 * m_ && pick < 0; ++a)
        if (!fixed_[a] && arc_allowed(a)) pick = a;
      if (pick < 0) return;  // fully decided; extraction above was the last word
    }

    const int head = arc_head(pick);
    const int tail = arc_tail(pick);

    // install child (skipped when it would close a cycle of fixed arcs)
    bool cycle = false;
    for (int cur = tail; cur >= 0;) {
      if (cur == head) {
        cycle = true;
        break;
      }
      cur = parent_fixed_[cur] >= 0 ? arc_tail(parent_fixed_[cur]) : -1;
    }
    if (!cycle) {
      fixed_[pick] = 1;
      const char prev_rev = forbidden_[pick ^ 1];
      forbidden_[pick ^ 1] = 1;
      const int prev_parent = parent_fixed_[head];
      parent_fixed_[head] = pick;
      fixed_cost_ += r_.edges[pick / 2].cost;
      fixed_since_ref_.push_back(pick);
      descend(ref, depth_since_ref + 1);
      fixed_since_ref_.pop_back();
      fixed_cost_ -= r_.edges[pick / 2].cost;
      parent_fixed_[head] = prev_parent;
      forbidden_[pick ^ 1] = prev_rev;
      fixed_[pick] = 0;
    }

    forbidden_[pick] = 1;
    descend(ref, depth_since_ref + 1);
    forbidden_[pick] = 0;
  }

  // refresh the dual reference every few decisions in either direction
  void descend(const Ref& ref, int depth_since_ref) {
    if (depth_since_ref >= opt_.refresh_depth) {
      Ref fresh = full_ascent();
      if (!std::isfinite(fresh.bound)) return;  // subtree disconnected
      if (auto h = insertion_heuristic(&fresh)) offer_arcs(*h);
      auto saved = std::move(fixed_since_ref_);
      fixed_since_ref_.clear();
      dfs(fresh, 0);
      fixed_since_ref_ = std::move(saved);
    } else {
      dfs(ref, depth_since_ref);
    }
  }

  const Reduced& r_;
  MilpOptions opt_;
  int n_ = 0, m_ = 0;
  std::vector<char> forbidden_, fixed_, perm_forbidden_;
  std::vector<int> parent_fixed_;
  std::vector<int> fixed_since_ref_;
  std::vector<int> terminals_;
  bool uncapacitated_ = false;
  double fixed_cost_ = 0.0;
  bool have_best_ = false;
  double best_obj_ = kInf;
  std::vector<int> best_arcs_;
  std::string root_infeasibility_;
  std::size_t bb_nodes_ = 0;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace milp_detail

/// Exact optimum of the binary min-cost-flow program: installed edges form a
/// radial forest rooted at the substations, flows respect per-edge caps, and
/// the total installed length is minimal. Optimality is proven by branch and
/// bound; infeasibility is an explicit result, not an error.
inline MilpResult solve_milp(const FlowInstance& inst, const MilpOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  inst.validate();

  MilpResult res;
  auto red = milp_detail::reduce(inst);
  auto finish = [&](MilpResult& r) {
    r.stats.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  };
  if (!red.infeasible.empty()) {
    res.status = MilpStatus::infeasible;
    res.infeasibility = red.infeasible;
    return finish(res);
  }

  milp_detail::Solver solver(red, opt);
  auto out = solver.run();
  res.stats.bb_nodes = out.bb_nodes;

  if (!out.feasible) {
    res.status = MilpStatus::infeasible;
    res.infeasibility = out.infeasibility;
    return finish(res);
  }

  // expand reduced arcs + forced chains back to original edges
  std::map<NodeId, NodeId> parent;
  std::map<std::pair<NodeId, NodeId>, std::pair<double, EdgeKind>> meta;
  for (const auto& f : red.forced)
    for (const auto& oa : f.chain) {
      parent[oa.to] = oa.from;
      meta[{oa.from, oa.to}] = {oa.cost, oa.kind};
    }
  for (int a : out.arcs) {
    const auto& e = red.edges[a / 2];
    const auto chain = (a % 2 == 0) ? e.chain : milp_detail::reversed(e.chain);
    for (const auto& oa : chain) {
      parent[oa.to] = oa.from;
      meta[{oa.from, oa.to}] = {oa.cost, oa.kind};
    }
  }

  std::map<NodeId, double> demand;
  for (const auto& n : inst.nodes)
    if (n.residual_kw < 0.0) demand[n.id] = -n.residual_kw;

  std::map<NodeId, double> flow_into;
  for (const auto& [node, d] : demand) {
    NodeId cur = node;
    while (true) {
      auto it = parent.find(cur);
      if (it == parent.end()) break;
      flow_into[cur] += d;
      cur = it->second;
    }
  }

  LvSolution sol;
  for (const auto& [to, from] : parent) {
    const auto& [cost, kind] = meta.at({from, to});
    InstalledEdge ie{from, to, 0.0, cost, kind};
    if (auto it = flow_into.find(to); it != flow_into.end()) ie.flow_kw = it->second;
    sol.edges.push_back(ie);
    sol.objective_m += cost;
  }
  std::sort(sol.edges.begin(), sol.edges.end(), [](const auto& x, const auto& y) {
    return std::pair{x.from, x.to} < std::pair{y.from, y.to};
  });
  auto root_walk = [&](NodeId x) {
    while (true) {
      auto it = parent.find(x);
      if (it == parent.end()) return x;
      x = it->second;
    }
  };
  for (const auto& [node, d] : demand) sol.root_of[node] = root_walk(node);
  for (const auto& e : sol.edges) {
    sol.root_of[e.to] = root_walk(e.to);
    sol.root_of[e.from] = root_walk(e.from);
  }

  res.status = MilpStatus::optimal;
  res.solution = std::move(sol);
  check_solution(inst, res.solution);
  return finish(res);
}

}  // namespace gridsynth
