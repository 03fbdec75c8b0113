#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gridsynth/csv.hpp"
#include "gridsynth/errors.hpp"
#include "gridsynth/flow.hpp"
#include "gridsynth/geo.hpp"
#include "gridsynth/mv_planner.hpp"
#include "gridsynth/powerflow.hpp"

namespace gridsynth {

struct TransformerStats {
  int transformer_id = 0;
  int node_count = 0;
  double eccentricity_m = 0.0;
};

// A "node" is a 400 V busbar: the transformer LV bus plus, per building, the
// building bus and its street-side connection bus. Pure pass-through cable
// joints are not busbars.
struct LvNodeCounts {
  std::map<NodeId, int> per_substation;  // substation graph node -> LV node count
};

/// Count supplied LV nodes per transformer: two per building plus the
/// transformer's own bus. `buildings` must be the supplied buildings (with a
/// load estimate); one without a tree is an orphan and a model-integrity
/// error.
inline LvNodeCounts nodes_per_transformer(const LvSolution& solution,
                                          const std::vector<Building>& buildings,
                                          const std::vector<Substation>& substations) {
  LvNodeCounts out;
  for (const auto& s : substations) out.per_substation[s.graph_node] = 1;  // own LV bus
  for (const auto& b : buildings) {
    auto it = solution.root_of.find(b.building_node);
    if (b.building_node < 0 || it == solution.root_of.end())
      throw Error("nodes_per_transformer: building " + std::to_string(b.id) +
                  " is not supplied by any tree");
    auto sub = out.per_substation.find(it->second);
    if (sub == out.per_substation.end())
      throw Error("nodes_per_transformer: building " + std::to_string(b.id) +
                  " supplied by an unknown substation");
    sub->second += 2;
  }
  return out;
}

/// Maximum installed-cable distance from the substation to any node of its
/// tree (Dijkstra over the installed edges only).
inline double eccentricity(const LvSolution& solution, NodeId substation_node) {
  std::map<NodeId, std::vector<std::pair<NodeId, double>>> adj;
  for (const auto& e : solution.edges) {
    adj[e.from].push_back({e.to, e.cost_m});
    adj[e.to].push_back({e.from, e.cost_m});
  }
  std::map<NodeId, double> dist;
  dist[substation_node] = 0.0;
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  pq.push({0.0, substation_node});
  double ecc = 0.0;
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist.at(u)) continue;
    ecc = std::max(ecc, d);
    for (const auto& [v, len] : adj[u]) {
      auto it = dist.find(v);
      if (it == dist.end() || d + len < it->second) {
        dist[v] = d + len;
        pq.push({d + len, v});
      }
    }
  }
  return ecc;
}

struct LoadingHistogram {
  double bin_width_pct = 1.0;
  std::vector<long> counts;  // [0,w), [w,2w), ..., last bin takes >= 100 %
  bool normalized = false;
  std::vector<double> frequencies;  // filled when normalized

  long total() const {
    long t = 0;
    for (long c : counts) t += c;
    return t;
  }
};

/// Fixed-width bins up to 100 %, overflow clipped into the last bin.
inline LoadingHistogram loading_histogram(const std::vector<double>& loadings_pct,
                                          double bin_width_pct = 1.0, bool normalized = false) {
  if (!(bin_width_pct > 0.0)) throw Error("loading_histogram: bin width must be > 0");
  LoadingHistogram h;
  h.bin_width_pct = bin_width_pct;
  const int regular = static_cast<int>(std::ceil(100.0 / bin_width_pct));
  h.counts.assign(regular + 1, 0);
  for (double v : loadings_pct) {
    if (v < 0.0) throw Error("loading_histogram: negative loading");
    const int bin = v >= 100.0 ? regular : static_cast<int>(v / bin_width_pct);
    ++h.counts[std::min(bin, regular)];
  }
  h.normalized = normalized;
  if (normalized) {
    const double t = static_cast<double>(std::max<long>(h.total(), 1));
    h.frequencies.resize(h.counts.size());
    for (std::size_t i = 0; i < h.counts.size(); ++i)
      h.frequencies[i] = static_cast<double>(h.counts[i]) / t;
  }
  return h;
}

inline LoadingHistogram loading_histogram(const FlowResult& result, double bin_width_pct = 1.0,
                                          bool normalized = false) {
  std::vector<double> v;
  v.reserve(result.loading_pct.size());
  for (const auto& [_, pct] : result.loading_pct) v.push_back(pct);
  return loading_histogram(v, bin_width_pct, normalized);
}

/// Euclidean distance between histograms; smaller means more similar.
inline double similarity_index(const LoadingHistogram& a, const LoadingHistogram& b) {
  if (a.counts.size() != b.counts.size() || a.bin_width_pct != b.bin_width_pct)
    throw Error("similarity_index: histograms have mismatched binning");
  if (a.normalized != b.normalized)
    throw Error("similarity_index: histograms have mismatched normalization");
  double s = 0.0;
  for (std::size_t i = 0; i < a.counts.size(); ++i) {
    const double d = a.normalized ? a.frequencies[i] - b.frequencies[i]
                                  : static_cast<double>(a.counts[i] - b.counts[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

struct StationDistance {
  int known_id = 0;
  int computed_id = 0;
  double distance_m = 0.0;
};

/// Map each computed position to the closest known transformer; ambiguous
/// mappings keep the closest computed candidate, losers move to their next
/// nearest unclaimed known station. One-to-one on min(|known|, |computed|).
inline std::vector<StationDistance> transformer_distances(
    const std::vector<Substation>& known, const std::vector<Substation>& computed) {
  if (known.empty() || computed.empty())
    throw Error("transformer_distances: both station lists must be nonempty");

  std::set<int> free_known, free_computed;
  std::map<int, const Substation*> kmap, cmap;
  for (const auto& s : known) {
    free_known.insert(s.id);
    kmap[s.id] = &s;
  }
  for (const auto& s : computed) {
    free_computed.insert(s.id);
    cmap[s.id] = &s;
  }

  std::vector<StationDistance> out;
  while (!free_known.empty() && !free_computed.empty()) {
    // each free computed station proposes to its nearest free known station
    std::map<int, std::pair<double, int>> proposals;  // known -> (dist, computed)
    for (int cid : free_computed) {
      double best = std::numeric_limits<double>::infinity();
      int pick = -1;
      for (int kid : free_known) {
        const double d = haversine_m(cmap[cid]->location, kmap[kid]->location);
        if (d < best) {
          best = d;
          pick = kid;
        }
      }
      auto it = proposals.find(pick);
      if (it == proposals.end() || best < it->second.first)
        proposals[pick] = {best, cid};
    }
    for (const auto& [kid, pr] : proposals) {
      out.push_back({kid, pr.second, pr.first});
      free_known.erase(kid);
      free_computed.erase(pr.second);
    }
  }
  std::sort(out.begin(), out.end(), [](const StationDistance& a, const StationDistance& b) {
    return a.known_id < b.known_id;
  });
  return out;
}

struct StageTimes {
  double ingestion_s = 0.0;
  double mv_s = 0.0;       // 20 kV generation
  double lv_s = 0.0;       // 400 V generation
  double export_s = 0.0;   // evaluation + export
  double milp_s = 0.0;     // MILP share of the LV stage

  double total_s() const { return ingestion_s + mv_s + lv_s + export_s; }
};

/// Wall-clock per pipeline stage; with a B run present the speedup ratio
/// (B/A of the MILP time) is reported too.
inline void write_runtime_csv(const std::string& path, const StageTimes& a,
                              const std::string& a_label, const StageTimes* b = nullptr,
                              const std::string& b_label = "") {
  csv::Writer w(path);
  if (!b) {
    w.row({"stage", "seconds"});
    w.row({"data ingestion", std::to_string(a.ingestion_s)});
    w.row({"20 kV generation", std::to_string(a.mv_s)});
    w.row({"400 V generation", std::to_string(a.lv_s)});
    w.row({"export", std::to_string(a.export_s)});
    w.row({"total", std::to_string(a.total_s())});
    return;
  }
  w.row({"stage", a_label + "_seconds", b_label + "_seconds"});
  w.row({"data ingestion", std::to_string(a.ingestion_s), std::to_string(b->ingestion_s)});
  w.row({"20 kV generation", std::to_string(a.mv_s), std::to_string(b->mv_s)});
  w.row({"400 V generation", std::to_string(a.lv_s), std::to_string(b->lv_s)});
  w.row({"export", std::to_string(a.export_s), std::to_string(b->export_s)});
  w.row({"total", std::to_string(a.total_s()), std::to_string(b->total_s())});
  w.row({"milp", std::to_string(a.milp_s), std::to_string(b->milp_s)});
  if (a.milp_s > 0.0)
    w.row({"milp speedup " + b_label + "/" + a_label, std::to_string(b->milp_s / a.milp_s), ""});
}

}  // namespace gridsynth
