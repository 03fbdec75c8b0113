#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gridsynth/csv.hpp"
#include "gridsynth/errors.hpp"
#include "gridsynth/estimation.hpp"
#include "gridsynth/kmeans.hpp"
#include "gridsynth/street_graph.hpp"
#include "gridsynth/tsp.hpp"

namespace gridsynth {

struct TransformerParams {
  double power_factor = 0.95;    // lambda
  double rating_kva = 630.0;     // R_T
  double target_loading = 0.5;   // L_T

  void validate() const {
    if (!(power_factor > 0.0 && power_factor <= 1.0))
      throw ConfigError("power factor must be in (0, 1]");
    if (!(target_loading > 0.0 && target_loading <= 1.0))
      throw ConfigError("target loading must be in (0, 1]");
    if (!(rating_kva > 0.0)) throw ConfigError("transformer rating must be > 0");
  }

  double usable_kw() const { return power_factor * rating_kva * target_loading; }
};

enum class StationSource { known, computed };

struct Substation {
  int id = 0;
  GeoPoint location;
  NodeId graph_node = -1;
  StationSource source = StationSource::computed;
};

/// Number of 20/0.4 kV substations needed to carry the summed peak load.
inline int transformer_count(const std::vector<LoadEstimate>& estimates,
                             const TransformerParams& params) {
  params.validate();
  double peak = 0.0;
  for (const auto& e : estimates) peak += e.peak_kw;
  if (peak <= 0.0) return 0;
  return static_cast<int>(std::ceil(peak / params.usable_kw()));
}

/// Weighted k-means over building centroids (weights nU_i), cluster centers
/// snapped to distinct road nodes.
inline std::vector<Substation> place_substations(const std::vector<Building>& buildings,
                                                 const std::vector<LoadEstimate>& estimates,
                                                 int k, const StreetGraph& graph,
                                                 std::uint64_t seed, int restarts = 10) {
  if (k < 1) throw Error("place_substations: k must be >= 1");
  if (static_cast<std::size_t>(k) > buildings.size())
    throw Error("place_substations: k exceeds building count");

  std::map<std::int64_t, double> weight;
  for (const auto& e : estimates) weight[e.building_id] = e.units;

  GeoPoint anchor = buildings.front().centroid();
  LocalFrame frame(anchor);
  std::vector<WeightedPoint> pts;
  pts.reserve(buildings.size());
  for (const auto& b : buildings) {
    auto it = weight.find(b.id);
    const double w = it == weight.end() ? 0.0 : it->second;
    const XY q = frame.to_xy(b.centroid());
    pts.push_back({q.x, q.y, w});
  }

  auto km = weighted_kmeans(pts, k, seed, restarts);

  std::vector<Substation> out;
  std::set<NodeId> taken;
  for (int c = 0; c < k; ++c) {
    const GeoPoint center = frame.to_geo({km.centers[c].first, km.centers[c].second});
    // nearest road node not already claimed by another station
    NodeId best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& [id, p] : graph.nodes()) {
      if (taken.count(id)) continue;
      bool on_road = false;
      for (std::size_t ei : graph.incident(id))
        if (graph.edges()[ei].kind == EdgeKind::road) { on_road = true; break; }
      if (!on_road) continue;
      const double d = haversine_m(center, p);
      if (d < best_d) {
        best_d = d;
        best = id;
      }
    }
    if (best < 0) throw Error("place_substations: not enough distinct road nodes");
    taken.insert(best);
    out.push_back({c, graph.node(best), best, StationSource::computed});
  }
  return out;
}

/// CSV `station_id,lat,lon`; positions snap to distinct road nodes.
inline std::vector<Substation> read_known_stations_csv(const std::string& path,
                                                       const StreetGraph& graph) {
  auto t = csv::read_file(path);
  const int ci = t.column("station_id"), cla = t.column("lat"), clo = t.column("lon");
  if (ci < 0 || cla < 0 || clo < 0)
    throw ParseError("station CSV needs columns station_id,lat,lon: " + path);
  std::vector<Substation> out;
  std::set<NodeId> taken;
  for (const auto& row : t.rows) {
    const GeoPoint p{std::stod(row.at(cla)), std::stod(row.at(clo))};
    if (!valid(p)) throw ParseError("station CSV has out-of-range coordinates: " + path);
    NodeId best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& [id, q] : graph.nodes()) {
      if (taken.count(id)) continue;
      bool on_road = false;
      for (std::size_t ei : graph.incident(id))
        if (graph.edges()[ei].kind == EdgeKind::road) { on_road = true; break; }
      if (!on_road) continue;
      const double d = haversine_m(p, q);
      if (d < best_d) {
        best_d = d;
        best = id;
      }
    }
    if (best < 0) throw Error("known stations: no road node available");
    taken.insert(best);
    out.push_back({std::stoi(row.at(ci)), graph.node(best), best, StationSource::known});
  }
  if (out.empty()) throw EmptyInputError("station CSV has no rows: " + path);
  return out;
}

struct MvRing {
  std::vector<int> station_order;             // substation ids, ring order (depot excluded)
  std::vector<std::vector<NodeId>> hop_paths; // expanded street paths, depot -> ... -> depot
  std::vector<double> hop_lengths_m;

  double total_length_m() const {
    double s = 0.0;
    for (double h : hop_lengths_m) s += h;
    return s;
  }
};

/// Route the 20 kV ring: complete shortest-path distance matrix over the
/// HV/MV node plus all stations, Christofides tour, hops expanded back to
/// street-node paths.
inline MvRing build_ring(const std::vector<Substation>& stations, NodeId hv_node,
                         const StreetGraph& graph) {
  if (stations.empty()) throw Error("build_ring: no stations");
  if (!graph.has_node(hv_node)) throw Error("build_ring: HV/MV node not in graph");

  std::vector<Substation> sorted = stations;
  std::sort(sorted.begin(), sorted.end(),
            [](const Substation& a, const Substation& b) { return a.id < b.id; });

  const int n = static_cast<int>(sorted.size()) + 1;
  std::vector<NodeId> nodes{hv_node};
  for (const auto& s : sorted) nodes.push_back(s.graph_node);

  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    auto dist = graph.distances_from(nodes[i]);
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      auto it = dist.find(nodes[j]);
      if (it == dist.end()) {
        const std::string what = i == 0 ? "HV/MV substation" : "station " + std::to_string(sorted[i - 1].id);
        const std::string other = j == 0 ? "HV/MV substation" : "station " + std::to_string(sorted[j - 1].id);
        throw NoPathError("build_ring: " + other + " unreachable from " + what);
      }
      d[i][j] = it->second;
    }
  }

  const std::vector<int> tour = christofides_tour(d);

  MvRing ring;
  for (std::size_t i = 0; i < tour.size(); ++i) {
    const int from = tour[i];
    const int to = tour[(i + 1) % tour.size()];
    auto path = graph.shortest_path(nodes[from], nodes[to]);
    ring.hop_paths.push_back(std::move(path.nodes));
    ring.hop_lengths_m.push_back(path.length_m);
    if (to != 0) ring.station_order.push_back(sorted[to - 1].id);
  }
  return ring;
}

}  // namespace gridsynth
