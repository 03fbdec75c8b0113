#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridsynth/cables.hpp"
#include "gridsynth/errors.hpp"
#include "gridsynth/estimation.hpp"
#include "gridsynth/mv_planner.hpp"
#include "gridsynth/street_graph.hpp"

namespace gridsynth {

/// Stable color per transformer id (hash into a fixed palette).
inline std::string color_for(std::int64_t id) {
  static const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::uint64_t x = static_cast<std::uint64_t>(id);
  for (int i = 0; i < 8; ++i) {
    h ^= (x >> (8 * i)) & 0xff;
    h *= 0x100000001b3ULL;
  }
  return kPalette[h % (sizeof(kPalette) / sizeof(kPalette[0]))];
}

namespace geojson {

inline nlohmann::json point(const GeoPoint& p) {
  return {{"type", "Point"}, {"coordinates", {p.lon, p.lat}}};
}

inline nlohmann::json line(const std::vector<GeoPoint>& pts) {
  nlohmann::json coords = nlohmann::json::array();
  for (const auto& p : pts) coords.push_back({p.lon, p.lat});
  return {{"type", "LineString"}, {"coordinates", coords}};
}

inline nlohmann::json polygon(const std::vector<GeoPoint>& ring) {
  nlohmann::json coords = nlohmann::json::array();
  for (const auto& p : ring) coords.push_back({p.lon, p.lat});
  if (!ring.empty()) coords.push_back({ring.front().lon, ring.front().lat});
  return {{"type", "Polygon"}, {"coordinates", {coords}}};
}

inline nlohmann::json feature(nlohmann::json geometry, nlohmann::json properties) {
  return {{"type", "Feature"}, {"geometry", std::move(geometry)},
          {"properties", std::move(properties)}};
}

inline nlohmann::json collection(nlohmann::json features) {
  return {{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

inline void write(const std::string& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write GeoJSON: " + path);
  out << doc.dump(2) << '\n';
}

}  // namespace geojson

inline nlohmann::json buildings_geojson(const std::vector<Building>& buildings,
                                        const std::vector<LoadEstimate>& estimates,
                                        const std::map<NodeId, NodeId>& root_of) {
  std::map<std::int64_t, const LoadEstimate*> est;
  for (const auto& e : estimates) est[e.building_id] = &e;
  nlohmann::json features = nlohmann::json::array();
  for (const auto& b : buildings) {
    nlohmann::json props{{"id", b.id}, {"class", to_string(b.klass)}, {"area_m2", b.area_m2}};
    if (b.levels) props["levels"] = *b.levels;
    if (b.height_m) props["height_m"] = *b.height_m;
    if (b.meters_count) props["meters"] = *b.meters_count;
    if (auto it = est.find(b.id); it != est.end()) {
      props["E_kwh"] = it->second->energy_kwh;
      props["nU"] = it->second->units;
      props["P_peak_kw"] = it->second->peak_kw;
    }
    if (auto it = root_of.find(b.building_node); it != root_of.end()) {
      props["substation_node"] = it->second;
      props["color"] = color_for(it->second);
    }
    features.push_back(geojson::feature(geojson::polygon(b.footprint), std::move(props)));
  }
  return geojson::collection(std::move(features));
}

inline nlohmann::json ring_geojson(const MvRing& ring, const StreetGraph& graph) {
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t i = 0; i < ring.hop_paths.size(); ++i) {
    std::vector<GeoPoint> pts;
    for (NodeId n : ring.hop_paths[i]) pts.push_back(graph.node(n));
    features.push_back(geojson::feature(
        geojson::line(pts),
        {{"hop", i}, {"length_m", ring.hop_lengths_m[i]}, {"layer", "mv_ring"}}));
  }
  return geojson::collection(std::move(features));
}

inline nlohmann::json lv_geojson(const std::vector<CableSegment>& segments,
                                 const StreetGraph& graph,
                                 const std::map<NodeId, NodeId>& root_of) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& s : segments) {
    const NodeId root = root_of.count(s.edge.to) ? root_of.at(s.edge.to) : -1;
    features.push_back(geojson::feature(
        geojson::line({graph.node(s.edge.from), graph.node(s.edge.to)}),
        {{"from", s.edge.from},
         {"to", s.edge.to},
         {"flow_kw", s.edge.flow_kw},
         {"length_m", s.edge.cost_m},
         {"cable", s.cable.name},
         {"substation_node", root},
         {"color", color_for(root)},
         {"layer", "lv"}}));
  }
  return geojson::collection(std::move(features));
}

inline nlohmann::json substations_geojson(const std::vector<Substation>& stations) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& s : stations)
    features.push_back(geojson::feature(
        geojson::point(s.location),
        {{"id", s.id},
         {"graph_node", s.graph_node},
         {"source", s.source == StationSource::known ? "known" : "computed"},
         {"color", color_for(s.graph_node)},
         {"layer", "substations"}}));
  return geojson::collection(std::move(features));
}

/// Debug dump of the attached street graph.
inline nlohmann::json graph_geojson(const StreetGraph& graph) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& e : graph.edges())
    features.push_back(geojson::feature(
        geojson::line({graph.node(e.a), graph.node(e.b)}),
        {{"a", e.a},
         {"b", e.b},
         {"length_m", e.length_m},
         {"kind", e.kind == EdgeKind::road ? "road" : "service"},
         {"footpath", e.footpath}}));
  return geojson::collection(std::move(features));
}

}  // namespace gridsynth
