#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridsynth/csv.hpp"
#include "gridsynth/errors.hpp"
#include "gridsynth/street_graph.hpp"

namespace gridsynth {

struct ParseResult {
  StreetGraph graph;
  std::vector<Building> buildings;
  std::vector<std::string> warnings;
};

namespace detail {

// building=* values that exclude the residential default
inline bool nonresidential_building_tag(const std::string& v) {
  static const std::set<std::string> kNonRes = {
      "industrial", "commercial", "retail", "warehouse", "office",  "garage",
      "garages",    "shed",       "church", "chapel",    "service", "barn",
      "farm_auxiliary"};
  return kNonRes.count(v) > 0;
}

inline BuildingClass classify(const nlohmann::json& tags) {
  if (tags.contains("amenity")) {
    const std::string a = tags.at("amenity").get<std::string>();
    if (a == "school") return BuildingClass::school;
    if (a == "kindergarten") return BuildingClass::kindergarten;
    if (a == "community_centre") return BuildingClass::community;
  }
  const std::string b = tags.at("building").get<std::string>();
  if (nonresidential_building_tag(b)) return BuildingClass::other_nonresidential;
  return BuildingClass::residential;
}

}  // namespace detail

/// Parse an Overpass-API-style JSON document: highway ways become street
/// polylines, building ways become footprints. Components disconnected from
/// the largest street component are dropped with a warning per way.
inline ParseResult parse_overpass(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("overpass JSON parse error at byte " + std::to_string(e.byte) + ": " +
                         e.what(),
                     static_cast<long long>(e.byte));
  }
  if (!doc.contains("elements") || !doc["elements"].is_array())
    throw ParseError("overpass document has no elements array");

  std::map<NodeId, GeoPoint> osm_nodes;
  struct Way {
    std::int64_t id;
    std::vector<NodeId> refs;
    nlohmann::json tags;
  };
  std::vector<Way> highways, building_ways;
  GeoPoint hv_pos{};
  bool have_hv = false;

  for (const auto& el : doc["elements"]) {
    const std::string type = el.value("type", "");
    if (type == "node") {
      const NodeId id = el.at("id").get<NodeId>();
      osm_nodes[id] = {el.at("lat").get<double>(), el.at("lon").get<double>()};
      if (el.contains("tags") && el["tags"].value("power", "") == "substation" && !have_hv) {
        hv_pos = osm_nodes[id];
        have_hv = true;
      }
    } else if (type == "way") {
      if (!el.contains("tags")) continue;
      const auto& tags = el["tags"];
      Way w{el.at("id").get<std::int64_t>(), {}, tags};
      for (const auto& r : el.at("nodes")) w.refs.push_back(r.get<NodeId>());
      if (tags.contains("highway"))
        highways.push_back(std::move(w));
      else if (tags.contains("building"))
        building_ways.push_back(std::move(w));
    }
  }

  if (highways.empty()) throw EmptyInputError("document contains no streets");
  if (building_ways.empty()) throw EmptyInputError("document contains no buildings");

  ParseResult out;

  std::map<std::size_t, std::int64_t> edge_way;  // edge idx -> way id
  for (const auto& w : highways) {
    const std::string hv = w.tags.value("highway", "");
    const bool foot = hv == "footway" || hv == "path";
    for (std::size_t i = 0; i + 1 < w.refs.size(); ++i) {
      const NodeId a = w.refs[i];
      const NodeId b = w.refs[i + 1];
      if (!osm_nodes.count(a) || !osm_nodes.count(b))
        throw ParseError("way " + std::to_string(w.id) + " references missing node");
      if (a == b) continue;
      if (!out.graph.has_node(a)) out.graph.add_node(a, osm_nodes[a]);
      if (!out.graph.has_node(b)) out.graph.add_node(b, osm_nodes[b]);
      const double len = haversine_m(osm_nodes[a], osm_nodes[b]);
      if (len <= 0.0) continue;
      const std::size_t ei = out.graph.add_edge({a, b, len, EdgeKind::road, w.id, foot});
      edge_way[ei] = w.id;
    }
  }

  // keep the dominant street component, report dropped way ids
  auto comps = out.graph.components();
  if (comps.size() > 1) {
    std::set<NodeId> keep(comps[0].begin(), comps[0].end());
    StreetGraph pruned;
    for (NodeId n : comps[0]) pruned.add_node(n, out.graph.node(n));
    std::set<std::int64_t> dropped_ways;
    for (std::size_t ei = 0; ei < out.graph.edges().size(); ++ei) {
      const StreetEdge& e = out.graph.edges()[ei];
      if (keep.count(e.a) && keep.count(e.b))
        pruned.add_edge(e);
      else
        dropped_ways.insert(edge_way.count(ei) ? edge_way[ei] : e.way_id);
    }
    for (std::int64_t wid : dropped_ways) {
      out.warnings.push_back("dropped disconnected way " + std::to_string(wid));
      log::warn(out.warnings.back());
    }
    out.graph = std::move(pruned);
  }

  for (const auto& w : building_ways) {
    Building b;
    b.id = w.id;
    std::vector<NodeId> refs = w.refs;
    if (refs.size() >= 2 && refs.front() == refs.back()) refs.pop_back();
    if (refs.size() < 3) {
      out.warnings.push_back("building " + std::to_string(w.id) + " has a degenerate footprint");
      log::warn(out.warnings.back());
      continue;
    }
    for (NodeId r : refs) {
      if (!osm_nodes.count(r))
        throw ParseError("building " + std::to_string(w.id) + " references missing node");
      b.footprint.push_back(osm_nodes[r]);
    }
    b.area_m2 = polygon_area_m2(b.footprint);
    if (!(b.area_m2 > 0.0)) {
      out.warnings.push_back("building " + std::to_string(w.id) + " has zero area, skipped");
      log::warn(out.warnings.back());
      continue;
    }
    b.klass = detail::classify(w.tags);
    if (w.tags.contains("building:levels")) {
      try {
        b.levels = std::stoi(w.tags.at("building:levels").get<std::string>());
      } catch (...) {
        out.warnings.push_back("building " + std::to_string(w.id) +
                               " has an unreadable building:levels tag");
      }
    }
    if (w.tags.contains("height")) {
      try {
        const double h = std::stod(w.tags.at("height").get<std::string>());
        if (h > 0) b.height_m = h;
      } catch (...) {
      }
    }
    out.buildings.push_back(std::move(b));
  }
  if (out.buildings.empty()) throw EmptyInputError("document contains no usable buildings");

  if (have_hv) out.graph.set_substation_node(out.graph.nearest_road_node(hv_pos));
  return out;
}

inline ParseResult parse_overpass_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open overpass file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_overpass(text);
}

struct TableLoadReport {
  int applied = 0;
  std::vector<std::string> rejected;  // per-record messages
};

/// Populate height_m where the table has a positive entry for the id.
inline TableLoadReport load_heights(std::vector<Building>& buildings,
                                    const std::map<std::int64_t, double>& table) {
  TableLoadReport rep;
  for (auto& b : buildings) {
    auto it = table.find(b.id);
    if (it == table.end()) continue;
    if (!(it->second > 0.0)) {
      rep.rejected.push_back("building " + std::to_string(b.id) + ": non-positive height " +
                             std::to_string(it->second));
      continue;
    }
    b.height_m = it->second;
    ++rep.applied;
  }
  for (const auto& r : rep.rejected) log::warn("load_heights: " + r);
  return rep;
}

/// Populate meters_count where the table has an entry >= 1 for the id.
inline TableLoadReport load_meters(std::vector<Building>& buildings,
                                   const std::map<std::int64_t, int>& table) {
  TableLoadReport rep;
  for (auto& b : buildings) {
    auto it = table.find(b.id);
    if (it == table.end()) continue;
    if (it->second < 1) {
      rep.rejected.push_back("building " + std::to_string(b.id) + ": invalid meter count " +
                             std::to_string(it->second));
      continue;
    }
    b.meters_count = it->second;
    ++rep.applied;
  }
  for (const auto& r : rep.rejected) log::warn("load_meters: " + r);
  return rep;
}

/// CSV `id,height_m`
inline std::map<std::int64_t, double> read_height_csv(const std::string& path) {
  auto t = csv::read_file(path);
  const int ci = t.column("id"), ch = t.column("height_m");
  if (ci < 0 || ch < 0) throw ParseError("height CSV needs columns id,height_m: " + path);
  std::map<std::int64_t, double> out;
  for (const auto& row : t.rows)
    out[std::stoll(row.at(ci))] = std::stod(row.at(ch));
  return out;
}

/// CSV `id,meter_count`
inline std::map<std::int64_t, int> read_meter_csv(const std::string& path) {
  auto t = csv::read_file(path);
  const int ci = t.column("id"), cm = t.column("meter_count");
  if (ci < 0 || cm < 0) throw ParseError("meter CSV needs columns id,meter_count: " + path);
  std::map<std::int64_t, int> out;
  for (const auto& row : t.rows)
    out[std::stoll(row.at(ci))] = std::stoi(row.at(cm));
  return out;
}

}  // namespace gridsynth
