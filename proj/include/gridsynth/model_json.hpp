#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridsynth/cables.hpp"
#include "gridsynth/errors.hpp"
#include "gridsynth/estimation.hpp"
#include "gridsynth/mv_planner.hpp"
#include "gridsynth/powerflow.hpp"
#include "gridsynth/street_graph.hpp"

namespace gridsynth {

inline constexpr int kModelSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

struct BBox {
  double min_lat = 0.0, min_lon = 0.0, max_lat = 0.0, max_lon = 0.0;

  static BBox of(const std::vector<Building>& buildings) {
    BBox b{90.0, 180.0, -90.0, -180.0};
    for (const auto& bu : buildings)
      for (const auto& p : bu.footprint) {
        b.min_lat = std::min(b.min_lat, p.lat);
        b.min_lon = std::min(b.min_lon, p.lon);
        b.max_lat = std::max(b.max_lat, p.lat);
        b.max_lon = std::max(b.max_lon, p.lon);
      }
    return b;
  }

  double width_m() const { return haversine_m({min_lat, min_lon}, {min_lat, max_lon}); }
  double height_m() const { return haversine_m({min_lat, min_lon}, {max_lat, min_lon}); }
};

/// Full generated model: everything compare() and the exports need.
struct GridModel {
  std::string config_hash;
  std::uint64_t seed = 0;
  Variant data_source = Variant::O2D;
  bool known_transformers = false;
  BBox bbox;

  std::vector<Building> buildings;
  std::vector<LoadEstimate> estimates;
  std::vector<Substation> substations;
  MvRing ring;
  LvSolution lv;
  std::vector<CableSegment> segments;
  std::map<NodeId, GeoPoint> node_positions;  // nodes referenced by ring/lv

  // peak-snapshot power flow results
  std::map<NodeId, double> v_pu;
  std::vector<std::tuple<NodeId, NodeId, double>> loading_pct;
};

inline nlohmann::json to_json(const GridModel& m) {
  nlohmann::json doc;
  doc["schema_version"] = kModelSchemaVersion;
  doc["provenance"] = {{"config_hash", m.config_hash},
                       {"seed", m.seed},
                       {"tool", std::string("gridsynth ") + kToolVersion}};
  doc["variant"] = {{"data_source", to_string(m.data_source)},
                    {"transformer_mode", m.known_transformers ? "T_K" : "T_C"}};
  doc["bbox"] = {{"min_lat", m.bbox.min_lat},
                 {"min_lon", m.bbox.min_lon},
                 {"max_lat", m.bbox.max_lat},
                 {"max_lon", m.bbox.max_lon}};

  std::map<std::int64_t, const LoadEstimate*> est;
  for (const auto& e : m.estimates) est[e.building_id] = &e;
  doc["buildings"] = nlohmann::json::array();
  for (const auto& b : m.buildings) {
    nlohmann::json jb{{"id", b.id},
                      {"class", to_string(b.klass)},
                      {"area_m2", b.area_m2},
                      {"connection_node", b.connection_node},
                      {"building_node", b.building_node}};
    nlohmann::json fp = nlohmann::json::array();
    for (const auto& p : b.footprint) fp.push_back({{"lat", p.lat}, {"lon", p.lon}});
    jb["footprint"] = std::move(fp);
    if (b.levels) jb["levels"] = *b.levels;
    if (b.height_m) jb["height_m"] = *b.height_m;
    if (b.meters_count) jb["meters"] = *b.meters_count;
    if (auto it = est.find(b.id); it != est.end())
      jb["estimate"] = {{"E_kwh", it->second->energy_kwh},
                        {"nU", it->second->units},
                        {"P_peak_kw", it->second->peak_kw}};
    doc["buildings"].push_back(std::move(jb));
  }

  doc["substations"] = nlohmann::json::array();
  for (const auto& s : m.substations)
    doc["substations"].push_back(
        {{"id", s.id},
         {"lat", s.location.lat},
         {"lon", s.location.lon},
         {"graph_node", s.graph_node},
         {"source", s.source == StationSource::known ? "known" : "computed"}});

  doc["ring"] = {{"station_order", m.ring.station_order},
                 {"total_length_m", m.ring.total_length_m()}};
  doc["ring"]["hops"] = nlohmann::json::array();
  for (std::size_t i = 0; i < m.ring.hop_paths.size(); ++i)
    doc["ring"]["hops"].push_back(
        {{"path", m.ring.hop_paths[i]}, {"length_m", m.ring.hop_lengths_m[i]}});

  doc["lv"] = {{"objective_m", m.lv.objective_m},
               {"achieved_cap_kw", m.lv.achieved_cap_kw},
               {"iterations", m.lv.iterations}};
  doc["lv"]["segments"] = nlohmann::json::array();
  for (const auto& s : m.segments)
    doc["lv"]["segments"].push_back({{"from", s.edge.from},
                                     {"to", s.edge.to},
                                     {"flow_kw", s.edge.flow_kw},
                                     {"length_m", s.edge.cost_m},
                                     {"kind", s.edge.kind == EdgeKind::road ? "road" : "service"},
                                     {"cable", s.cable.name},
                                     {"current_a", s.current_a}});
  doc["lv"]["root_of"] = nlohmann::json::object();
  for (const auto& [node, root] : m.lv.root_of)
    doc["lv"]["root_of"][std::to_string(node)] = root;

  doc["nodes"] = nlohmann::json::object();
  for (const auto& [id, p] : m.node_positions)
    doc["nodes"][std::to_string(id)] = {{"lat", p.lat}, {"lon", p.lon}};

  doc["results"] = nlohmann::json::object();
  doc["results"]["v_pu"] = nlohmann::json::object();
  for (const auto& [bus, v] : m.v_pu) doc["results"]["v_pu"][std::to_string(bus)] = v;
  doc["results"]["loading_pct"] = nlohmann::json::array();
  for (const auto& [from, to, pct] : m.loading_pct)
    doc["results"]["loading_pct"].push_back({{"from", from}, {"to", to}, {"pct", pct}});
  return doc;
}

inline void write_model_json(const std::string& path, const GridModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model JSON: " + path);
  out << to_json(m).dump(2) << '\n';
}

inline GridModel read_model_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model JSON: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("model JSON parse error at byte " + std::to_string(e.byte) + ": " + e.what(),
                     static_cast<long long>(e.byte));
  }
  if (doc.value("schema_version", 0) != kModelSchemaVersion)
    throw ParseError("unsupported model schema_version in " + path);

  GridModel m;
  m.config_hash = doc["provenance"].value("config_hash", "");
  m.seed = doc["provenance"].value("seed", 0ULL);
  m.data_source = variant_from_string(doc["variant"].value("data_source", "O2D"));
  m.known_transformers = doc["variant"].value("transformer_mode", "T_C") == std::string("T_K");
  m.bbox = {doc["bbox"]["min_lat"], doc["bbox"]["min_lon"], doc["bbox"]["max_lat"],
            doc["bbox"]["max_lon"]};

  for (const auto& jb : doc["buildings"]) {
    Building b;
    b.id = jb.at("id").get<std::int64_t>();
    b.area_m2 = jb.at("area_m2").get<double>();
    for (const auto& p : jb.at("footprint"))
      b.footprint.push_back({p.at("lat").get<double>(), p.at("lon").get<double>()});
    b.connection_node = jb.value("connection_node", -1LL);
    b.building_node = jb.value("building_node", -1LL);
    const std::string k = jb.value("class", "residential");
    b.klass = k == "school"         ? BuildingClass::school
              : k == "kindergarten" ? BuildingClass::kindergarten
              : k == "community"    ? BuildingClass::community
              : k == "other-nonresidential" ? BuildingClass::other_nonresidential
                                            : BuildingClass::residential;
    if (jb.contains("levels")) b.levels = jb["levels"].get<int>();
    if (jb.contains("height_m")) b.height_m = jb["height_m"].get<double>();
    if (jb.contains("meters")) b.meters_count = jb["meters"].get<int>();
    if (jb.contains("estimate")) {
      LoadEstimate e;
      e.building_id = b.id;
      e.energy_kwh = jb["estimate"]["E_kwh"].get<double>();
      e.units = jb["estimate"]["nU"].get<double>();
      e.peak_kw = jb["estimate"]["P_peak_kw"].get<double>();
      e.variant = m.data_source;
      m.estimates.push_back(e);
    }
    m.buildings.push_back(std::move(b));
  }

  for (const auto& js : doc["substations"]) {
    Substation s;
    s.id = js.at("id").get<int>();
    s.location = {js.at("lat").get<double>(), js.at("lon").get<double>()};
    s.graph_node = js.at("graph_node").get<NodeId>();
    s.source = js.value("source", "computed") == std::string("known") ? StationSource::known
                                                                      : StationSource::computed;
    m.substations.push_back(s);
  }

  m.ring.station_order = doc["ring"]["station_order"].get<std::vector<int>>();
  for (const auto& jh : doc["ring"]["hops"]) {
    m.ring.hop_paths.push_back(jh.at("path").get<std::vector<NodeId>>());
    m.ring.hop_lengths_m.push_back(jh.at("length_m").get<double>());
  }

  m.lv.objective_m = doc["lv"].value("objective_m", 0.0);
  m.lv.achieved_cap_kw = doc["lv"].value("achieved_cap_kw", 0);
  m.lv.iterations = doc["lv"].value("iterations", 0);
  for (const auto& js : doc["lv"]["segments"]) {
    CableSegment seg;
    seg.edge.from = js.at("from").get<NodeId>();
    seg.edge.to = js.at("to").get<NodeId>();
    seg.edge.flow_kw = js.at("flow_kw").get<double>();
    seg.edge.cost_m = js.at("length_m").get<double>();
    seg.edge.kind = js.value("kind", "road") == std::string("service") ? EdgeKind::service
                                                                       : EdgeKind::road;
    seg.cable.name = js.value("cable", "");
    seg.current_a = js.value("current_a", 0.0);
    m.segments.push_back(seg);
    m.lv.edges.push_back(seg.edge);
  }
  for (const auto& [key, val] : doc["lv"]["root_of"].items())
    m.lv.root_of[std::stoll(key)] = val.get<NodeId>();

  for (const auto& [key, val] : doc["nodes"].items())
    m.node_positions[std::stoll(key)] = {val.at("lat").get<double>(),
                                         val.at("lon").get<double>()};

  for (const auto& [key, val] : doc["results"]["v_pu"].items())
    m.v_pu[std::stoll(key)] = val.get<double>();
  for (const auto& jl : doc["results"]["loading_pct"])
    m.loading_pct.push_back({jl.at("from").get<NodeId>(), jl.at("to").get<NodeId>(),
                             jl.at("pct").get<double>()});
  return m;
}

}  // namespace gridsynth
