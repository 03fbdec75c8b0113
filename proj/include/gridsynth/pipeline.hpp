#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridsynth/cables.hpp"
#include "gridsynth/cce.hpp"
#include "gridsynth/errors.hpp"
#include "gridsynth/estimation.hpp"
#include "gridsynth/fixtures.hpp"
#include "gridsynth/geojson.hpp"
#include "gridsynth/h0_profile.hpp"
#include "gridsynth/metrics.hpp"
#include "gridsynth/milp.hpp"
#include "gridsynth/model_json.hpp"
#include "gridsynth/overpass.hpp"
#include "gridsynth/powerflow.hpp"

namespace gridsynth {

struct RunConfig {
  // inputs
  std::string overpass_path;
  std::string heights_path;
  std::string meters_path;
  std::string stations_path;
  std::string h0_path;          // empty -> built-in profile
  std::string catalog_path;     // empty -> default catalog

  // variant
  Variant data_source = Variant::O2D;
  bool known_transformers = false;  // T_K when true, else T_C

  // parameters
  EstimationParams estimation;
  TransformerParams transformer;
  std::uint64_t seed = 1;
  int kmeans_restarts = 10;
  int cap0_kw = 0;  // 0 = ceil(total demand)
  int cce_n = 4;
  std::string cce_method = "ip";  // ip | nb
  double milp_time_limit_s = 300.0;
  double max_service_length_m = 100.0;
  bool include_footpaths = true;
  double hv_lat = 0.0, hv_lon = 0.0;  // optional override of the tagged feed point
  bool benchmark_ab = false;          // additionally run the other CCE and report both

  // quasi-dynamic evaluation (one day at 15-min steps) when day is set
  std::string quasi_day;  // "YYYY-MM-DD"
  int profile_year = 2023;

  // outputs
  std::string out_dir = "out";
  bool debug_geojson = false;

  void validate() const {
    if (overpass_path.empty()) throw ConfigError("config: overpass input path is required");
    if (data_source == Variant::EM && meters_path.empty())
      throw ConfigError("config: the EM variant requires a meter CSV");
    if (known_transformers && stations_path.empty())
      throw ConfigError("config: T_K mode requires a known-stations CSV");
    if (cce_method != "ip" && cce_method != "nb")
      throw ConfigError("config: cce_method must be ip or nb");
    if (cap0_kw < 0) throw ConfigError("config: cap0 must be >= 0");
    estimation.validate();
    transformer.validate();
  }

  /// FNV-1a over the canonical key=value serialization.
  std::string hash() const {
    auto canon = canonical();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canon) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  std::string canonical() const {
    std::string s;
    auto kv = [&](const std::string& k, const std::string& v) { s += k + "=" + v + "\n"; };
    kv("overpass", overpass_path);
    kv("heights", heights_path);
    kv("meters", meters_path);
    kv("stations", stations_path);
    kv("h0", h0_path);
    kv("catalog", catalog_path);
    kv("data_source", to_string(data_source));
    kv("transformer_mode", known_transformers ? "T_K" : "T_C");
    kv("seed", std::to_string(seed));
    kv("kmeans_restarts", std::to_string(kmeans_restarts));
    kv("cap0", std::to_string(cap0_kw));
    kv("cce_n", std::to_string(cce_n));
    kv("cce_method", cce_method);
    kv("max_service_length_m", std::to_string(max_service_length_m));
    kv("include_footpaths", include_footpaths ? "1" : "0");
    kv("units2d_mode",
       estimation.units2d_mode == Units2dMode::literal ? "literal" : "floor-scaled");
    kv("s_u", std::to_string(estimation.stories_factor));
    kv("lambda", std::to_string(transformer.power_factor));
    kv("rating", std::to_string(transformer.rating_kva));
    kv("loading", std::to_string(transformer.target_loading));
    kv("quasi_day", quasi_day);
    kv("profile_year", std::to_string(profile_year));
    return s;
  }
};

struct RunOutputs {
  GridModel model;
  StageTimes times;
  CceStats cce;
  std::optional<StageTimes> times_b;  // benchmark_ab: the other CCE method
  std::optional<CceStats> cce_b;
  std::vector<std::string> warnings;
};

namespace pipeline_detail {

class Timer {
 public:
  void start() { t0_ = std::chrono::steady_clock::now(); }
  double stop() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

inline std::vector<Building> supplied_buildings(const std::vector<Building>& all,
                                                const std::vector<LoadEstimate>& estimates) {
  std::set<std::int64_t> ids;
  for (const auto& e : estimates)
    if (e.peak_kw > 0.0) ids.insert(e.building_id);
  std::vector<Building> out;
  for (const auto& b : all)
    if (ids.count(b.id)) out.push_back(b);
  return out;
}

inline RadialNetwork tree_network(const GridModel& m, NodeId root,
                                  const std::map<NodeId, double>& peak_by_node,
                                  double power_factor) {
  RadialNetwork net;
  net.slack = root;
  net.power_factor = power_factor;
  for (const auto& s : m.segments) {
    if (m.lv.root_of.count(s.edge.to) == 0 || m.lv.root_of.at(s.edge.to) != root) continue;
    RadialBranch b;
    b.from = s.edge.from;
    b.to = s.edge.to;
    b.r_ohm = std::max(s.cable.r_ohm_per_km * s.edge.cost_m / 1000.0, 1e-9);
    b.x_ohm = std::max(s.cable.x_ohm_per_km * s.edge.cost_m / 1000.0, 0.0);
    b.ampacity_a = s.cable.ampacity_a;
    net.branches.push_back(b);
    if (auto it = peak_by_node.find(s.edge.to); it != peak_by_node.end())
      net.load_kw[s.edge.to] = it->second;
  }
  return net;
}

}  // namespace pipeline_detail

/// End-to-end run: ingest -> estimate -> stage 1 (ring) -> stage 2 (radial
/// LV) -> power flow -> metrics -> export. Deterministic for a fixed config
/// and seed.
inline RunOutputs run(const RunConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  pipeline_detail::Timer timer;
  RunOutputs out;

  // --- data ingestion ---
  timer.start();
  ParseResult parsed = parse_overpass_file(cfg.overpass_path);
  out.warnings = parsed.warnings;
  if (!cfg.heights_path.empty()) load_heights(parsed.buildings, read_height_csv(cfg.heights_path));
  if (!cfg.meters_path.empty()) load_meters(parsed.buildings, read_meter_csv(cfg.meters_path));
  StreetGraph graph = attach_buildings(parsed.graph, parsed.buildings, cfg.max_service_length_m);
  if (cfg.hv_lat != 0.0 || cfg.hv_lon != 0.0)
    graph.set_substation_node(graph.nearest_road_node({cfg.hv_lat, cfg.hv_lon}));
  if (graph.substation_node() < 0)
    throw ConfigError("no HV/MV substation: tag one with power=substation or set hv_lat/hv_lon");
  out.times.ingestion_s = timer.stop();

  // --- load estimation + stage 1 ---
  timer.start();
  EstimationReport est = estimate_all(cfg.estimation, parsed.buildings, cfg.data_source);

  std::vector<Substation> stations;
  if (cfg.known_transformers) {
    stations = read_known_stations_csv(cfg.stations_path, graph);
  } else {
    const int n_t = transformer_count(est.estimates, cfg.transformer);
    if (n_t < 1) throw SolveError("estimated demand is zero; nothing to plan");
    stations = place_substations(parsed.buildings, est.estimates,
                                 std::min<std::size_t>(n_t, parsed.buildings.size()), graph,
                                 cfg.seed, cfg.kmeans_restarts);
  }
  MvRing ring = build_ring(stations, graph.substation_node(), graph);
  out.times.mv_s = timer.stop();

  // --- stage 2 ---
  timer.start();
  FlowInstance instance =
      build_instance(graph, parsed.buildings, est.estimates, stations, cfg.include_footpaths);
  const int cap0 = cfg.cap0_kw > 0
                       ? cfg.cap0_kw
                       : static_cast<int>(std::ceil(instance.total_demand_kw())) + 1;
  MilpOptions mopt;
  mopt.time_limit_s = cfg.milp_time_limit_s;

  CceResult cce = cfg.cce_method == "nb" ? nb_cce(instance, cap0, 1, mopt)
                                         : ip_cce(instance, cap0, cfg.cce_n, mopt);
  out.cce = cce.stats;
  out.times.lv_s = timer.stop();
  out.times.milp_s = cce.stats.milp_wall_s;

  if (cfg.benchmark_ab) {
    pipeline_detail::Timer t2;
    t2.start();
    CceResult other = cfg.cce_method == "nb" ? ip_cce(instance, cap0, cfg.cce_n, mopt)
                                             : nb_cce(instance, cap0, 1, mopt);
    StageTimes tb = out.times;
    tb.lv_s = t2.stop();
    tb.milp_s = other.stats.milp_wall_s;
    out.times_b = tb;
    out.cce_b = other.stats;
  }

  // --- evaluation + export ---
  timer.start();
  const CableCatalog catalog =
      cfg.catalog_path.empty() ? default_catalog() : read_catalog_json(cfg.catalog_path);

  GridModel model;
  model.config_hash = cfg.hash();
  model.seed = cfg.seed;
  model.data_source = cfg.data_source;
  model.known_transformers = cfg.known_transformers;
  model.buildings = parsed.buildings;
  model.estimates = est.estimates;
  model.substations = stations;
  model.ring = ring;
  model.lv = cce.solution;
  model.segments = assign_cables(cce.solution, catalog, cfg.transformer.power_factor);
  model.bbox = BBox::of(parsed.buildings);
  for (const auto& hop : ring.hop_paths)
    for (NodeId nid : hop) model.node_positions[nid] = graph.node(nid);
  for (const auto& e : cce.solution.edges) {
    model.node_positions[e.from] = graph.node(e.from);
    model.node_positions[e.to] = graph.node(e.to);
  }

  // peak-snapshot power flow per substation tree
  std::map<NodeId, double> peak_by_node;
  {
    std::map<std::int64_t, double> peak;
    for (const auto& e : est.estimates) peak[e.building_id] = e.peak_kw;
    for (const auto& b : parsed.buildings)
      if (auto it = peak.find(b.id); it != peak.end() && b.building_node >= 0)
        peak_by_node[b.building_node] += it->second;
  }
  H0Profile profile = cfg.h0_path.empty() ? builtin_h0() : read_h0_csv(cfg.h0_path);
  for (const auto& s : stations) {
    RadialNetwork net =
        pipeline_detail::tree_network(model, s.graph_node, peak_by_node,
                                      cfg.transformer.power_factor);
    if (net.branches.empty()) continue;
    FlowResult fr = solve_radial(net);
    for (const auto& [bus, v] : fr.v_pu) model.v_pu[bus] = v;
    for (const auto& [branch, pct] : fr.loading_pct)
      model.loading_pct.push_back({branch.first, branch.second, pct});
  }
  std::sort(model.loading_pct.begin(), model.loading_pct.end());

  write_model_json(cfg.out_dir + "/model.json", model);
  geojson::write(cfg.out_dir + "/buildings.geojson",
                 buildings_geojson(model.buildings, model.estimates, model.lv.root_of));
  geojson::write(cfg.out_dir + "/ring.geojson", ring_geojson(ring, graph));
  geojson::write(cfg.out_dir + "/lv.geojson",
                 lv_geojson(model.segments, graph, model.lv.root_of));
  geojson::write(cfg.out_dir + "/substations.geojson", substations_geojson(stations));
  if (cfg.debug_geojson)
    geojson::write(cfg.out_dir + "/graph_debug.geojson", graph_geojson(graph));
  write_estimation_csv(cfg.out_dir + "/estimates.csv", est.estimates);

  // metrics tables
  {
    auto supplied = pipeline_detail::supplied_buildings(parsed.buildings, est.estimates);
    auto counts = nodes_per_transformer(model.lv, supplied, stations);
    csv::Writer w(cfg.out_dir + "/nodes_per_transformer.csv");
    w.row({"substation_node", "node_count"});
    for (const auto& [node, count] : counts.per_substation)
      w.row({std::to_string(node), std::to_string(count)});
  }
  {
    csv::Writer w(cfg.out_dir + "/eccentricity.csv");
    w.row({"substation_node", "eccentricity_m"});
    for (const auto& s : stations)
      w.row({std::to_string(s.graph_node), std::to_string(eccentricity(model.lv, s.graph_node))});
  }
  {
    csv::Writer w(cfg.out_dir + "/loadings.csv");
    w.row({"from", "to", "loading_pct"});
    for (const auto& [from, to, pct] : model.loading_pct)
      w.row({std::to_string(from), std::to_string(to), std::to_string(pct)});
  }
  {
    csv::Writer w(cfg.out_dir + "/voltages.csv");
    w.row({"bus", "v_pu"});
    for (const auto& [bus, v] : model.v_pu) w.row({std::to_string(bus), std::to_string(v)});
  }

  // optional one-day quasi-dynamic evaluation
  if (!cfg.quasi_day.empty()) {
    int y, mo, d;
    if (std::sscanf(cfg.quasi_day.c_str(), "%d-%d-%d", &y, &mo, &d) != 3)
      throw ConfigError("quasi_day must be YYYY-MM-DD");
    const SeasonConfig seasons;
    const Season season = seasons.classify(mo, d);
    const DayType dt = day_type(std::chrono::year_month_day{
        std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
        std::chrono::day{static_cast<unsigned>(d)}});
    std::map<std::int64_t, double> energy;
    for (const auto& e : est.estimates) energy[e.building_id] = e.energy_kwh;
    std::map<NodeId, std::vector<double>> series;
    for (const auto& b : parsed.buildings) {
      auto it = energy.find(b.id);
      if (it == energy.end() || b.building_node < 0) continue;
      std::vector<double> day(H0Profile::kSlots);
      for (int slot = 0; slot < H0Profile::kSlots; ++slot)
        day[slot] = profile.at(season, dt, slot) * it->second;
      series[b.building_node] = std::move(day);
    }
    std::vector<std::size_t> steps(H0Profile::kSlots);
    for (std::size_t i = 0; i < steps.size(); ++i) steps[i] = i;
    csv::Writer w(cfg.out_dir + "/quasi_dynamic.csv");
    w.row({"substation_node", "slot", "branch_from", "branch_to", "loading_pct"});
    for (const auto& s : stations) {
      RadialNetwork net = pipeline_detail::tree_network(model, s.graph_node, peak_by_node,
                                                        cfg.transformer.power_factor);
      if (net.branches.empty()) continue;
      auto qd = quasi_dynamic(net, series, steps);
      for (std::size_t t = 0; t < qd.steps.size(); ++t)
        for (const auto& [branch, pct] : qd.steps[t].loading_pct)
          w.row({std::to_string(s.graph_node), std::to_string(t),
                 std::to_string(branch.first), std::to_string(branch.second),
                 std::to_string(pct)});
    }
  }

  out.times.export_s = timer.stop();

  if (out.times_b) {
    write_runtime_csv(cfg.out_dir + "/runtime.csv", out.times,
                      cfg.cce_method == "nb" ? "nb" : "ip", &*out.times_b,
                      cfg.cce_method == "nb" ? "ip" : "nb");
  } else {
    write_runtime_csv(cfg.out_dir + "/runtime.csv", out.times,
                      cfg.cce_method == "nb" ? "nb" : "ip");
  }

  nlohmann::json report{{"config_hash", model.config_hash},
                        {"warnings", out.warnings},
                        {"substations", stations.size()},
                        {"ring_length_m", ring.total_length_m()},
                        {"lv_objective_m", model.lv.objective_m},
                        {"achieved_cap_kw", model.lv.achieved_cap_kw},
                        {"cce_iterations", out.cce.iterations},
                        {"milp_solves", out.cce.milp_solves},
                        {"total_peak_kw", est.total_peak_kw},
                        {"o3d_height_fallbacks", est.o3d_height_fallbacks},
                        {"excluded_buildings", est.excluded}};
  std::ofstream rep(cfg.out_dir + "/report.json");
  rep << report.dump(2) << '\n';

  out.model = std::move(model);
  return out;
}

/// Cross-model comparison: per-model tables, a pairwise similarity matrix of
/// the loading histograms and, with a reference, station distance tables.
struct CompareReport {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> similarity;  // square matrix
  std::map<std::string, std::vector<StationDistance>> distances_vs_ref;
};

inline CompareReport compare(const std::vector<std::string>& model_paths,
                             const std::string& reference_path, const std::string& out_dir,
                             bool normalized_histograms = false) {
  namespace fs = std::filesystem;
  if (model_paths.size() + (reference_path.empty() ? 0 : 1) < 2)
    throw ConfigError("compare needs at least two models");
  fs::create_directories(out_dir);

  std::vector<GridModel> models;
  std::vector<std::string> labels;
  if (!reference_path.empty()) {
    models.push_back(read_model_json(reference_path));
    labels.push_back("ref:" + fs::path(reference_path).parent_path().filename().string());
  }
  for (const auto& p : model_paths) {
    models.push_back(read_model_json(p));
    labels.push_back(fs::path(p).parent_path().filename().string());
  }

  // area compatibility: bounding boxes within 10 %
  for (std::size_t i = 1; i < models.size(); ++i) {
    const auto& a = models[0].bbox;
    const auto& b = models[i].bbox;
    const double wa = a.width_m(), wb = b.width_m(), ha = a.height_m(), hb = b.height_m();
    if (wa <= 0 || wb <= 0 || ha <= 0 || hb <= 0 || std::abs(wa - wb) / std::max(wa, wb) > 0.10 ||
        std::abs(ha - hb) / std::max(ha, hb) > 0.10)
      throw Error("compare: model areas disagree by more than 10% (" + labels[0] + " vs " +
                  labels[i] + ")");
  }

  CompareReport rep;
  rep.labels = labels;

  std::vector<LoadingHistogram> hists;
  for (const auto& m : models) {
    std::vector<double> loadings;
    for (const auto& [from, to, pct] : m.loading_pct) loadings.push_back(pct);
    hists.push_back(loading_histogram(loadings, 1.0, normalized_histograms));
  }
  rep.similarity.assign(models.size(), std::vector<double>(models.size(), 0.0));
  for (std::size_t i = 0; i < models.size(); ++i)
    for (std::size_t j = 0; j < models.size(); ++j)
      rep.similarity[i][j] = similarity_index(hists[i], hists[j]);

  {
    csv::Writer w(out_dir + "/similarity_matrix.csv");
    std::vector<std::string> head{"model"};
    for (const auto& l : labels) head.push_back(l);
    w.row(head);
    for (std::size_t i = 0; i < models.size(); ++i) {
      std::vector<std::string> row{labels[i]};
      for (std::size_t j = 0; j < models.size(); ++j)
        row.push_back(std::to_string(rep.similarity[i][j]));
      w.row(row);
    }
  }

  {
    csv::Writer w(out_dir + "/model_stats.csv");
    w.row({"model", "substations", "ring_length_m", "lv_objective_m", "max_eccentricity_m",
           "mean_nodes_per_transformer"});
    for (std::size_t i = 0; i < models.size(); ++i) {
      const auto& m = models[i];
      double max_ecc = 0.0;
      for (const auto& s : m.substations)
        max_ecc = std::max(max_ecc, eccentricity(m.lv, s.graph_node));
      auto supplied = pipeline_detail::supplied_buildings(m.buildings, m.estimates);
      double mean_nodes = 0.0;
      auto counts = nodes_per_transformer(m.lv, supplied, m.substations);
      for (const auto& [_, c] : counts.per_substation) mean_nodes += c;
      if (!counts.per_substation.empty()) mean_nodes /= counts.per_substation.size();
      w.row({labels[i], std::to_string(m.substations.size()),
             std::to_string(m.ring.total_length_m()), std::to_string(m.lv.objective_m),
             std::to_string(max_ecc), std::to_string(mean_nodes)});
    }
  }

  if (!reference_path.empty()) {
    csv::Writer w(out_dir + "/transformer_distances.csv");
    w.row({"model", "known_id", "computed_id", "distance_m"});
    for (std::size_t i = 1; i < models.size(); ++i) {
      auto dists = transformer_distances(models[0].substations, models[i].substations);
      rep.distances_vs_ref[labels[i]] = dists;
      for (const auto& d : dists)
        w.row({labels[i], std::to_string(d.known_id), std::to_string(d.computed_id),
               std::to_string(d.distance_m)});
    }
  }
  return rep;
}

}  // namespace gridsynth
