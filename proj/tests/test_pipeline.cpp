#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "gridsynth/pipeline.hpp"

using namespace gridsynth;
namespace fs = std::filesystem;

namespace {

struct TownFiles {
  fs::path dir;
  std::string overpass, heights, meters, stations;
};

TownFiles make_town(int buildings, int roads, std::uint64_t seed, const std::string& name) {
  TownFiles t;
  t.dir = fs::temp_directory_path() / ("gridsynth_" + name);
  fs::create_directories(t.dir);
  SynthTownSpec spec;
  spec.buildings = buildings;
  spec.road_ways = roads;
  spec.seed = seed;
  write_town(generate_town(spec), t.dir.string(), "town");
  t.overpass = (t.dir / "town.json").string();
  t.heights = (t.dir / "town_heights.csv").string();
  t.meters = (t.dir / "town_meters.csv").string();
  t.stations = (t.dir / "town_stations.csv").string();
  return t;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("synthetic town parses with the requested counts") {
  auto t = make_town(40, 25, 7, "counts");
  auto res = parse_overpass_file(t.overpass);
  CHECK(res.buildings.size() == 40);
  std::set<std::int64_t> ways;
  for (const auto& e : res.graph.edges())
    if (e.kind == EdgeKind::road) ways.insert(e.way_id);
  CHECK(ways.size() == 25);
  CHECK(res.graph.substation_node() >= 0);
}

TEST_CASE("run completes for (O2D, T_C) on a small town") {
  auto t = make_town(30, 12, 3, "run_o2d");
  RunConfig cfg;
  cfg.overpass_path = t.overpass;
  cfg.data_source = Variant::O2D;
  cfg.out_dir = (t.dir / "out").string();
  cfg.seed = 5;
  auto out = run(cfg);
  CHECK(out.model.substations.size() >= 1);
  CHECK(out.model.ring.hop_paths.size() == out.model.substations.size() + 1);
  CHECK(fs::exists(t.dir / "out" / "model.json"));
  CHECK(fs::exists(t.dir / "out" / "ring.geojson"));
  CHECK(fs::exists(t.dir / "out" / "runtime.csv"));

  // every estimated building hangs in a tree
  for (const auto& e : out.model.estimates) {
    if (e.peak_kw <= 0.0) continue;
    const Building* b = nullptr;
    for (const auto& bb : out.model.buildings)
      if (bb.id == e.building_id) b = &bb;
    REQUIRE(b != nullptr);
    CHECK(out.model.lv.root_of.count(b->building_node) == 1);
  }
}

TEST_CASE("EM without a meter CSV fails config validation before any work") {
  RunConfig cfg;
  cfg.overpass_path = "does_not_matter.json";
  cfg.data_source = Variant::EM;
  cfg.known_transformers = true;
  cfg.stations_path = "also.csv";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.meters_path = "meters.csv";
  CHECK_NOTHROW(cfg.validate());
  cfg.stations_path.clear();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("same config and seed give byte-identical model JSON") {
  auto t = make_town(24, 10, 9, "determinism");
  RunConfig cfg;
  cfg.overpass_path = t.overpass;
  cfg.heights_path = t.heights;
  cfg.data_source = Variant::O3D;
  cfg.seed = 17;
  cfg.out_dir = (t.dir / "out1").string();
  run(cfg);
  cfg.out_dir = (t.dir / "out2").string();
  run(cfg);
  CHECK(slurp((t.dir / "out1" / "model.json").string()) ==
        slurp((t.dir / "out2" / "model.json").string()));
}

TEST_CASE("model JSON round trip preserves the comparison inputs") {
  auto t = make_town(24, 10, 13, "roundtrip");
  RunConfig cfg;
  cfg.overpass_path = t.overpass;
  cfg.out_dir = (t.dir / "out").string();
  auto out = run(cfg);
  auto loaded = read_model_json((t.dir / "out" / "model.json").string());
  CHECK(loaded.buildings.size() == out.model.buildings.size());
  CHECK(loaded.estimates.size() == out.model.estimates.size());
  CHECK(loaded.substations.size() == out.model.substations.size());
  CHECK(loaded.lv.edges.size() == out.model.lv.edges.size());
  CHECK(loaded.lv.objective_m == doctest::Approx(out.model.lv.objective_m));
  CHECK(loaded.loading_pct.size() == out.model.loading_pct.size());
  CHECK(loaded.config_hash == out.model.config_hash);
}

TEST_CASE("compare a model with itself") {
  auto t = make_town(24, 10, 21, "selfcmp");
  RunConfig cfg;
  cfg.overpass_path = t.overpass;
  cfg.out_dir = (t.dir / "out").string();
  run(cfg);
  const std::string model = (t.dir / "out" / "model.json").string();
  auto rep = compare({model, model}, "", (t.dir / "cmp").string());
  REQUIRE(rep.similarity.size() == 2);
  CHECK(rep.similarity[0][1] == doctest::Approx(0.0));
  CHECK(rep.similarity[1][0] == doctest::Approx(0.0));
  CHECK(fs::exists(t.dir / "cmp" / "similarity_matrix.csv"));

  // with a reference: distances to itself are zero
  auto rep2 = compare({model}, model, (t.dir / "cmp2").string());
  for (const auto& [_, dists] : rep2.distances_vs_ref)
    for (const auto& d : dists) CHECK(d.distance_m == doctest::Approx(0.0));
}

TEST_CASE("benchmark A/B writes both columns and the ratio") {
  auto t = make_town(20, 10, 33, "ab");
  RunConfig cfg;
  cfg.overpass_path = t.overpass;
  cfg.benchmark_ab = true;
  cfg.out_dir = (t.dir / "out").string();
  auto out = run(cfg);
  REQUIRE(out.times_b.has_value());
  auto table = csv::read_file((t.dir / "out" / "runtime.csv").string());
  CHECK(table.header.size() == 3);
  CHECK(table.rows.back()[0].find("speedup") != std::string::npos);
}
