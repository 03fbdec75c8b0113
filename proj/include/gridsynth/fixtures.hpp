#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridsynth/csv.hpp"
#include "gridsynth/errors.hpp"
#include "gridsynth/geo.hpp"

namespace gridsynth {

// Parameterized synthetic town: a street grid with buildings strung along
// the blocks, a tagged HV/MV substation, plus matching height/meter/station
// side tables. Deterministic for a given spec.
struct SynthTownSpec {
  int buildings = 40;
  int road_ways = 25;       // split into horizontal + vertical streets
  std::uint64_t seed = 7;
  double spacing_m = 90.0;  // block edge length
  int multifamily = 2;      // buildings with a large meter count
  bool include_nonres = true;
  double origin_lat = 49.0;
  double origin_lon = 8.4;
};

struct SynthTown {
  nlohmann::json overpass;
  std::map<std::int64_t, double> heights;
  std::map<std::int64_t, int> meters;
  std::vector<std::tuple<int, double, double>> stations;  // id, lat, lon
};

inline SynthTown generate_town(const SynthTownSpec& spec) {
  if (spec.buildings < 1 || spec.road_ways < 2)
    throw ConfigError("synthetic town needs at least 1 building and 2 ways");
  std::mt19937_64 rng(spec.seed);

  const int rows = spec.road_ways / 2;                  // horizontal streets
  const int cols = spec.road_ways - rows;               // vertical streets
  const LocalFrame frame({spec.origin_lat, spec.origin_lon});

  auto grid_node_id = [&](int r, int c) { return 1000 + static_cast<std::int64_t>(r) * cols + c; };
  auto at = [&](int r, int c) {
    return frame.to_geo({c * spec.spacing_m, r * spec.spacing_m});
  };

  nlohmann::json elements = nlohmann::json::array();
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const GeoPoint p = at(r, c);
      elements.push_back({{"type", "node"}, {"id", grid_node_id(r, c)}, {"lat", p.lat},
                          {"lon", p.lon}});
    }

  std::int64_t way_id = 1;
  for (int r = 0; r < rows; ++r) {
    nlohmann::json refs = nlohmann::json::array();
    for (int c = 0; c < cols; ++c) refs.push_back(grid_node_id(r, c));
    elements.push_back({{"type", "way"},
                        {"id", way_id++},
                        {"nodes", refs},
                        {"tags", {{"highway", "residential"}, {"name", "h" + std::to_string(r)}}}});
  }
  for (int c = 0; c < cols; ++c) {
    nlohmann::json refs = nlohmann::json::array();
    for (int r = 0; r < rows; ++r) refs.push_back(grid_node_id(r, c));
    elements.push_back({{"type", "way"},
                        {"id", way_id++},
                        {"nodes", refs},
                        {"tags", {{"highway", "residential"}, {"name", "v" + std::to_string(c)}}}});
  }

  // HV/MV feed point at the south-west corner
  {
    const GeoPoint p = at(0, 0);
    elements.push_back({{"type", "node"},
                        {"id", 900},
                        {"lat", p.lat},
                        {"lon", p.lon},
                        {"tags", {{"power", "substation"}}}});
  }

  SynthTown town;
  std::int64_t node_id = 100000;
  std::int64_t building_id = 50000;
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  struct Slot {
    bool horizontal;
    int r, c;  // segment start intersection
  };
  std::vector<Slot> slots;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c + 1 < cols; ++c) slots.push_back({true, r, c});
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r + 1 < rows; ++r) slots.push_back({false, r, c});

  const int n_nonres = spec.include_nonres && spec.buildings >= 8 ? 4 : 0;
  std::vector<std::string> nonres_tags = {"school", "kindergarten", "community_centre",
                                          "industrial"};

  for (int k = 0; k < spec.buildings; ++k) {
    const Slot& slot = slots[static_cast<std::size_t>(uni(rng) * slots.size()) % slots.size()];
    const double t = 0.15 + 0.7 * uni(rng);
    const double side = uni(rng) < 0.5 ? 1.0 : -1.0;
    const double offset = 12.0 + 8.0 * uni(rng);

    double cx, cy;  // footprint center in frame meters
    if (slot.horizontal) {
      cx = (slot.c + t) * spec.spacing_m;
      cy = slot.r * spec.spacing_m + side * offset;
    } else {
      cx = slot.c * spec.spacing_m + side * offset;
      cy = (slot.r + t) * spec.spacing_m;
    }

    const bool is_nonres = k < n_nonres;
    const bool is_multifamily = !is_nonres && k < n_nonres + spec.multifamily;
    const double w = is_nonres ? 22.0 + 10.0 * uni(rng)
                     : is_multifamily ? 18.0 + 6.0 * uni(rng)
                                      : 8.0 + 6.0 * uni(rng);
    const double h = is_nonres ? 16.0 + 8.0 * uni(rng)
                     : is_multifamily ? 14.0 + 4.0 * uni(rng)
                                      : 7.0 + 5.0 * uni(rng);

    nlohmann::json refs = nlohmann::json::array();
    const double corners[4][2] = {{cx - w / 2, cy - h / 2},
                                  {cx + w / 2, cy - h / 2},
                                  {cx + w / 2, cy + h / 2},
                                  {cx - w / 2, cy + h / 2}};
    std::int64_t first_ref = node_id;
    for (const auto& corner : corners) {
      const GeoPoint p = frame.to_geo({corner[0], corner[1]});
      elements.push_back({{"type", "node"}, {"id", node_id}, {"lat", p.lat}, {"lon", p.lon}});
      refs.push_back(node_id++);
    }
    refs.push_back(first_ref);  // close the ring

    nlohmann::json tags;
    int levels;
    if (is_nonres) {
      const std::string& cls = nonres_tags[k % nonres_tags.size()];
      levels = 1 + static_cast<int>(uni(rng) * 2.0);
      if (cls == "industrial")
        tags = {{"building", "industrial"}};
      else
        tags = {{"building", "yes"}, {"amenity", cls}};
    } else if (is_multifamily) {
      levels = 5 + static_cast<int>(uni(rng) * 3.0);
      tags = {{"building", "apartments"}};
      town.meters[building_id] = 40 + static_cast<int>(uni(rng) * 31.0);
    } else {
      levels = 1 + static_cast<int>(uni(rng) * 2.0);
      tags = {{"building", "house"}};
      town.meters[building_id] = 1 + static_cast<int>(uni(rng) * 3.0);
    }
    if (uni(rng) < 0.7) tags["building:levels"] = std::to_string(levels);
    town.heights[building_id] = levels * 2.6 * (0.95 + 0.1 * uni(rng));

    elements.push_back(
        {{"type", "way"}, {"id", building_id++}, {"nodes", refs}, {"tags", tags}});
  }

  // evenly spread known stations across the grid interior
  const int n_stations = std::max(2, spec.buildings / 30);
  for (int s = 0; s < n_stations; ++s) {
    const int r = 1 + static_cast<int>((rows - 2) * (s + 0.5) / n_stations);
    const int c = 1 + static_cast<int>((cols - 2) * ((s * 7) % n_stations + 0.5) / n_stations);
    const GeoPoint p = at(std::min(r, rows - 1), std::min(c, cols - 1));
    town.stations.push_back({s + 1, p.lat, p.lon});
  }

  town.overpass = {{"version", 0.6}, {"generator", "gridsynth fixtures"},
                   {"elements", elements}};
  return town;
}

inline void write_town(const SynthTown& town, const std::string& dir,
                       const std::string& stem = "town") {
  {
    std::ofstream out(dir + "/" + stem + ".json", std::ios::binary);
    if (!out) throw Error("cannot write " + dir + "/" + stem + ".json");
    out << town.overpass.dump(2) << '\n';
  }
  {
    csv::Writer w(dir + "/" + stem + "_heights.csv");
    w.row({"id", "height_m"});
    for (const auto& [id, h] : town.heights) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6f", h);
      w.row({std::to_string(id), buf});
    }
  }
  {
    csv::Writer w(dir + "/" + stem + "_meters.csv");
    w.row({"id", "meter_count"});
    for (const auto& [id, n] : town.meters) w.row({std::to_string(id), std::to_string(n)});
  }
  {
    csv::Writer w(dir + "/" + stem + "_stations.csv");
    w.row({"station_id", "lat", "lon"});
    for (const auto& [id, lat, lon] : town.stations) {
      char b1[32], b2[32];
      std::snprintf(b1, sizeof b1, "%.8f", lat);
      std::snprintf(b2, sizeof b2, "%.8f", lon);
      w.row({std::to_string(id), b1, b2});
    }
  }
}

}  // namespace gridsynth
