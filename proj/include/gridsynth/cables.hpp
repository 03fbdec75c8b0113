#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridsynth/errors.hpp"
#include "gridsynth/flow.hpp"

namespace gridsynth {

struct CableType {
  std::string name;
  double ampacity_a = 0.0;
  double r_ohm_per_km = 0.0;
  double x_ohm_per_km = 0.0;
  double u_nominal_kv = 0.4;
};

struct CableCatalog {
  std::vector<CableType> types;  // kept sorted by ampacity

  void sort() {
    std::stable_sort(types.begin(), types.end(),
                     [](const CableType& a, const CableType& b) {
                       return a.ampacity_a < b.ampacity_a;
                     });
  }
};

/// Common 0.4 kV NAYY classes used when no catalog file is given.
inline CableCatalog default_catalog() {
  CableCatalog c;
  c.types = {
      {"NAYY 4x50", 142.0, 0.641, 0.085, 0.4},
      {"NAYY 4x150", 275.0, 0.206, 0.080, 0.4},
      {"NAYY 4x240", 364.0, 0.125, 0.079, 0.4},
  };
  c.sort();
  return c;
}

inline CableCatalog read_catalog_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open cable catalog: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("cable catalog parse error at byte " + std::to_string(e.byte) + ": " +
                         e.what(),
                     static_cast<long long>(e.byte));
  }
  CableCatalog c;
  for (const auto& item : doc) {
    CableType t;
    t.name = item.at("name").get<std::string>();
    t.ampacity_a = item.at("ampacity_A").get<double>();
    t.r_ohm_per_km = item.at("r_ohm_per_km").get<double>();
    t.x_ohm_per_km = item.at("x_ohm_per_km").get<double>();
    t.u_nominal_kv = item.value("u_nominal_kV", 0.4);
    if (!(t.ampacity_a > 0.0) || !(t.r_ohm_per_km > 0.0))
      throw ParseError("cable catalog entry " + t.name + " has non-positive parameters");
    c.types.push_back(t);
  }
  if (c.types.empty()) throw EmptyInputError("cable catalog is empty: " + path);
  c.sort();
  return c;
}

struct CableSegment {
  InstalledEdge edge;
  CableType cable;
  double current_a = 0.0;
};

inline double current_from_kw(double p_kw, double u_kv, double power_factor) {
  return p_kw / (std::sqrt(3.0) * u_kv * power_factor);
}

/// Pick the smallest-ampacity catalog cable that carries each installed
/// edge's flow at 0.4 kV.
inline std::vector<CableSegment> assign_cables(const LvSolution& solution,
                                               const CableCatalog& catalog,
                                               double power_factor = 0.95,
                                               double u_kv = 0.4) {
  if (catalog.types.empty()) throw Error("assign_cables: empty catalog");
  std::vector<CableSegment> out;
  out.reserve(solution.edges.size());
  for (const auto& e : solution.edges) {
    const double amps = current_from_kw(e.flow_kw, u_kv, power_factor);
    const CableType* pick = nullptr;
    for (const auto& t : catalog.types)
      if (t.ampacity_a >= amps) {
        pick = &t;
        break;
      }
    if (!pick)
      throw SolveError("assign_cables: flow " + std::to_string(e.flow_kw) + " kW (" +
                       std::to_string(amps) + " A) on edge " + std::to_string(e.from) + "->" +
                       std::to_string(e.to) + " exceeds the largest catalog cable");
    out.push_back({e, *pick, amps});
  }
  return out;
}

}  // namespace gridsynth
