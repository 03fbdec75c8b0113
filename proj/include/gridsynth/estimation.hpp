#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridsynth/csv.hpp"
#include "gridsynth/errors.hpp"
#include "gridsynth/street_graph.hpp"

namespace gridsynth {

enum class Variant { O2D, O3D, EM };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::O2D: return "O2D";
    case Variant::O3D: return "O3D";
    case Variant::EM: return "EM";
  }
  return "?";
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "O2D" || s == "o2d") return Variant::O2D;
  if (s == "O3D" || s == "o3d") return Variant::O3D;
  if (s == "EM" || s == "em") return Variant::EM;
  throw ConfigError("unknown data-source variant: " + s);
}

enum class Units2dMode { literal, floor_scaled };

struct EstimationParams {
  double residents_per_unit = 1.7;        // nR
  double kwh_per_resident = 200.0;        // E_R
  double kwh_per_m2 = 9.0;                // E_A
  double appliances_per_unit = 8.4;       // nLA
  double kwh_per_appliance = 200.0;       // E_LA
  double floor_height_m = 2.6;            // h_f
  double stories_factor = 2.0;            // S_U
  double peak_kw_per_unit = 2.0;          // P_peak,U
  double nonres_peak_factor = 3.0;        // flat diversity factor for nonresidential peaks
  Units2dMode units2d_mode = Units2dMode::literal;
  std::map<BuildingClass, double> nonres_intensity = {
      {BuildingClass::school, 20.0},
      {BuildingClass::kindergarten, 22.0},
      {BuildingClass::community, 9.0},
  };

  void validate() const {
    const double vals[] = {residents_per_unit, kwh_per_resident,  kwh_per_m2,
                           appliances_per_unit, kwh_per_appliance, floor_height_m,
                           stories_factor,      peak_kw_per_unit,  nonres_peak_factor};
    for (double v : vals)
      if (!(v > 0.0)) throw ConfigError("estimation parameters must be strictly positive");
    for (const auto& [_, v] : nonres_intensity)
      if (!(v > 0.0)) throw ConfigError("nonresidential intensities must be strictly positive");
  }
};

struct LoadEstimate {
  std::int64_t building_id = 0;
  double energy_kwh = 0.0;  // E_i, kWh/year
  double units = 0.0;       // nU_i, real-valued
  double peak_kw = 0.0;     // P_peak,i
  Variant variant = Variant::O2D;
};

/// Annual energy of a single residential unit of floor area `area_m2`.
inline double unit_energy(const EstimationParams& p, double area_m2) {
  if (!(area_m2 > 0.0)) throw EstimationError("unit_energy: non-positive area");
  return p.residents_per_unit * p.kwh_per_resident + area_m2 * p.kwh_per_m2 +
         p.appliances_per_unit * p.kwh_per_appliance;
}

/// Median floor area over residential buildings; even counts average the
/// central pair.
inline double median_unit_area(const std::vector<Building>& buildings) {
  std::vector<double> areas;
  for (const auto& b : buildings)
    if (b.klass == BuildingClass::residential) areas.push_back(b.area_m2);
  if (areas.empty()) throw EstimationError("median_unit_area: no residential buildings");
  std::sort(areas.begin(), areas.end());
  const std::size_t n = areas.size();
  if (n % 2 == 1) return areas[n / 2];
  return 0.5 * (areas[n / 2 - 1] + areas[n / 2]);
}

/// Residential-unit count from floor areas alone. Literal mode transcribes
/// the printed cases (ratio capped at 1); floor_scaled keeps the ratio for
/// large buildings instead.
inline double units_2d(double area_m2, double median_area_m2,
                       Units2dMode mode = Units2dMode::literal) {
  if (!(area_m2 > 0.0) || !(median_area_m2 > 0.0))
    throw EstimationError("units_2d: non-positive area");
  const double ratio = area_m2 / median_area_m2;
  if (mode == Units2dMode::literal) return ratio <= 1.0 ? ratio : 1.0;
  return std::max(ratio, 1.0);
}

namespace detail {

inline LoadEstimate make_residential(const EstimationParams& p, const Building& b, double units,
                                     double energy, Variant v) {
  LoadEstimate e;
  e.building_id = b.id;
  e.energy_kwh = energy;
  e.units = units;
  e.peak_kw = p.peak_kw_per_unit * units;
  e.variant = v;
  return e;
}

}  // namespace detail

/// 2D variant: footprint area only.
inline LoadEstimate estimate_o2d(const EstimationParams& p, const Building& b,
                                 double median_area_m2) {
  if (b.klass != BuildingClass::residential)
    throw EstimationError("estimate_o2d: building " + std::to_string(b.id) + " not residential");
  const double n2d = units_2d(b.area_m2, median_area_m2, p.units2d_mode);
  const double units = n2d * p.stories_factor;
  const double energy = units * unit_energy(p, median_area_m2);
  return detail::make_residential(p, b, units, energy, Variant::O2D);
}

struct O3dResult {
  LoadEstimate estimate;
  bool height_fallback = false;  // fell back to the 2D path (no height data)
};

/// 3D variant: the measured height replaces the stories factor.
inline O3dResult estimate_o3d(const EstimationParams& p, const Building& b,
                              double median_area_m2) {
  if (b.klass != BuildingClass::residential)
    throw EstimationError("estimate_o3d: building " + std::to_string(b.id) + " not residential");
  if (!b.height_m) {
    auto e = estimate_o2d(p, b, median_area_m2);
    e.variant = Variant::O3D;
    return {e, true};
  }
  const double n2d = units_2d(b.area_m2, median_area_m2, p.units2d_mode);
  const double factor = *b.height_m / p.floor_height_m;
  const double units = n2d * factor;
  const double energy = units * unit_energy(p, median_area_m2);
  return {detail::make_residential(p, b, units, energy, Variant::O3D), false};
}

/// Meter-count variant. Buildings with >= 3 meters carry one general-purpose
/// meter counted as 0.1 households. Missing height data substitutes
/// levels * floor height (levels default to the stories factor).
inline LoadEstimate estimate_em(const EstimationParams& p, const Building& b) {
  if (b.klass != BuildingClass::residential)
    throw EstimationError("estimate_em: building " + std::to_string(b.id) + " not residential");
  if (!b.meters_count)
    throw EstimationError("estimate_em: building " + std::to_string(b.id) +
                          " has no meter count");
  const int n_em = *b.meters_count;
  double height = b.height_m.value_or(
      (b.levels ? static_cast<double>(*b.levels) : p.stories_factor) * p.floor_height_m);
  const double per_unit_area = b.area_m2 * (height / p.floor_height_m) / n_em;
  const double multiplier = n_em < 3 ? static_cast<double>(n_em) : n_em - 0.9;
  const double energy = multiplier * unit_energy(p, per_unit_area);
  return detail::make_residential(p, b, multiplier, energy, Variant::EM);
}

/// Area-intensity rule for schools, kindergartens and community centres.
/// Level count from the OSM tag, defaulting to two.
inline LoadEstimate estimate_nonresidential(const EstimationParams& p, const Building& b,
                                            Variant variant) {
  auto it = p.nonres_intensity.find(b.klass);
  if (it == p.nonres_intensity.end())
    throw EstimationError("estimate_nonresidential: unhandled class for building " +
                          std::to_string(b.id));
  const int levels = b.levels.value_or(2);
  LoadEstimate e;
  e.building_id = b.id;
  e.energy_kwh = b.area_m2 * levels * it->second;
  e.units = 0.0;
  e.peak_kw = e.energy_kwh / 8760.0 * p.nonres_peak_factor;
  e.variant = variant;
  return e;
}

struct EstimationReport {
  std::vector<LoadEstimate> estimates;
  std::vector<std::int64_t> excluded;      // other-nonresidential, skipped with warning
  std::vector<std::int64_t> em_missing;    // EM variant: no meter data
  int o3d_height_fallbacks = 0;
  double total_peak_kw = 0.0;
};

/// Run the configured variant over all buildings.
inline EstimationReport estimate_all(const EstimationParams& p,
                                     const std::vector<Building>& buildings, Variant variant) {
  p.validate();
  EstimationReport rep;
  const double a_u = median_unit_area(buildings);
  for (const auto& b : buildings) {
    if (b.klass == BuildingClass::other_nonresidential) {
      rep.excluded.push_back(b.id);
      log::warn("building " + std::to_string(b.id) + " is non-residential without an intensity rule, excluded");
      continue;
    }
    if (b.klass != BuildingClass::residential) {
      rep.estimates.push_back(estimate_nonresidential(p, b, variant));
      continue;
    }
    switch (variant) {
      case Variant::O2D:
        rep.estimates.push_back(estimate_o2d(p, b, a_u));
        break;
      case Variant::O3D: {
        auto r = estimate_o3d(p, b, a_u);
        rep.estimates.push_back(r.estimate);
        if (r.height_fallback) ++rep.o3d_height_fallbacks;
        break;
      }
      case Variant::EM:
        if (!b.meters_count) {
          rep.em_missing.push_back(b.id);
          continue;
        }
        rep.estimates.push_back(estimate_em(p, b));
        break;
    }
  }
  if (!rep.em_missing.empty()) {
    std::string msg = "EM variant: no meter data for buildings:";
    for (auto id : rep.em_missing) msg += " " + std::to_string(id);
    throw EstimationError(msg);
  }
  for (const auto& e : rep.estimates) rep.total_peak_kw += e.peak_kw;
  return rep;
}

/// `building_id,variant,E_kwh,nU,P_peak_kw`
inline void write_estimation_csv(const std::string& path,
                                 const std::vector<LoadEstimate>& estimates) {
  csv::Writer w(path);
  w.row({"building_id", "variant", "E_kwh", "nU", "P_peak_kw"});
  for (const auto& e : estimates)
    w.row({std::to_string(e.building_id), to_string(e.variant), std::to_string(e.energy_kwh),
           std::to_string(e.units), std::to_string(e.peak_kw)});
}

}  // namespace gridsynth
