#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "gridsynth/csv.hpp"
#include "gridsynth/errors.hpp"

namespace gridsynth {

enum class DayType { workday = 0, saturday = 1, sunday = 2 };
enum class Season { winter = 0, summer = 1, transition = 2 };

inline std::string to_string(DayType d) {
  switch (d) {
    case DayType::workday: return "workday";
    case DayType::saturday: return "saturday";
    case DayType::sunday: return "sunday";
  }
  return "?";
}

inline std::string to_string(Season s) {
  switch (s) {
    case Season::winter: return "winter";
    case Season::summer: return "summer";
    case Season::transition: return "transition";
  }
  return "?";
}

// Standard-profile season boundaries: winter Nov 1 - Mar 20,
// summer May 15 - Sep 14, transition otherwise.
struct SeasonConfig {
  int winter_start_month = 11, winter_start_day = 1;
  int winter_end_month = 3, winter_end_day = 20;
  int summer_start_month = 5, summer_start_day = 15;
  int summer_end_month = 9, summer_end_day = 14;

  Season classify(int month, int day) const {
    const int md = month * 100 + day;
    if (md >= winter_start_month * 100 + winter_start_day ||
        md <= winter_end_month * 100 + winter_end_day)
      return Season::winter;
    if (md >= summer_start_month * 100 + summer_start_day &&
        md <= summer_end_month * 100 + summer_end_day)
      return Season::summer;
    return Season::transition;
  }
};

inline DayType day_type(const std::chrono::year_month_day& ymd) {
  const std::chrono::weekday wd{std::chrono::sys_days{ymd}};
  if (wd == std::chrono::Saturday) return DayType::saturday;
  if (wd == std::chrono::Sunday) return DayType::sunday;
  return DayType::workday;
}

// Household standard load profile: 96 quarter-hour coefficients for each of
// the 9 (day type, season) combinations. A profile is normalized when the
// reference-year integral of coefficient * 0.25 h equals 1, so that
// P(t) = H0(t) * E_annual reproduces the annual energy.
class H0Profile {
 public:
  static constexpr int kSlots = 96;
  static constexpr int kReferenceYear = 2023;

  double& at(Season s, DayType d, int slot) {
    return values_[static_cast<int>(s)][static_cast<int>(d)][slot];
  }
  double at(Season s, DayType d, int slot) const {
    return values_[static_cast<int>(s)][static_cast<int>(d)][slot];
  }

  /// Sum of coefficient * 0.25 h over one calendar year, per kWh of annual
  /// energy. Equals 1 for the reference year after normalize().
  double annual_integral(int year, const SeasonConfig& seasons = {}) const {
    using namespace std::chrono;
    double total = 0.0;
    for (sys_days d = sys_days{year_month_day{std::chrono::year{year}, January, 1d}};
         d < sys_days{year_month_day{std::chrono::year{year + 1}, January, 1d}}; d += days{1}) {
      const year_month_day ymd{d};
      const Season s = seasons.classify(static_cast<unsigned>(ymd.month()),
                                        static_cast<unsigned>(ymd.day()));
      const DayType dt = day_type(ymd);
      for (int slot = 0; slot < kSlots; ++slot) total += at(s, dt, slot) * 0.25;
    }
    return total;
  }

  void normalize(int year = kReferenceYear, const SeasonConfig& seasons = {}) {
    const double total = annual_integral(year, seasons);
    if (!(total > 0.0)) throw Error("H0 profile has zero annual integral");
    for (auto& season : values_)
      for (auto& day : season)
        for (auto& v : day) v /= total;
  }

  void check(const SeasonConfig& seasons = {}) const {
    for (const auto& season : values_)
      for (const auto& day : season)
        for (double v : day)
          if (v < 0.0) throw Error("H0 profile has a negative coefficient");
    const double total = annual_integral(kReferenceYear, seasons);
    if (std::abs(total - 1.0) > 1e-6)
      throw Error("H0 profile is not normalized (reference-year integral " +
                  std::to_string(total) + ")");
  }

 private:
  // [season][daytype][slot]
  std::array<std::array<std::array<double, kSlots>, 3>, 3> values_{};
};

/// Synthetic household profile shape: night trough, morning ramp, midday
/// plateau and a dominant evening peak, with weekend and seasonal variants.
inline H0Profile builtin_h0() {
  H0Profile p;
  auto bump = [](double h, double center, double width) {
    const double z = (h - center) / width;
    return std::exp(-z * z);
  };
  for (int si = 0; si < 3; ++si) {
    const Season s = static_cast<Season>(si);
    const double season_scale = s == Season::winter ? 1.18 : (s == Season::summer ? 0.82 : 1.0);
    for (int di = 0; di < 3; ++di) {
      const DayType d = static_cast<DayType>(di);
      for (int slot = 0; slot < H0Profile::kSlots; ++slot) {
        const double h = (slot + 0.5) * 0.25;
        double v = 0.42;
        v += 0.34 * bump(h, 8.0, 2.3);
        v += (d == DayType::workday ? 0.38 : 0.62) * bump(h, 12.8, 3.1);
        v += (d == DayType::sunday ? 0.72 : 0.88) * bump(h, 19.6, 2.4);
        v -= 0.20 * bump(h, 3.0, 2.6);
        p.at(s, d, slot) = std::max(v, 0.02) * season_scale;
      }
    }
  }
  p.normalize();
  return p;
}

/// CSV columns `daytype,season,quarter_hour_index,value`; 864 data rows.
inline H0Profile read_h0_csv(const std::string& path) {
  auto t = csv::read_file(path);
  const int cd = t.column("daytype"), cs = t.column("season"),
            cq = t.column("quarter_hour_index"), cv = t.column("value");
  if (cd < 0 || cs < 0 || cq < 0 || cv < 0)
    throw ParseError("H0 CSV needs columns daytype,season,quarter_hour_index,value: " + path);
  if (t.rows.size() != 864)
    throw ParseError("H0 CSV must have 864 data rows, found " + std::to_string(t.rows.size()));
  H0Profile p;
  auto parse_day = [](const std::string& s) {
    if (s == "workday") return DayType::workday;
    if (s == "saturday") return DayType::saturday;
    if (s == "sunday") return DayType::sunday;
    throw ParseError("unknown daytype: " + s);
  };
  auto parse_season = [](const std::string& s) {
    if (s == "winter") return Season::winter;
    if (s == "summer") return Season::summer;
    if (s == "transition") return Season::transition;
    throw ParseError("unknown season: " + s);
  };
  for (const auto& row : t.rows) {
    const int slot = std::stoi(row.at(cq));
    if (slot < 0 || slot >= H0Profile::kSlots)
      throw ParseError("quarter_hour_index out of range: " + row.at(cq));
    p.at(parse_season(row.at(cs)), parse_day(row.at(cd)), slot) = std::stod(row.at(cv));
  }
  p.check();
  return p;
}

inline void write_h0_csv(const std::string& path, const H0Profile& p) {
  csv::Writer w(path);
  w.row({"daytype", "season", "quarter_hour_index", "value"});
  for (int di = 0; di < 3; ++di)
    for (int si = 0; si < 3; ++si)
      for (int slot = 0; slot < H0Profile::kSlots; ++slot) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g",
                      p.at(static_cast<Season>(si), static_cast<DayType>(di), slot));
        w.row({to_string(static_cast<DayType>(di)), to_string(static_cast<Season>(si)),
               std::to_string(slot), buf});
      }
}

struct LoadSeries {
  std::chrono::sys_days start;
  std::vector<double> kw;  // quarter-hour resolution
  double energy_kwh() const {
    double e = 0.0;
    for (double v : kw) e += v * 0.25;
    return e;
  }
};

/// P(t) = H0(t) * E_annual at 15-min resolution over `year`, rescaled so the
/// integral equals the annual energy for that year (the profile itself is
/// normalized against the reference year).
inline LoadSeries load_series(double annual_energy_kwh, const H0Profile& profile, int year,
                              const SeasonConfig& seasons = {}) {
  using namespace std::chrono;
  LoadSeries out;
  out.start = sys_days{year_month_day{std::chrono::year{year}, January, 1d}};
  const sys_days end{year_month_day{std::chrono::year{year + 1}, January, 1d}};
  out.kw.reserve(static_cast<std::size_t>((end - out.start).count()) * H0Profile::kSlots);
  for (sys_days d = out.start; d < end; d += days{1}) {
    const year_month_day ymd{d};
    const Season s =
        seasons.classify(static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    const DayType dt = day_type(ymd);
    for (int slot = 0; slot < H0Profile::kSlots; ++slot)
      out.kw.push_back(profile.at(s, dt, slot) * annual_energy_kwh);
  }
  const double raw = out.energy_kwh();
  if (raw > 0.0) {
    const double scale = annual_energy_kwh / raw;
    for (double& v : out.kw) v *= scale;
  }
  return out;
}

}  // namespace gridsynth
