#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "gridsynth/h0_profile.hpp"

using namespace gridsynth;

TEST_CASE("builtin profile is normalized for the reference year") {
  auto p = builtin_h0();
  CHECK(p.annual_integral(H0Profile::kReferenceYear) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_NOTHROW(p.check());
}

TEST_CASE("season boundaries") {
  SeasonConfig s;
  CHECK(s.classify(12, 24) == Season::winter);
  CHECK(s.classify(3, 20) == Season::winter);
  CHECK(s.classify(3, 21) == Season::transition);
  CHECK(s.classify(5, 14) == Season::transition);
  CHECK(s.classify(5, 15) == Season::summer);
  CHECK(s.classify(9, 14) == Season::summer);
  CHECK(s.classify(9, 15) == Season::transition);
  CHECK(s.classify(11, 1) == Season::winter);
}

TEST_CASE("day types from the calendar") {
  using namespace std::chrono;
  CHECK(day_type(year_month_day{2023y, January, 2d}) == DayType::workday);   // Monday
  CHECK(day_type(year_month_day{2023y, January, 7d}) == DayType::saturday);
  CHECK(day_type(year_month_day{2023y, January, 8d}) == DayType::sunday);
}

TEST_CASE("CSV round trip") {
  auto p = builtin_h0();
  const std::string path = std::filesystem::temp_directory_path() / "h0_test.csv";
  write_h0_csv(path, p);
  auto q = read_h0_csv(path);
  for (int s = 0; s < 3; ++s)
    for (int d = 0; d < 3; ++d)
      for (int slot = 0; slot < H0Profile::kSlots; ++slot)
        CHECK(q.at(static_cast<Season>(s), static_cast<DayType>(d), slot) ==
              doctest::Approx(p.at(static_cast<Season>(s), static_cast<DayType>(d), slot))
                  .epsilon(1e-14));
  std::remove(path.c_str());
}

TEST_CASE("load_series") {
  auto p = builtin_h0();
  SUBCASE("zero energy gives an all-zero series") {
    auto s = load_series(0.0, p, 2023);
    for (double v : s.kw) CHECK(v == 0.0);
  }
  SUBCASE("integral equals the annual energy within 1e-6 relative") {
    auto s = load_series(1000.0, p, 2023);
    CHECK(s.energy_kwh() == doctest::Approx(1000.0).epsilon(1e-6));
    CHECK(s.kw.size() == 365u * 96u);
    // leap year too
    auto s24 = load_series(1000.0, p, 2024);
    CHECK(s24.energy_kwh() == doctest::Approx(1000.0).epsilon(1e-6));
    CHECK(s24.kw.size() == 366u * 96u);
  }
  SUBCASE("doubling the energy doubles every sample") {
    auto s1 = load_series(500.0, p, 2023);
    auto s2 = load_series(1000.0, p, 2023);
    for (std::size_t i = 0; i < s1.kw.size(); i += 997)
      CHECK(s2.kw[i] == doctest::Approx(2.0 * s1.kw[i]).epsilon(1e-12));
  }
}

TEST_CASE("negative coefficients are rejected") {
  auto p = builtin_h0();
  p.at(Season::winter, DayType::workday, 0) = -0.1;
  CHECK_THROWS(p.check());
}
