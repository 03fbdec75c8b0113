#include <doctest.h>

#include "gridsynth/estimation.hpp"

using namespace gridsynth;

namespace {

Building residential(std::int64_t id, double area) {
  Building b;
  b.id = id;
  b.area_m2 = area;
  b.klass = BuildingClass::residential;
  return b;
}

}  // namespace

TEST_CASE("unit_energy with table defaults") {
  EstimationParams p;
  CHECK(unit_energy(p, 100.0) == doctest::Approx(2920.0).epsilon(1e-12));
  // limit toward zero area: residents + appliances remain
  CHECK(unit_energy(p, 1e-9) == doctest::Approx(2020.0).epsilon(1e-6));
  // linearity in area
  const double a = unit_energy(p, 150.0);
  const double b = unit_energy(p, 300.0);
  CHECK(b - a == doctest::Approx(150.0 * 9.0).epsilon(1e-12));
  CHECK_THROWS_AS(unit_energy(p, 0.0), EstimationError);
}

TEST_CASE("median_unit_area") {
  SUBCASE("odd count") {
    std::vector<Building> bs{residential(1, 80), residential(2, 100), residential(3, 120)};
    CHECK(median_unit_area(bs) == doctest::Approx(100.0));
  }
  SUBCASE("even count averages the central pair") {
    std::vector<Building> bs{residential(1, 80), residential(2, 120)};
    CHECK(median_unit_area(bs) == doctest::Approx(100.0));
  }
  SUBCASE("singleton") {
    std::vector<Building> bs{residential(1, 95)};
    CHECK(median_unit_area(bs) == doctest::Approx(95.0));
  }
  SUBCASE("ignores nonresidential and errors when none left") {
    std::vector<Building> bs{residential(1, 80)};
    bs[0].klass = BuildingClass::school;
    CHECK_THROWS_AS(median_unit_area(bs), EstimationError);
  }
}

TEST_CASE("units_2d literal vs floor-scaled") {
  CHECK(units_2d(50, 100, Units2dMode::literal) == doctest::Approx(0.5));
  CHECK(units_2d(100, 100, Units2dMode::literal) == doctest::Approx(1.0));
  CHECK(units_2d(300, 100, Units2dMode::literal) == doctest::Approx(1.0));
  CHECK(units_2d(300, 100, Units2dMode::floor_scaled) == doctest::Approx(3.0));
  CHECK(units_2d(50, 100, Units2dMode::floor_scaled) == doctest::Approx(1.0));
}

TEST_CASE("estimate_o2d vectors") {
  EstimationParams p;  // S_U = 2
  SUBCASE("A_i = A_U") {
    auto e = estimate_o2d(p, residential(1, 100), 100.0);
    CHECK(e.energy_kwh == doctest::Approx(5840.0).epsilon(1e-12));
    CHECK(e.units == doctest::Approx(2.0));
    CHECK(e.peak_kw == doctest::Approx(4.0));
  }
  SUBCASE("half the median area") {
    auto e = estimate_o2d(p, residential(1, 50), 100.0);
    CHECK(e.energy_kwh == doctest::Approx(2920.0).epsilon(1e-12));
  }
  SUBCASE("S_U = 1 gives the bare unit energy") {
    p.stories_factor = 1.0;
    auto e = estimate_o2d(p, residential(1, 100), 100.0);
    CHECK(e.energy_kwh == doctest::Approx(2920.0).epsilon(1e-12));
  }
}

TEST_CASE("estimate_o3d vectors") {
  EstimationParams p;
  SUBCASE("two-story equivalent height") {
    auto b = residential(1, 100);
    b.height_m = 5.2;
    auto r = estimate_o3d(p, b, 100.0);
    CHECK_FALSE(r.height_fallback);
    CHECK(r.estimate.energy_kwh == doctest::Approx(5840.0).epsilon(1e-12));
  }
  SUBCASE("single floor height") {
    auto b = residential(1, 100);
    b.height_m = 2.6;
    auto r = estimate_o3d(p, b, 100.0);
    CHECK(r.estimate.energy_kwh == doctest::Approx(2920.0).epsilon(1e-12));
  }
  SUBCASE("missing height falls back to the 2D estimate") {
    auto b = residential(1, 100);
    auto r = estimate_o3d(p, b, 100.0);
    CHECK(r.height_fallback);
    auto e2d = estimate_o2d(p, b, 100.0);
    CHECK(r.estimate.energy_kwh == doctest::Approx(e2d.energy_kwh));
    CHECK(r.estimate.variant == Variant::O3D);
  }
  SUBCASE("equals o2d exactly when H = S_U * h_f") {
    auto b = residential(1, 137.5);
    b.height_m = p.stories_factor * p.floor_height_m;
    auto r = estimate_o3d(p, b, 100.0);
    auto e2d = estimate_o2d(p, b, 100.0);
    CHECK(r.estimate.energy_kwh == doctest::Approx(e2d.energy_kwh).epsilon(1e-12));
    CHECK(r.estimate.units == doctest::Approx(e2d.units).epsilon(1e-12));
  }
}

TEST_CASE("estimate_em vectors") {
  EstimationParams p;
  SUBCASE("two meters, measured height") {
    auto b = residential(1, 130);
    b.height_m = 5.2;
    b.meters_count = 2;
    auto e = estimate_em(p, b);
    // per-unit area 130 * 2 / 2 = 130 -> E_U = 340 + 1170 + 1680 = 3190
    CHECK(e.energy_kwh == doctest::Approx(6380.0).epsilon(1e-12));
    CHECK(e.units == doctest::Approx(2.0));
  }
  SUBCASE("three meters apply the general-meter deduction") {
    auto b = residential(1, 130);
    b.height_m = 5.2;
    b.meters_count = 3;
    auto e = estimate_em(p, b);
    CHECK(e.units == doctest::Approx(2.1));
  }
  SUBCASE("single meter") {
    auto b = residential(1, 90);
    b.height_m = 2.6;
    b.meters_count = 1;
    auto e = estimate_em(p, b);
    CHECK(e.energy_kwh == doctest::Approx(unit_energy(p, 90.0)).epsilon(1e-12));
  }
  SUBCASE("missing height substitutes levels * floor height") {
    auto b = residential(1, 130);
    b.levels = 2;
    b.meters_count = 2;
    auto e = estimate_em(p, b);
    CHECK(e.energy_kwh == doctest::Approx(6380.0).epsilon(1e-12));
  }
  SUBCASE("missing meters raises") {
    auto b = residential(1, 130);
    CHECK_THROWS_AS(estimate_em(p, b), EstimationError);
  }
  SUBCASE("energy strictly increases in the meter count at fixed per-unit area") {
    // hold A_U,i = 80 by scaling the footprint with the meter count
    double prev = 0.0;
    for (int n = 1; n <= 8; ++n) {
      auto b = residential(1, 80.0 * n);
      b.height_m = p.floor_height_m;
      b.meters_count = n;
      const double e = estimate_em(p, b).energy_kwh;
      CHECK(e > prev);
      prev = e;
    }
  }
}

TEST_CASE("estimate_nonresidential") {
  EstimationParams p;
  SUBCASE("school with two levels") {
    Building b = residential(1, 500);
    b.klass = BuildingClass::school;
    b.levels = 2;
    auto e = estimate_nonresidential(p, b, Variant::O2D);
    CHECK(e.energy_kwh == doctest::Approx(20000.0));
    CHECK(e.units == 0.0);
  }
  SUBCASE("community centre, one level") {
    Building b = residential(1, 300);
    b.klass = BuildingClass::community;
    b.levels = 1;
    auto e = estimate_nonresidential(p, b, Variant::O2D);
    CHECK(e.energy_kwh == doctest::Approx(2700.0));
  }
  SUBCASE("levels default to two") {
    Building b = residential(1, 500);
    b.klass = BuildingClass::kindergarten;
    auto e = estimate_nonresidential(p, b, Variant::O2D);
    CHECK(e.energy_kwh == doctest::Approx(500 * 2 * 22.0));
  }
}

TEST_CASE("estimate_all excludes unhandled nonresidential with a warning") {
  EstimationParams p;
  std::vector<Building> bs{residential(1, 100), residential(2, 120)};
  bs[1].klass = BuildingClass::other_nonresidential;
  auto rep = estimate_all(p, bs, Variant::O2D);
  CHECK(rep.estimates.size() == 1);
  REQUIRE(rep.excluded.size() == 1);
  CHECK(rep.excluded[0] == 2);
}

TEST_CASE("EM variant without meters raises naming the building") {
  EstimationParams p;
  std::vector<Building> bs{residential(42, 100)};
  CHECK_THROWS_WITH_AS(estimate_all(p, bs, Variant::EM), doctest::Contains("42"),
                       EstimationError);
}

TEST_CASE("area monotonicity holds in both 2D modes") {
  EstimationParams p;
  for (auto mode : {Units2dMode::literal, Units2dMode::floor_scaled}) {
    p.units2d_mode = mode;
    double prev = -1.0;
    for (double a = 20.0; a <= 400.0; a += 20.0) {
      const double e = estimate_o2d(p, residential(1, a), 100.0).energy_kwh;
      CHECK(e >= prev);
      prev = e;
    }
  }
}

TEST_CASE("peak share ratio is exactly P_peak_U for residential estimates") {
  EstimationParams p;
  auto b = residential(1, 140);
  b.height_m = 7.8;
  b.meters_count = 5;
  for (const auto& e :
       {estimate_o2d(p, b, 100.0), estimate_o3d(p, b, 100.0).estimate, estimate_em(p, b)}) {
    REQUIRE(e.units > 0.0);
    CHECK(e.peak_kw / e.units == doctest::Approx(p.peak_kw_per_unit).epsilon(1e-12));
  }
}
