#include <doctest.h>

#include <complex>
#include <random>

#include "gridsynth/powerflow.hpp"

using namespace gridsynth;

namespace {

RadialNetwork two_bus(double p_kw, double r_ohm, double x_ohm, double pf = 0.95) {
  RadialNetwork net;
  net.slack = 1;
  net.power_factor = pf;
  net.branches.push_back({1, 2, r_ohm, x_ohm, 200.0});
  net.load_kw[2] = p_kw;
  return net;
}

// closed-form two-bus solution in the per-phase complex plane:
// |v|^2 + re(z * conj(s)) = re(v0 * conj(v)) with v0 real 1 pu
double two_bus_exact_pu(double p_kw, double r_ohm, double x_ohm, double pf) {
  const double v0 = 400.0 / std::sqrt(3.0);
  const double p = p_kw * 1000.0 / 3.0;
  const double q = p * std::tan(std::acos(pf));
  const double b = (r_ohm * q - x_ohm * p) / v0;
  const double inner = v0 * v0 / 4.0 - (r_ohm * p + x_ohm * q + b * b);
  const double a = v0 / 2.0 + std::sqrt(inner);
  return std::sqrt(a * a + b * b) / v0;
}

}  // namespace

TEST_CASE("no load gives exactly 1.0 pu everywhere") {
  RadialNetwork net;
  net.slack = 1;
  net.branches.push_back({1, 2, 0.05, 0.02, 100.0});
  net.branches.push_back({2, 3, 0.05, 0.02, 100.0});
  auto r = solve_radial(net);
  for (const auto& [bus, v] : r.v_pu) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  for (const auto& [_, amps] : r.current_a) CHECK(amps == doctest::Approx(0.0));
  CHECK(r.losses_kw == doctest::Approx(0.0));
}

TEST_CASE("two-bus drop matches the closed form") {
  const double p = 30.0, r = 0.08, x = 0.03, pf = 0.95;
  auto res = solve_radial(two_bus(p, r, x, pf), 1e-12, 200);
  const double exact = two_bus_exact_pu(p, r, x, pf);
  CHECK(res.v_pu.at(2) == doctest::Approx(exact).epsilon(1e-9));
}

TEST_CASE("two-bus drop matches the approximate formula at light load") {
  // small load keeps the quadratic term below 1e-4 pu
  const double p = 2.0, r = 0.05, x = 0.02, pf = 0.95;
  auto res = solve_radial(two_bus(p, r, x, pf), 1e-12, 200);
  const double v0 = 400.0 / std::sqrt(3.0);
  const double pp = p * 1000.0 / 3.0;
  const double qq = pp * std::tan(std::acos(pf));
  const double approx = 1.0 - (r * pp + x * qq) / (v0 * v0);
  CHECK(std::abs(res.v_pu.at(2) - approx) < 1e-4);
}

TEST_CASE("doubling the load roughly doubles a small drop") {
  const double r = 0.05, x = 0.02;
  auto r1 = solve_radial(two_bus(3.0, r, x));
  auto r2 = solve_radial(two_bus(6.0, r, x));
  const double d1 = 1.0 - r1.v_pu.at(2);
  const double d2 = 1.0 - r2.v_pu.at(2);
  CHECK(d2 == doctest::Approx(2.0 * d1).epsilon(0.05));
}

TEST_CASE("power balance on random radial networks") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> rr(0.005, 0.05), pk(0.3, 6.0);
  for (int trial = 0; trial < 25; ++trial) {
    RadialNetwork net;
    net.slack = 1;
    std::uniform_int_distribution<int> nn(2, 20);
    const int n = nn(rng);
    for (int i = 2; i <= n; ++i) {
      std::uniform_int_distribution<int> par(1, i - 1);
      net.branches.push_back({par(rng), i, rr(rng), rr(rng) * 0.4, 150.0});
      if (rng() % 3 != 0) net.load_kw[i] = pk(rng);
    }
    auto res = solve_radial(net, 1e-10, 300);
    double loads = 0.0;
    for (const auto& [_, p] : net.load_kw) loads += p;
    CHECK(res.slack_injection_kw ==
          doctest::Approx(loads + res.losses_kw).epsilon(1e-6));
  }
}

TEST_CASE("voltage never rises along a path from the slack") {
  std::mt19937_64 rng(7);
  RadialNetwork net;
  net.slack = 1;
  net.power_factor = 1.0;  // unity pf loads
  std::map<NodeId, NodeId> parent;
  for (int i = 2; i <= 15; ++i) {
    std::uniform_int_distribution<int> par(1, i - 1);
    const NodeId p = par(rng);
    net.branches.push_back({p, i, 0.06, 0.02, 150.0});
    parent[i] = p;
    net.load_kw[i] = 4.0;
  }
  auto res = solve_radial(net);
  for (const auto& [bus, p] : parent) CHECK(res.v_pu.at(bus) <= res.v_pu.at(p) + 1e-12);
}

TEST_CASE("non-tree networks are rejected") {
  RadialNetwork net;
  net.slack = 1;
  net.branches.push_back({1, 2, 0.1, 0.0, 100.0});
  net.branches.push_back({1, 2, 0.1, 0.0, 100.0});  // double feed
  CHECK_THROWS(solve_radial(net));

  RadialNetwork net2;
  net2.slack = 1;
  net2.branches.push_back({3, 2, 0.1, 0.0, 100.0});  // floating
  CHECK_THROWS(solve_radial(net2));
}

TEST_CASE("quasi-dynamic series") {
  RadialNetwork net = two_bus(10.0, 0.05, 0.02);
  std::map<NodeId, std::vector<double>> series{{2, {10.0, 10.0, 0.0, 20.0}}};
  auto qd = quasi_dynamic(net, series, {0, 1, 2, 3});
  REQUIRE(qd.steps.size() == 4);
  // constant steps identical
  CHECK(qd.steps[0].v_pu.at(2) == doctest::Approx(qd.steps[1].v_pu.at(2)).epsilon(1e-12));
  // zero step is the no-load solution
  CHECK(qd.steps[2].v_pu.at(2) == doctest::Approx(1.0).epsilon(1e-12));
  // max loading over the horizon is the peak step's loading
  CHECK(qd.max_loading_pct.at({1, 2}) ==
        doctest::Approx(qd.steps[3].loading_pct.at({1, 2})).epsilon(1e-12));
}
