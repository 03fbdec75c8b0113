#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <vector>

#include "gridsynth/errors.hpp"
#include "gridsynth/street_graph.hpp"

namespace gridsynth {

// Radial 400 V network for the backward/forward sweep: one tree per
// substation, slack at the transformer LV bus, balanced single-phase
// equivalent with constant-power loads.
struct RadialBranch {
  NodeId from = 0;  // toward the slack
  NodeId to = 0;
  double r_ohm = 0.0;
  double x_ohm = 0.0;
  double ampacity_a = 0.0;
};

struct RadialNetwork {
  NodeId slack = 0;
  double u_base_kv = 0.4;  // line-to-line
  std::vector<RadialBranch> branches;
  std::map<NodeId, double> load_kw;  // three-phase totals at buses
  double power_factor = 0.95;

  void validate() const {
    std::map<NodeId, int> indeg;
    std::map<NodeId, bool> known{{slack, true}};
    for (const auto& b : branches) {
      if (!(b.r_ohm > 0.0) || b.x_ohm < 0.0)
        throw Error("radial network: branch impedance must be positive");
      if (++indeg[b.to] > 1) throw Error("radial network: bus fed twice");
      known[b.to] = true;
      known[b.from];
    }
    // every branch head must eventually reach the slack
    std::map<NodeId, NodeId> parent;
    for (const auto& b : branches) parent[b.to] = b.from;
    for (const auto& b : branches) {
      NodeId cur = b.to;
      std::size_t hops = 0;
      while (cur != slack) {
        auto it = parent.find(cur);
        if (it == parent.end()) throw Error("radial network: bus not connected to slack");
        cur = it->second;
        if (++hops > branches.size() + 1) throw Error("radial network: cycle detected");
      }
    }
    for (const auto& [bus, p] : load_kw)
      if (!known.count(bus) && bus != slack)
        throw Error("radial network: load at unknown bus " + std::to_string(bus));
  }
};

struct FlowResult {
  std::map<NodeId, double> v_pu;
  std::map<std::pair<NodeId, NodeId>, double> current_a;
  std::map<std::pair<NodeId, NodeId>, double> loading_pct;  // of ampacity
  double losses_kw = 0.0;
  double slack_injection_kw = 0.0;
  int iterations = 0;
};

/// Backward/forward sweep to `tol` pu on the maximum voltage change.
inline FlowResult solve_radial(const RadialNetwork& net, double tol = 1e-8, int max_iter = 100) {
  net.validate();
  using cplx = std::complex<double>;
  const double v_base_ph = net.u_base_kv * 1000.0 / std::sqrt(3.0);
  const double tan_phi =
      std::tan(std::acos(std::clamp(net.power_factor, 1e-9, 1.0)));

  // order buses from the slack outward
  std::vector<NodeId> order{net.slack};
  std::map<NodeId, std::vector<std::size_t>> children;
  std::map<NodeId, std::size_t> branch_into;
  for (std::size_t i = 0; i < net.branches.size(); ++i) {
    children[net.branches[i].from].push_back(i);
    branch_into[net.branches[i].to] = i;
  }
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::size_t bi : children[order[i]]) order.push_back(net.branches[bi].to);

  std::map<NodeId, cplx> v;
  for (NodeId bus : order) v[bus] = cplx(v_base_ph, 0.0);

  std::map<NodeId, cplx> s_load;  // per-phase VA
  for (const auto& [bus, p_kw] : net.load_kw)
    s_load[bus] = cplx(p_kw * 1000.0 / 3.0, p_kw * 1000.0 / 3.0 * tan_phi);

  std::map<std::size_t, cplx> branch_i;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    // backward: accumulate currents leaf -> slack
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const NodeId bus = *it;
      cplx i_bus(0.0, 0.0);
      if (auto sit = s_load.find(bus); sit != s_load.end())
        i_bus += std::conj(sit->second / v[bus]);
      for (std::size_t bi : children[bus]) i_bus += branch_i[bi];
      if (auto bit = branch_into.find(bus); bit != branch_into.end()) branch_i[bit->second] = i_bus;
    }
    // forward: update voltages slack -> leaves
    double moved = 0.0;
    for (NodeId bus : order) {
      if (bus == net.slack) continue;
      const std::size_t bi = branch_into.at(bus);
      const RadialBranch& b = net.branches[bi];
      const cplx z(b.r_ohm, b.x_ohm);
      const cplx nv = v[b.from] - z * branch_i[bi];
      moved = std::max(moved, std::abs(nv - v[bus]) / v_base_ph);
      v[bus] = nv;
      if (std::abs(nv) / v_base_ph < 0.5)
        throw SolveError("power flow diverged: voltage below 0.5 pu at bus " +
                         std::to_string(bus));
    }
    if (moved < tol) break;
  }
  if (iter >= max_iter)
    throw SolveError("power flow did not converge within " + std::to_string(max_iter) +
                     " iterations");

  FlowResult out;
  out.iterations = iter + 1;
  for (const auto& [bus, volt] : v) out.v_pu[bus] = std::abs(volt) / v_base_ph;
  cplx s_slack(0.0, 0.0);
  for (std::size_t bi = 0; bi < net.branches.size(); ++bi) {
    const RadialBranch& b = net.branches[bi];
    const cplx i = branch_i.count(bi) ? branch_i[bi] : cplx(0.0, 0.0);
    const double amps = std::abs(i);
    out.current_a[{b.from, b.to}] = amps;
    out.loading_pct[{b.from, b.to}] = b.ampacity_a > 0.0 ? amps / b.ampacity_a * 100.0 : 0.0;
    out.losses_kw += 3.0 * amps * amps * b.r_ohm / 1000.0;
    if (b.from == net.slack) s_slack += v[net.slack] * std::conj(i);
  }
  out.slack_injection_kw = 3.0 * s_slack.real() / 1000.0;
  if (auto it = net.load_kw.find(net.slack); it != net.load_kw.end())
    out.slack_injection_kw += it->second;  // served locally, no line flow
  return out;
}

/// Independent solve per timestamp; returns per-step results plus the
/// per-branch maximum loading over the horizon.
struct QuasiDynamicResult {
  std::vector<FlowResult> steps;
  std::map<std::pair<NodeId, NodeId>, double> max_loading_pct;
};

inline QuasiDynamicResult quasi_dynamic(RadialNetwork net,
                                        const std::map<NodeId, std::vector<double>>& series_kw,
                                        const std::vector<std::size_t>& timestamps) {
  QuasiDynamicResult out;
  for (std::size_t t : timestamps) {
    for (auto& [bus, p] : net.load_kw) {
      auto it = series_kw.find(bus);
      if (it == series_kw.end()) continue;
      if (t >= it->second.size())
        throw SolveError("quasi_dynamic: timestamp " + std::to_string(t) +
                         " beyond series length");
      p = it->second[t];
    }
    try {
      out.steps.push_back(solve_radial(net));
    } catch (const SolveError& e) {
      throw SolveError("at timestamp " + std::to_string(t) + ": " + e.what());
    }
    for (const auto& [branch, pct] : out.steps.back().loading_pct) {
      auto it = out.max_loading_pct.find(branch);
      if (it == out.max_loading_pct.end() || pct > it->second)
        out.max_loading_pct[branch] = pct;
    }
  }
  return out;
}

}  // namespace gridsynth
