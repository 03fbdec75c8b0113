#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "gridsynth/errors.hpp"
#include "gridsynth/flow.hpp"
#include "gridsynth/milp.hpp"

namespace gridsynth {

struct CceStats {
  int iterations = 0;
  int milp_solves = 0;  // real branch-and-bound runs
  int cache_hits = 0;   // iterations settled by the monotonicity shortcut
  double milp_wall_s = 0.0;
  std::vector<int> capacity_sequence;
};

struct CceResult {
  LvSolution solution;
  CceStats stats;
};

/// Next capacity of the inverse-proportional schedule; iterations are
/// indexed from i = 1, so the first shrink factor is 1 - 1/(1+N).
inline int ip_cce_next_cap(int cap, int iteration, int n_param) {
  return static_cast<int>(std::llround(cap * (1.0 - 1.0 / (iteration + n_param))));
}

/// The full capacity sequence starting at cap0 until the rounding fixpoint
/// (or zero), for inspection and tests.
inline std::vector<int> ip_cce_schedule(int cap0, int n_param, int max_len = 1000) {
  std::vector<int> seq{cap0};
  int cap = cap0;
  for (int i = 1; static_cast<int>(seq.size()) < max_len; ++i) {
    const int next = ip_cce_next_cap(cap, i, n_param);
    if (next >= cap || next <= 0) break;
    seq.push_back(next);
    cap = next;
  }
  return seq;
}

namespace cce_detail {

// The optimal objective is monotone non-increasing in cap, so a cached
// optimal forest that still fits under the tighter cap is provably optimal
// there too; only violating caps force a fresh solve.
inline bool fits_under_cap(const LvSolution& sol, double cap) {
  for (const auto& e : sol.edges)
    if (e.kind == EdgeKind::road && e.flow_kw > cap + kFlowTolKw) return false;
  return true;
}

struct IterationOutcome {
  bool feasible = false;
  bool from_cache = false;
  LvSolution solution;
  std::string infeasibility;
};

inline IterationOutcome solve_at_cap(const FlowInstance& base, int cap,
                                     const std::optional<LvSolution>& cached,
                                     const MilpOptions& opt, CceStats& stats) {
  IterationOutcome out;
  if (cached && fits_under_cap(*cached, cap)) {
    out.feasible = true;
    out.from_cache = true;
    out.solution = *cached;
    ++stats.cache_hits;
    return out;
  }
  MilpOptions warm = opt;
  if (cached) {
    for (const auto& e : cached->edges) warm.warm_start.push_back({e.from, e.to});
    // the optimum is monotone in cap, so the cached objective bounds this one
    warm.lower_bound_hint = cached->objective_m;
  }
  auto res = solve_milp(base.with_road_cap(static_cast<double>(cap)), warm);
  ++stats.milp_solves;
  stats.milp_wall_s += res.stats.wall_s;
  if (res.status == MilpStatus::optimal) {
    out.feasible = true;
    out.solution = std::move(res.solution);
  } else {
    out.infeasibility = res.infeasibility;
  }
  return out;
}

}  // namespace cce_detail

/// Inverse-proportional cable capacity estimation: shrink the road-edge cap
/// by the schedule until the MILP turns infeasible (the last feasible
/// solution wins) or the rounded cap stops decreasing.
inline CceResult ip_cce(const FlowInstance& instance, int cap0, int n_param = 4,
                        const MilpOptions& opt = {}) {
  if (cap0 < 1) throw SolveError("ip_cce: cap0 must be >= 1");
  CceResult res;
  std::optional<LvSolution> last_feasible;
  int last_cap = 0;

  int cap = cap0;
  for (int i = 1;; ++i) {
    res.stats.capacity_sequence.push_back(cap);
    ++res.stats.iterations;
    auto it = cce_detail::solve_at_cap(instance, cap, last_feasible, opt, res.stats);
    if (!it.feasible) {
      if (!last_feasible)
        throw SolveError("ip_cce: infeasible at cap0 = " + std::to_string(cap0) +
                         " (" + it.infeasibility + "); start with a larger cap0");
      break;  // last feasible iteration is selected
    }
    last_feasible = std::move(it.solution);
    last_cap = cap;
    const int next = ip_cce_next_cap(cap, i, n_param);
    if (next >= cap || next <= 0) break;  // rounding fixpoint
    cap = next;
  }

  res.solution = *last_feasible;
  res.solution.achieved_cap_kw = last_cap;
  res.solution.iterations = res.stats.iterations;
  return res;
}

/// Newton-bisection capacity estimation: bisect on the integer capacity
/// between known-feasible and known-infeasible bounds until adjacent.
inline CceResult nb_cce(const FlowInstance& instance, int cap0, int cap_min = 1,
                        const MilpOptions& opt = {}) {
  if (cap0 < cap_min) throw SolveError("nb_cce: cap0 must be >= cap_min");
  CceResult res;
  std::optional<LvSolution> best;

  ++res.stats.iterations;
  res.stats.capacity_sequence.push_back(cap0);
  auto first = cce_detail::solve_at_cap(instance, cap0, std::nullopt, opt, res.stats);
  if (!first.feasible)
    throw SolveError("nb_cce: infeasible at cap0 = " + std::to_string(cap0) + " (" +
                     first.infeasibility + "); start with a larger cap0");
  best = std::move(first.solution);
  int hi = cap0;             // known feasible
  int lo = cap_min - 1;      // treated as infeasible

  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    ++res.stats.iterations;
    res.stats.capacity_sequence.push_back(mid);
    auto it = cce_detail::solve_at_cap(instance, mid, best, opt, res.stats);
    if (it.feasible) {
      best = std::move(it.solution);
      hi = mid;
    } else {
      lo = mid;
    }
  }

  res.solution = *best;
  res.solution.achieved_cap_kw = hi;
  res.solution.iterations = res.stats.iterations;
  return res;
}

}  // namespace gridsynth
