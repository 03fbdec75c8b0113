#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "gridsynth/errors.hpp"
#include "gridsynth/matching.hpp"

namespace gridsynth {

/// Prim MST on a dense symmetric matrix; ties resolve to the smallest index.
/// Returns parent[] with parent[0] = -1.
inline std::vector<int> dense_mst(const std::vector<std::vector<double>>& d) {
  const int n = static_cast<int>(d.size());
  std::vector<int> parent(n, -1);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<bool> used(n, false);
  best[0] = 0.0;
  for (int it = 0; it < n; ++it) {
    int u = -1;
    for (int v = 0; v < n; ++v)
      if (!used[v] && (u == -1 || best[v] < best[u])) u = v;
    used[u] = true;
    for (int v = 0; v < n; ++v)
      if (!used[v] && d[u][v] < best[v]) {
        best[v] = d[u][v];
        parent[v] = u;
      }
  }
  return parent;
}

/// Christofides tour on a metric distance matrix: MST + exact minimum-weight
/// perfect matching on the odd-degree vertices + Euler shortcutting. Returns
/// the visiting order as matrix indices, starting at 0, without the closing
/// return to 0.
inline std::vector<int> christofides_tour(const std::vector<std::vector<double>>& d) {
  const int n = static_cast<int>(d.size());
  if (n == 0) throw Error("christofides: empty instance");
  if (n == 1) return {0};
  if (n == 2) return {0, 1};

  const auto parent = dense_mst(d);

  std::vector<int> degree(n, 0);
  std::vector<std::vector<int>> multi(n);
  for (int v = 1; v < n; ++v) {
    multi[v].push_back(parent[v]);
    multi[parent[v]].push_back(v);
    ++degree[v];
    ++degree[parent[v]];
  }

  std::vector<int> odd;
  for (int v = 0; v < n; ++v)
    if (degree[v] % 2 == 1) odd.push_back(v);

  if (!odd.empty()) {
    std::vector<std::vector<double>> sub(odd.size(), std::vector<double>(odd.size(), 0.0));
    for (std::size_t i = 0; i < odd.size(); ++i)
      for (std::size_t j = 0; j < odd.size(); ++j) sub[i][j] = d[odd[i]][odd[j]];
    for (auto [i, j] : min_weight_perfect_matching(sub)) {
      multi[odd[i]].push_back(odd[j]);
      multi[odd[j]].push_back(odd[i]);
    }
  }

  // Hierholzer Euler circuit over the MST+matching multigraph
  std::vector<std::size_t> next(n, 0);
  std::vector<std::vector<bool>> used(n);
  for (int v = 0; v < n; ++v) used[v].assign(multi[v].size(), false);
  std::vector<int> stack{0}, euler;
  while (!stack.empty()) {
    const int v = stack.back();
    bool advanced = false;
    while (next[v] < multi[v].size()) {
      const std::size_t ei = next[v]++;
      if (used[v][ei]) continue;
      const int u = multi[v][ei];
      used[v][ei] = true;
      // mark the partner copy at u
      for (std::size_t k = 0; k < multi[u].size(); ++k)
        if (!used[u][k] && multi[u][k] == v) {
          used[u][k] = true;
          break;
        }
      stack.push_back(u);
      advanced = true;
      break;
    }
    if (!advanced) {
      euler.push_back(v);
      stack.pop_back();
    }
  }

  std::vector<bool> seen(n, false);
  std::vector<int> tour;
  for (int v : euler)
    if (!seen[v]) {
      seen[v] = true;
      tour.push_back(v);
    }
  if (static_cast<int>(tour.size()) != n) throw Error("christofides: multigraph not connected");

  // rotate to start at 0 and pick the lexicographically smaller direction
  const auto it = std::find(tour.begin(), tour.end(), 0);
  std::rotate(tour.begin(), it, tour.end());
  std::vector<int> rev{0};
  for (std::size_t i = tour.size() - 1; i >= 1; --i) rev.push_back(tour[i]);
  if (rev < tour) tour = rev;
  return tour;
}

inline double tour_length(const std::vector<std::vector<double>>& d, const std::vector<int>& tour) {
  double len = 0.0;
  for (std::size_t i = 0; i < tour.size(); ++i)
    len += d[tour[i]][tour[(i + 1) % tour.size()]];
  return len;
}

}  // namespace gridsynth
