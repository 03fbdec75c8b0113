#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <deque>
#include <limits>
#include <vector>

#include "gridsynth/errors.hpp"

namespace gridsynth {

// Exact maximum-weight matching on a dense general graph (primal-dual
// blossom framework, O(n^3)). Weights are integers; duals are half-integral,
// handled by doubling inside the delta computation. Vertices are 1-based;
// indices above n are contracted blossoms.
class WeightedBlossom {
 public:
  explicit WeightedBlossom(int n) : n_(n), cap_(2 * n + 1) {
    g_.assign(cap_ * cap_, Edge{});
    for (int u = 1; u <= n_; ++u)
      for (int v = 1; v <= n_; ++v) edge(u, v) = Edge{u, v, 0};
    lab_.assign(cap_, 0);
    match_.assign(cap_, 0);
    slack_.assign(cap_, 0);
    st_.assign(cap_, 0);
    pa_.assign(cap_, 0);
    s_.assign(cap_, 0);
    vis_.assign(cap_, 0);
    flower_.assign(cap_, {});
    flower_from_.assign(cap_ * (n_ + 1), 0);
  }

  void set_weight(int u, int v, std::int64_t w) {
    edge(u, v).w = w;
    edge(v, u).w = w;
  }

  /// Runs the algorithm; match(u) is 0 for exposed vertices afterwards.
  std::int64_t solve() {
    std::fill(match_.begin() + 1, match_.begin() + n_ + 1, 0);
    n_x_ = n_;
    std::int64_t w_max = 0;
    for (int u = 0; u <= n_; ++u) {
      st_[u] = u;
      flower_[u].clear();
    }
    for (int u = 1; u <= n_; ++u)
      for (int v = 1; v <= n_; ++v) {
        flower_from(u, v) = (u == v ? u : 0);
        w_max = std::max(w_max, edge(u, v).w);
      }
    for (int u = 1; u <= n_; ++u) lab_[u] = w_max;
    while (grow()) {
    }
    std::int64_t total = 0;
    for (int u = 1; u <= n_; ++u)
      if (match_[u] && match_[u] < u) total += edge(u, match_[u]).w;
    return total;
  }

  int match(int u) const { return match_[u]; }

 private:
  struct Edge {
    int u = 0, v = 0;
    std::int64_t w = 0;
  };

  Edge& edge(int u, int v) { return g_[static_cast<std::size_t>(u) * cap_ + v]; }
  int& flower_from(int b, int x) { return flower_from_[static_cast<std::size_t>(b) * (n_ + 1) + x]; }

  std::int64_t e_delta(const Edge& e) { return lab_[e.u] + lab_[e.v] - edge(e.u, e.v).w * 2; }

  void update_slack(int u, int x) {
    if (!slack_[x] || e_delta(edge(u, x)) < e_delta(edge(slack_[x], x))) slack_[x] = u;
  }

  void set_slack(int x) {
    slack_[x] = 0;
    for (int u = 1; u <= n_; ++u)
      if (edge(u, x).w > 0 && st_[u] != x && s_[st_[u]] == 0) update_slack(u, x);
  }

  void q_push(int x) {
    if (x <= n_)
      q_.push_back(x);
    else
      for (int y : flower_[x]) q_push(y);
  }

  void set_st(int x, int b) {
    st_[x] = b;
    if (x > n_)
      for (int y : flower_[x]) set_st(y, b);
  }

  int get_pr(int b, int xr) {
    const int pr = static_cast<int>(std::find(flower_[b].begin(), flower_[b].end(), xr) -
                                    flower_[b].begin());
    if (pr % 2 == 1) {
      std::reverse(flower_[b].begin() + 1, flower_[b].end());
      return static_cast<int>(flower_[b].size()) - pr;
    }
    return pr;
  }

  void set_match(int u, int v) {
    match_[u] = edge(u, v).v;
    if (u > n_) {
      const Edge e = edge(u, v);
      const int xr = flower_from(u, e.u);
      const int pr = get_pr(u, xr);
      for (int i = 0; i < pr; ++i) set_match(flower_[u][i], flower_[u][i ^ 1]);
      set_match(xr, v);
      std::rotate(flower_[u].begin(), flower_[u].begin() + pr, flower_[u].end());
    }
  }

  void augment(int u, int v) {
    while (true) {
      const int xnv = st_[match_[u]];
      set_match(u, v);
      if (!xnv) return;
      set_match(xnv, st_[pa_[xnv]]);
      u = st_[pa_[xnv]];
      v = xnv;
    }
  }

  int get_lca(int u, int v) {
    ++timer_;
    while (u || v) {
      if (u) {
        if (vis_[u] == timer_) return u;
        vis_[u] = timer_;
        u = st_[match_[u]];
        if (u) u = st_[pa_[u]];
      }
      std::swap(u, v);
    }
    return 0;
  }

  void add_blossom(int u, int lca, int v) {
    int b = n_ + 1;
    while (b <= n_x_ && st_[b]) ++b;
    if (b > n_x_) ++n_x_;
    lab_[b] = 0;
    s_[b] = 0;
    match_[b] = match_[lca];
    flower_[b].clear();
    flower_[b].push_back(lca);
    for (int x = u, y; x != lca; x = st_[pa_[y]]) {
      flower_[b].push_back(x);
      flower_[b].push_back(y = st_[match_[x]]);
      q_push(y);
    }
    std::reverse(flower_[b].begin() + 1, flower_[b].end());
    for (int x = v, y; x != lca; x = st_[pa_[y]]) {
      flower_[b].push_back(x);
      flower_[b].push_back(y = st_[match_[x]]);
      q_push(y);
    }
    set_st(b, b);
    for (int x = 1; x <= n_x_; ++x) edge(b, x).w = edge(x, b).w = 0;
    for (int x = 1; x <= n_; ++x) flower_from(b, x) = 0;
    for (int xs : flower_[b]) {
      for (int x = 1; x <= n_x_; ++x)
        if (edge(b, x).w == 0 || e_delta(edge(xs, x)) < e_delta(edge(b, x))) {
          edge(b, x) = edge(xs, x);
          edge(x, b) = edge(x, xs);
        }
      for (int x = 1; x <= n_; ++x)
        if (flower_from(xs, x)) flower_from(b, x) = xs;
    }
    set_slack(b);
  }

  void expand_blossom(int b) {
    for (int xs : flower_[b]) set_st(xs, xs);
    const int xr = flower_from(b, edge(b, pa_[b]).u);
    const int pr = get_pr(b, xr);
    for (int i = 0; i < pr; i += 2) {
      const int xs = flower_[b][i];
      const int xns = flower_[b][i + 1];
      pa_[xs] = edge(xns, xs).u;
      s_[xs] = 1;
      s_[xns] = 0;
      slack_[xs] = 0;
      set_slack(xns);
      q_push(xns);
    }
    s_[xr] = 1;
    pa_[xr] = pa_[b];
    for (std::size_t i = pr + 1; i < flower_[b].size(); ++i) {
      const int xs = flower_[b][i];
      s_[xs] = -1;
      set_slack(xs);
    }
    st_[b] = 0;
  }

  bool on_found_edge(const Edge& e) {
    const int u = st_[e.u];
    const int v = st_[e.v];
    if (s_[v] == -1) {
      pa_[v] = e.u;
      s_[v] = 1;
      const int nu = st_[match_[v]];
      slack_[v] = slack_[nu] = 0;
      s_[nu] = 0;
      q_push(nu);
    } else if (s_[v] == 0) {
      const int lca = get_lca(u, v);
      if (!lca) {
        augment(u, v);
        augment(v, u);
        return true;
      }
      add_blossom(u, lca, v);
    }
    return false;
  }

  bool grow() {
    std::fill(s_.begin() + 1, s_.begin() + n_x_ + 1, -1);
    std::fill(slack_.begin() + 1, slack_.begin() + n_x_ + 1, 0);
    q_.clear();
    for (int x = 1; x <= n_x_; ++x)
      if (st_[x] == x && !match_[x]) {
        pa_[x] = 0;
        s_[x] = 0;
        q_push(x);
      }
    if (q_.empty()) return false;
    while (true) {
      while (!q_.empty()) {
        const int u = q_.front();
        q_.pop_front();
        if (s_[st_[u]] == 1) continue;
        for (int v = 1; v <= n_; ++v)
          if (edge(u, v).w > 0 && st_[u] != st_[v]) {
            if (e_delta(edge(u, v)) == 0) {
              if (on_found_edge(edge(u, v))) return true;
            } else {
              update_slack(u, st_[v]);
            }
          }
      }
      std::int64_t d = std::numeric_limits<std::int64_t>::max();
      for (int b = n_ + 1; b <= n_x_; ++b)
        if (st_[b] == b && s_[b] == 1) d = std::min(d, lab_[b] / 2);
      for (int x = 1; x <= n_x_; ++x)
        if (st_[x] == x && slack_[x]) {
          if (s_[x] == -1)
            d = std::min(d, e_delta(edge(slack_[x], x)));
          else if (s_[x] == 0)
            d = std::min(d, e_delta(edge(slack_[x], x)) / 2);
        }
      for (int u = 1; u <= n_; ++u) {
        if (s_[st_[u]] == 0) {
          if (lab_[u] <= d) return false;
          lab_[u] -= d;
        } else if (s_[st_[u]] == 1) {
          lab_[u] += d;
        }
      }
      for (int b = n_ + 1; b <= n_x_; ++b)
        if (st_[b] == b) {
          if (s_[st_[b]] == 0)
            lab_[b] += d * 2;
          else if (s_[st_[b]] == 1)
            lab_[b] -= d * 2;
        }
      q_.clear();
      for (int x = 1; x <= n_x_; ++x)
        if (st_[x] == x && slack_[x] && st_[slack_[x]] != x &&
            e_delta(edge(slack_[x], x)) == 0)
          if (on_found_edge(edge(slack_[x], x))) return true;
      for (int b = n_ + 1; b <= n_x_; ++b)
        if (st_[b] == b && s_[b] == 1 && lab_[b] == 0) expand_blossom(b);
    }
  }

  int n_;
  int n_x_ = 0;
  int cap_;
  std::vector<Edge> g_;
  std::vector<std::int64_t> lab_;
  std::vector<int> match_, slack_, st_, pa_, s_, vis_;
  std::vector<std::vector<int>> flower_;
  std::vector<int> flower_from_;
  std::deque<int> q_;
  int timer_ = 0;
};

/// Exact minimum-weight perfect matching on a complete graph given by a
/// dense weight matrix (meters). n must be even. Returns pairs (i, j), i < j.
/// Weights are discretized to micrometers before running the blossom solver;
/// a maximum matching of the complement weights is perfect because every
/// complement weight is positive.
inline std::vector<std::pair<int, int>> min_weight_perfect_matching(
    const std::vector<std::vector<double>>& w) {
  const int n = static_cast<int>(w.size());
  if (n == 0) return {};
  if (n % 2 != 0) throw Error("perfect matching needs an even vertex count");
  constexpr double kScale = 1e6;  // micrometer resolution
  std::int64_t w_max = 0;
  std::vector<std::vector<std::int64_t>> iw(n, std::vector<std::int64_t>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      iw[i][j] = static_cast<std::int64_t>(std::llround(w[i][j] * kScale));
      if (iw[i][j] < 0) throw Error("matching weights must be non-negative");
      w_max = std::max(w_max, iw[i][j]);
    }
  WeightedBlossom solver(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) solver.set_weight(i + 1, j + 1, w_max + 1 - iw[i][j]);
  solver.solve();
  std::vector<std::pair<int, int>> out;
  for (int u = 1; u <= n; ++u) {
    const int v = solver.match(u);
    if (v == 0) throw Error("matching is not perfect");
    if (u < v) out.push_back({u - 1, v - 1});
  }
  return out;
}

}  // namespace gridsynth
