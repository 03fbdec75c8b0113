#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "gridsynth/errors.hpp"

namespace gridsynth {

struct WeightedPoint {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
};

struct KMeansResult {
  std::vector<std::pair<double, double>> centers;
  std::vector<int> assignment;  // per input point
  double wcss = 0.0;            // weighted within-cluster sum of squares
};

namespace detail {

inline double sq(double v) { return v * v; }

inline double dist2(const WeightedPoint& p, const std::pair<double, double>& c) {
  return sq(p.x - c.first) + sq(p.y - c.second);
}

inline KMeansResult lloyd_once(const std::vector<WeightedPoint>& pts, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t n = pts.size();

  // k-means++ seeding on weighted squared distances
  std::vector<std::pair<double, double>> centers;
  {
    std::vector<double> cum(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += pts[i].w;
      cum[i] = total;
    }
    std::uniform_real_distribution<double> uni(0.0, total);
    const double r0 = uni(rng);
    std::size_t first = 0;
    while (first + 1 < n && cum[first] < r0) ++first;
    centers.push_back({pts[first].x, pts[first].y});
    std::vector<double> d2(n);
    while (static_cast<int>(centers.size()) < k) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : centers) best = std::min(best, dist2(pts[i], c));
        d2[i] = best * pts[i].w;
        s += d2[i];
      }
      std::size_t pick = 0;
      if (s > 0.0) {
        std::uniform_real_distribution<double> u(0.0, s);
        double r = u(rng);
        while (pick + 1 < n && r > d2[pick]) r -= d2[pick++];
      } else {
        pick = centers.size() % n;
      }
      centers.push_back({pts[pick].x, pts[pick].y});
    }
  }

  std::vector<int> assign(n, 0);
  for (int iter = 0; iter < 200; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int bi = 0;
      for (int c = 0; c < k; ++c) {
        const double d = dist2(pts[i], centers[c]);
        if (d < best) {
          best = d;
          bi = c;
        }
      }
      assign[i] = bi;
    }

    std::vector<double> sx(k, 0.0), sy(k, 0.0), sw(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      sx[assign[i]] += pts[i].w * pts[i].x;
      sy[assign[i]] += pts[i].w * pts[i].y;
      sw[assign[i]] += pts[i].w;
    }

    // reseed empty clusters at the point farthest from the stale center
    for (int c = 0; c < k; ++c) {
      if (sw[c] > 0.0) continue;
      double far = -1.0;
      std::size_t fi = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = dist2(pts[i], centers[c]);
        if (d > far) {
          far = d;
          fi = i;
        }
      }
      sx[c] = pts[fi].w * pts[fi].x;
      sy[c] = pts[fi].w * pts[fi].y;
      sw[c] = pts[fi].w;
    }

    double moved = 0.0;
    for (int c = 0; c < k; ++c) {
      const std::pair<double, double> nc{sx[c] / sw[c], sy[c] / sw[c]};
      moved = std::max(moved, sq(nc.first - centers[c].first) + sq(nc.second - centers[c].second));
      centers[c] = nc;
    }
    if (moved < 1e-18) break;
  }

  KMeansResult out;
  out.centers = std::move(centers);
  out.assignment.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int bi = 0;
    for (int c = 0; c < k; ++c) {
      const double d = dist2(pts[i], out.centers[c]);
      if (d < best) {
        best = d;
        bi = c;
      }
    }
    out.assignment[i] = bi;
    out.wcss += pts[i].w * best;
  }
  return out;
}

}  // namespace detail

/// Weighted k-means with deterministic k-means++ restarts; the restart with
/// the lowest weighted WCSS wins (first one on ties).
inline KMeansResult weighted_kmeans(const std::vector<WeightedPoint>& pts, int k,
                                    std::uint64_t seed, int restarts = 10) {
  if (k < 1) throw Error("k-means: k must be >= 1");
  if (pts.size() < static_cast<std::size_t>(k))
    throw Error("k-means: k exceeds number of points");
  double total_w = 0.0;
  for (const auto& p : pts) {
    if (!(p.w >= 0.0)) throw Error("k-means: negative weight");
    total_w += p.w;
  }
  if (!(total_w > 0.0)) throw Error("k-means: all weights zero");

  KMeansResult best;
  bool have = false;
  for (int r = 0; r < restarts; ++r) {
    auto res = detail::lloyd_once(pts, k, seed + static_cast<std::uint64_t>(r) * 0x9e3779b9ULL);
    if (!have || res.wcss < best.wcss) {
      best = std::move(res);
      have = true;
    }
  }
  return best;
}

}  // namespace gridsynth
