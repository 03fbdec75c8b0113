#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace gridsynth {

// Mean Earth radius (IUGG), meters.
inline constexpr double kEarthRadiusM = 6371008.8;

struct GeoPoint {
  double lat = 0.0;  // degrees, WGS84
  double lon = 0.0;  // degrees, WGS84

  bool operator==(const GeoPoint&) const = default;
};

inline bool valid(const GeoPoint& p) {
  return p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

/// Great-circle distance between two WGS84 points, meters.
inline double haversine_m(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = deg2rad(a.lat);
  const double phi2 = deg2rad(b.lat);
  const double dphi = deg2rad(b.lat - a.lat);
  const double dlam = deg2rad(b.lon - a.lon);
  const double s = std::sin(dphi / 2.0);
  const double t = std::sin(dlam / 2.0);
  const double h = s * s + std::cos(phi1) * std::cos(phi2) * t * t;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

struct XY {
  double x = 0.0;  // meters east
  double y = 0.0;  // meters north
};

// Equirectangular tangent frame anchored at `origin`. Only used for local
// constructions (projections, centroids, clustering) at sub-kilometer
// extent; all reported lengths stay haversine.
class LocalFrame {
 public:
  explicit LocalFrame(GeoPoint origin)
      : origin_(origin), coslat_(std::cos(deg2rad(origin.lat))) {}

  XY to_xy(const GeoPoint& p) const {
    return {kEarthRadiusM * deg2rad(p.lon - origin_.lon) * coslat_,
            kEarthRadiusM * deg2rad(p.lat - origin_.lat)};
  }

  GeoPoint to_geo(const XY& q) const {
    return {origin_.lat + rad2deg(q.y / kEarthRadiusM),
            origin_.lon + rad2deg(q.x / (kEarthRadiusM * coslat_))};
  }

  const GeoPoint& origin() const { return origin_; }

 private:
  GeoPoint origin_;
  double coslat_;
};

/// Mean of the polygon vertices; used only as a frame anchor.
inline GeoPoint vertex_mean(const std::vector<GeoPoint>& poly) {
  double lat = 0.0, lon = 0.0;
  for (const auto& p : poly) {
    lat += p.lat;
    lon += p.lon;
  }
  const double n = static_cast<double>(poly.size());
  return {lat / n, lon / n};
}

namespace detail {

// Shoelace in a local tangent frame. `poly` is closed implicitly
// (last vertex need not repeat the first).
inline double signed_area_xy(const std::vector<XY>& q) {
  double a = 0.0;
  const std::size_t n = q.size();
  for (std::size_t i = 0; i < n; ++i) {
    const XY& p0 = q[i];
    const XY& p1 = q[(i + 1) % n];
    a += p0.x * p1.y - p1.x * p0.y;
  }
  return 0.5 * a;
}

}  // namespace detail

/// Geodesic shoelace area of a closed footprint polygon, m^2.
inline double polygon_area_m2(const std::vector<GeoPoint>& poly) {
  if (poly.size() < 3) throw std::invalid_argument("polygon needs >= 3 vertices");
  LocalFrame frame(vertex_mean(poly));
  std::vector<XY> q;
  q.reserve(poly.size());
  for (const auto& p : poly) q.push_back(frame.to_xy(p));
  return std::abs(detail::signed_area_xy(q));
}

/// Area centroid of a closed footprint polygon.
inline GeoPoint polygon_centroid(const std::vector<GeoPoint>& poly) {
  if (poly.size() < 3) throw std::invalid_argument("polygon needs >= 3 vertices");
  LocalFrame frame(vertex_mean(poly));
  std::vector<XY> q;
  q.reserve(poly.size());
  for (const auto& p : poly) q.push_back(frame.to_xy(p));
  const double a = detail::signed_area_xy(q);
  if (std::abs(a) < 1e-12) return frame.origin();  // degenerate: fall back to vertex mean
  double cx = 0.0, cy = 0.0;
  const std::size_t n = q.size();
  for (std::size_t i = 0; i < n; ++i) {
    const XY& p0 = q[i];
    const XY& p1 = q[(i + 1) % n];
    const double cross = p0.x * p1.y - p1.x * p0.y;
    cx += (p0.x + p1.x) * cross;
    cy += (p0.y + p1.y) * cross;
  }
  return frame.to_geo({cx / (6.0 * a), cy / (6.0 * a)});
}

struct SegmentProjection {
  double t = 0.0;        // clamped parameter along a->b, [0,1]
  GeoPoint foot;         // projected point
  double distance_m = 0.0;
};

/// Orthogonal projection of `p` onto segment a->b in the local frame of `p`.
inline SegmentProjection project_onto_segment(const GeoPoint& p, const GeoPoint& a,
                                              const GeoPoint& b) {
  LocalFrame frame(p);
  const XY qa = frame.to_xy(a);
  const XY qb = frame.to_xy(b);
  const double dx = qb.x - qa.x;
  const double dy = qb.y - qa.y;
  const double len2 = dx * dx + dy * dy;
  SegmentProjection out;
  if (len2 <= 0.0) {
    out.t = 0.0;
  } else {
    // p is the frame origin (0,0)
    const double t = -(qa.x * dx + qa.y * dy) / len2;
    out.t = std::clamp(t, 0.0, 1.0);
  }
  out.foot = frame.to_geo({qa.x + out.t * dx, qa.y + out.t * dy});
  out.distance_m = haversine_m(p, out.foot);
  return out;
}

/// Point at fraction `t` along the great-circle-short segment a->b
/// (linear interpolation in lat/lon; adequate at street scale).
inline GeoPoint interpolate(const GeoPoint& a, const GeoPoint& b, double t) {
  return {a.lat + (b.lat - a.lat) * t, a.lon + (b.lon - a.lon) * t};
}

}  // namespace gridsynth
