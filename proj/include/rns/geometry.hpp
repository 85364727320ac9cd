// Copyright 2026 The Risk Navigation Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rns
{

/// Raised when an input violates a documented precondition (bad coordinates,
/// degenerate polylines, ...).
class DomainError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

namespace geometry
{

inline constexpr double kEarthRadius = 6'371'000.0;
inline constexpr double kMinSpacing = 1e-3;

struct GeoPoint
{
  double lat{0.0};
  double lon{0.0};
  double alt{0.0};
};

struct LocalPoint
{
  double x{0.0};
  double y{0.0};
  double z{0.0};

  friend bool operator==(const LocalPoint &, const LocalPoint &) = default;
};

inline LocalPoint operator+(const LocalPoint & a, const LocalPoint & b)
{
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}
inline LocalPoint operator-(const LocalPoint & a, const LocalPoint & b)
{
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}
inline LocalPoint operator*(const LocalPoint & a, double k) { return {a.x * k, a.y * k, a.z * k}; }

/// Planar helpers; altitude only rides along.
inline double dot2(const LocalPoint & a, const LocalPoint & b) { return a.x * b.x + a.y * b.y; }
inline double cross2(const LocalPoint & a, const LocalPoint & b) { return a.x * b.y - a.y * b.x; }
inline double norm2(const LocalPoint & a) { return std::hypot(a.x, a.y); }
inline double dist2(const LocalPoint & a, const LocalPoint & b) { return norm2(b - a); }
inline LocalPoint lerp(const LocalPoint & a, const LocalPoint & b, double t)
{
  return a + (b - a) * t;
}

/// Wraps an angle to (-pi, pi].
inline double normalize_angle(double a)
{
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

inline void validate(const GeoPoint & p)
{
  if (!std::isfinite(p.lat) || !std::isfinite(p.lon) || p.lat < -90.0 || p.lat > 90.0 ||
      p.lon < -180.0 || p.lon > 180.0) {
    throw DomainError(
      "invalid WGS84 coordinate (" + std::to_string(p.lat) + ", " + std::to_string(p.lon) + ")");
  }
}

/// Equirectangular tangent-plane projection around `origin` (x east, y north).
inline LocalPoint to_local(const GeoPoint & origin, const GeoPoint & p)
{
  validate(origin);
  validate(p);
  const double dlon = deg2rad(p.lon - origin.lon);
  const double dlat = deg2rad(p.lat - origin.lat);
  return {
    kEarthRadius * dlon * std::cos(deg2rad(origin.lat)), kEarthRadius * dlat, p.alt - origin.alt};
}

inline GeoPoint to_geo(const GeoPoint & origin, const LocalPoint & p)
{
  validate(origin);
  const double c = std::cos(deg2rad(origin.lat));
  if (c <= 0.0) throw DomainError("projection origin at a pole");
  GeoPoint g{
    origin.lat + rad2deg(p.y / kEarthRadius), origin.lon + rad2deg(p.x / (kEarthRadius * c)),
    origin.alt + p.z};
  validate(g);
  return g;
}

/// Ordered point sequence with cached cumulative arc length. Consecutive
/// points are at least kMinSpacing apart.
class Polyline
{
public:
  Polyline() = default;

  explicit Polyline(std::vector<LocalPoint> points) : points_(std::move(points))
  {
    if (points_.size() < 2) throw DomainError("polyline needs at least 2 points");
    cumulative_.reserve(points_.size());
    cumulative_.push_back(0.0);
    for (std::size_t i = 1; i < points_.size(); ++i) {
      if (!std::isfinite(points_[i].x) || !std::isfinite(points_[i].y)) {
        throw DomainError("polyline point is not finite");
      }
      const double d = dist2(points_[i - 1], points_[i]);
      if (d < kMinSpacing) throw DomainError("polyline has coincident consecutive points");
      cumulative_.push_back(cumulative_.back() + d);
    }
  }

  /// Drops points closer than kMinSpacing to their predecessor, then builds.
  static Polyline cleaned(std::span<const LocalPoint> points)
  {
    std::vector<LocalPoint> out;
    out.reserve(points.size());
    for (const auto & p : points) {
      if (out.empty() || dist2(out.back(), p) >= kMinSpacing) out.push_back(p);
    }
    return Polyline(std::move(out));
  }

  [[nodiscard]] const std::vector<LocalPoint> & points() const { return points_; }
  [[nodiscard]] const std::vector<double> & cumulative_arclength() const { return cumulative_; }
  [[nodiscard]] std::size_t size() const { return points_.size(); }
  [[nodiscard]] bool empty() const { return points_.empty(); }
  [[nodiscard]] double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  [[nodiscard]] const LocalPoint & front() const { return points_.front(); }
  [[nodiscard]] const LocalPoint & back() const { return points_.back(); }

  /// Index of the segment containing arc length `s` (clamped).
  [[nodiscard]] std::size_t segment_at(double s) const
  {
    if (s <= 0.0) return 0;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    auto idx = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
    return std::min(idx == 0 ? 0 : idx - 1, points_.size() - 2);
  }

  [[nodiscard]] LocalPoint point_at(double s) const
  {
    if (s <= 0.0) return points_.front();
    if (s >= length()) return points_.back();
    const std::size_t i = segment_at(s);
    const double seg = cumulative_[i + 1] - cumulative_[i];
    return lerp(points_[i], points_[i + 1], (s - cumulative_[i]) / seg);
  }

  /// Heading (east = 0, CCW) of the segment containing `s`.
  [[nodiscard]] double heading_at(double s) const
  {
    const std::size_t i = segment_at(s);
    const LocalPoint d = points_[i + 1] - points_[i];
    return std::atan2(d.y, d.x);
  }

  [[nodiscard]] double start_heading() const { return heading_at(0.0); }
  [[nodiscard]] double end_heading() const { return heading_at(length()); }

  /// Piece between arc lengths s0 < s1, or nullopt-like empty polyline when
  /// the piece is shorter than kMinSpacing.
  [[nodiscard]] Polyline slice(double s0, double s1) const
  {
    s0 = std::clamp(s0, 0.0, length());
    s1 = std::clamp(s1, 0.0, length());
    if (s1 - s0 < kMinSpacing) return {};
    std::vector<LocalPoint> pts;
    pts.push_back(point_at(s0));
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (cumulative_[i] > s0 && cumulative_[i] < s1) pts.push_back(points_[i]);
    }
    pts.push_back(point_at(s1));
    return cleaned(pts);
  }

private:
  std::vector<LocalPoint> points_;
  std::vector<double> cumulative_;
};

/// Appends `piece` to `acc`, skipping a leading point that duplicates the
/// current tail.
inline void append_points(std::vector<LocalPoint> & acc, std::span<const LocalPoint> piece)
{
  for (const auto & p : piece) {
    if (acc.empty() || dist2(acc.back(), p) >= kMinSpacing) acc.push_back(p);
  }
}

struct CurvatureSample
{
  double s_along{0.0};
  double kappa{0.0};  // 1/m, left positive
};

using CurvatureProfile = std::vector<CurvatureSample>;

/// Equal spacing along arc length; the final piece may be shorter.
inline Polyline resample(const Polyline & poly, double step)
{
  if (!(step > 0.0)) throw DomainError("resample step must be positive");
  if (poly.size() < 2) throw DomainError("cannot resample a degenerate polyline");
  const double total = poly.length();
  std::vector<LocalPoint> pts;
  pts.reserve(static_cast<std::size_t>(total / step) + 2);
  for (std::size_t k = 0;; ++k) {
    const double s = static_cast<double>(k) * step;
    if (s > total - kMinSpacing) break;
    pts.push_back(poly.point_at(s));
  }
  pts.push_back(poly.back());
  return Polyline(std::move(pts));
}

/// Signed Menger curvature of a point triple (inverse circumradius).
inline double menger_curvature(const LocalPoint & a, const LocalPoint & b, const LocalPoint & c)
{
  const double ab = dist2(a, b);
  const double bc = dist2(b, c);
  const double ca = dist2(c, a);
  const double denom = ab * bc * ca;
  if (denom <= 0.0) return 0.0;
  return 2.0 * cross2(b - a, c - b) / denom;
}

/// Per-point curvature. Interior points use the Menger curvature of their
/// neighbour triple; endpoints copy the adjacent value.
inline CurvatureProfile curvature_profile(const Polyline & poly)
{
  CurvatureProfile out;
  const auto & pts = poly.points();
  if (pts.size() < 3) return out;
  const auto & cum = poly.cumulative_arclength();
  double min_spacing = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < pts.size(); ++i) {
    min_spacing = std::min(min_spacing, cum[i] - cum[i - 1]);
  }
  const double guard = 1.0 / min_spacing;
  out.resize(pts.size());
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const double k = menger_curvature(pts[i - 1], pts[i], pts[i + 1]);
    out[i] = {cum[i], std::clamp(k, -guard, guard)};
  }
  out.front() = {0.0, out[1].kappa};
  out.back() = {cum.back(), out[pts.size() - 2].kappa};
  return out;
}

struct Crossing
{
  LocalPoint point;
  double s_a{0.0};
  double s_b{0.0};
};

namespace detail
{
inline constexpr double kIntersectEps = 1e-9;

struct Overlap
{
  double a0, a1, b0, b1;  // arc-length ranges on each polyline
};
}  // namespace detail

/// Crossing points of two polylines, sorted by s_a (then s_b). Collinear
/// overlapping runs are merged and reported once at their midpoint.
inline std::vector<Crossing> intersect(const Polyline & a, const Polyline & b)
{
  using detail::kIntersectEps;
  std::vector<Crossing> points;
  std::vector<detail::Overlap> overlaps;
  if (a.size() < 2 || b.size() < 2) return points;

  const auto & pa = a.points();
  const auto & pb = b.points();
  const auto & ca = a.cumulative_arclength();
  const auto & cb = b.cumulative_arclength();

  for (std::size_t i = 0; i + 1 < pa.size(); ++i) {
    const LocalPoint p = pa[i];
    const LocalPoint r = pa[i + 1] - p;
    const double len_a = ca[i + 1] - ca[i];
    const double min_ax = std::min(p.x, pa[i + 1].x), max_ax = std::max(p.x, pa[i + 1].x);
    const double min_ay = std::min(p.y, pa[i + 1].y), max_ay = std::max(p.y, pa[i + 1].y);
    for (std::size_t j = 0; j + 1 < pb.size(); ++j) {
      const LocalPoint q = pb[j];
      if (std::max(q.x, pb[j + 1].x) < min_ax - 1e-6 || std::min(q.x, pb[j + 1].x) > max_ax + 1e-6 ||
          std::max(q.y, pb[j + 1].y) < min_ay - 1e-6 || std::min(q.y, pb[j + 1].y) > max_ay + 1e-6) {
        continue;
      }
      const LocalPoint sv = pb[j + 1] - q;
      const double len_b = cb[j + 1] - cb[j];
      const double denom = cross2(r, sv);
      const LocalPoint qp = q - p;
      if (std::abs(denom) <= kIntersectEps * len_a * len_b) {
        // Parallel: overlap only when collinear.
        if (std::abs(cross2(qp, r)) > 1e-6 * len_a) continue;
        const double rr = dot2(r, r);
        double t0 = dot2(qp, r) / rr;
        double t1 = dot2(pb[j + 1] - p, r) / rr;
        const bool reversed = t1 < t0;
        const double lo = std::max(0.0, std::min(t0, t1));
        const double hi = std::min(1.0, std::max(t0, t1));
        if (hi < lo - 1e-9) continue;
        const double a0 = ca[i] + lo * len_a;
        const double a1 = ca[i] + hi * len_a;
        // Map the clipped range back onto b.
        auto b_of = [&](double t) {
          const double u = (t - t0) / (t1 - t0);
          return cb[j] + std::clamp(u, 0.0, 1.0) * len_b;
        };
        double b0 = b_of(lo);
        double b1 = b_of(hi);
        if (reversed) std::swap(b0, b1);
        overlaps.push_back({a0, a1, std::min(b0, b1), std::max(b0, b1)});
        continue;
      }
      const double t = cross2(qp, sv) / denom;
      const double u = cross2(qp, r) / denom;
      const double tol = 1e-9;
      if (t < -tol || t > 1.0 + tol || u < -tol || u > 1.0 + tol) continue;
      const double tc = std::clamp(t, 0.0, 1.0);
      const double uc = std::clamp(u, 0.0, 1.0);
      points.push_back({lerp(p, pa[i + 1], tc), ca[i] + tc * len_a, cb[j] + uc * len_b});
    }
  }

  // Merge overlap runs that touch in both parameterisations.
  std::sort(overlaps.begin(), overlaps.end(), [](const auto & l, const auto & r) {
    return l.a0 < r.a0 || (l.a0 == r.a0 && l.b0 < r.b0);
  });
  std::vector<detail::Overlap> merged;
  for (const auto & o : overlaps) {
    if (!merged.empty()) {
      auto & m = merged.back();
      const bool touch_a = o.a0 <= m.a1 + 1e-6;
      const bool touch_b = o.b0 <= m.b1 + 1e-6 && o.b1 >= m.b0 - 1e-6;
      if (touch_a && touch_b) {
        m.a1 = std::max(m.a1, o.a1);
        m.b0 = std::min(m.b0, o.b0);
        m.b1 = std::max(m.b1, o.b1);
        continue;
      }
    }
    merged.push_back(o);
  }

  std::vector<Crossing> out;
  for (const auto & c : points) {
    const bool inside = std::any_of(merged.begin(), merged.end(), [&](const auto & m) {
      return c.s_a >= m.a0 - 1e-6 && c.s_a <= m.a1 + 1e-6 && c.s_b >= m.b0 - 1e-6 &&
             c.s_b <= m.b1 + 1e-6;
    });
    if (!inside) out.push_back(c);
  }
  for (const auto & m : merged) {
    const double sa = 0.5 * (m.a0 + m.a1);
    out.push_back({a.point_at(sa), sa, 0.5 * (m.b0 + m.b1)});
  }

  std::sort(out.begin(), out.end(), [](const Crossing & l, const Crossing & r) {
    return l.s_a < r.s_a || (l.s_a == r.s_a && l.s_b < r.s_b);
  });
  // A crossing through a shared vertex is found on both adjacent segments.
  std::vector<Crossing> unique;
  for (const auto & c : out) {
    if (!unique.empty() && std::abs(unique.back().s_a - c.s_a) < 1e-6 &&
        std::abs(unique.back().s_b - c.s_b) < 1e-6) {
      continue;
    }
    unique.push_back(c);
  }
  return unique;
}

struct Projection
{
  LocalPoint foot;
  double s_along{0.0};
  double lateral{0.0};  // signed, left of travel positive

  [[nodiscard]] double distance() const { return std::abs(lateral); }
};

/// Closest point on `poly` to `p`; ties go to the smaller arc length.
inline Projection project(const Polyline & poly, const LocalPoint & p)
{
  const auto & pts = poly.points();
  const auto & cum = poly.cumulative_arclength();
  Projection best;
  double best_d = std::numeric_limits<double>::infinity();
  std::size_t best_seg = 0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const LocalPoint d = pts[i + 1] - pts[i];
    const double len2 = dot2(d, d);
    const double t = std::clamp(dot2(p - pts[i], d) / len2, 0.0, 1.0);
    const LocalPoint foot = lerp(pts[i], pts[i + 1], t);
    const double dd = dist2(foot, p);
    if (dd < best_d - 1e-12) {
      best_d = dd;
      best_seg = i;
      best.foot = foot;
      best.s_along = cum[i] + t * (cum[i + 1] - cum[i]);
    }
  }
  const LocalPoint d = pts[best_seg + 1] - pts[best_seg];
  const double side = cross2(d, p - best.foot);
  best.lateral = side < 0.0 ? -best_d : best_d;
  return best;
}

/// Distance from `p` to the closest point on `poly`.
inline double distance(const Polyline & poly, const LocalPoint & p)
{
  return project(poly, p).distance();
}

/// Offsets a polyline sideways (positive = left) using mitred vertex normals.
/// Optional start/end normals override the endpoint directions so adjacent
/// offset pieces meet exactly.
inline Polyline offset(
  const Polyline & poly, double amount, const LocalPoint * start_dir = nullptr,
  const LocalPoint * end_dir = nullptr)
{
  const auto & pts = poly.points();
  const std::size_t n = pts.size();
  std::vector<LocalPoint> seg_dir(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const LocalPoint d = pts[i + 1] - pts[i];
    seg_dir[i] = d * (1.0 / norm2(d));
  }
  auto left_normal = [](const LocalPoint & d) { return LocalPoint{-d.y, d.x, 0.0}; };
  auto mitre = [&](const LocalPoint & d_in, const LocalPoint & d_out) {
    LocalPoint n_in = left_normal(d_in);
    LocalPoint n_out = left_normal(d_out);
    LocalPoint m = n_in + n_out;
    const double len = norm2(m);
    if (len < 1e-6) return n_in;
    m = m * (1.0 / len);
    // Scale so the offset distance holds on both adjacent segments; cap
    // very sharp corners.
    const double cos_half = std::max(dot2(m, n_in), 0.25);
    return m * (1.0 / cos_half);
  };
  std::vector<LocalPoint> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    LocalPoint nrm;
    if (i == 0) {
      nrm = start_dir ? mitre(*start_dir, seg_dir[0]) : left_normal(seg_dir[0]);
    } else if (i + 1 == n) {
      nrm = end_dir ? mitre(seg_dir[n - 2], *end_dir) : left_normal(seg_dir[n - 2]);
    } else {
      nrm = mitre(seg_dir[i - 1], seg_dir[i]);
    }
    out[i] = pts[i] + nrm * amount;
    out[i].z = pts[i].z;
  }
  return Polyline::cleaned(out);
}

}  // namespace geometry
}  // namespace rns
