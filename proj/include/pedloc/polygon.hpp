#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "pedloc/geometry.hpp"

namespace pedloc {

/// Polygon ring stored open (no closing duplicate); edges wrap around.
using Ring = std::vector<Vec2>;

/// Tolerance for a point counting as "on" an edge, in meters.
inline constexpr double kEdgeEpsilon = 1e-9;

struct BoundingBox {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;

  bool contains(const Vec2& p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }

  bool intersects(const BoundingBox& o) const {
    return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y &&
           o.min_y <= max_y;
  }

  /// Euclidean distance from p to the box, 0 if inside.
  double distance(const Vec2& p) const {
    const double dx = std::max({min_x - p.x, 0.0, p.x - max_x});
    const double dy = std::max({min_y - p.y, 0.0, p.y - max_y});
    return std::hypot(dx, dy);
  }
};

inline BoundingBox ring_bbox(const Ring& ring) {
  BoundingBox b{ring.front().x, ring.front().y, ring.front().x, ring.front().y};
  for (const auto& v : ring) {
    b.min_x = std::min(b.min_x, v.x);
    b.min_y = std::min(b.min_y, v.y);
    b.max_x = std::max(b.max_x, v.x);
    b.max_y = std::max(b.max_y, v.y);
  }
  return b;
}

inline Vec2 closest_point_on_segment(const Vec2& a, const Vec2& b,
                                     const Vec2& p) {
  const Vec2 ab = b - a;
  const double len_sq = ab.norm_sq();
  if (len_sq == 0.0) return a;
  double t = (p - a).dot(ab) / len_sq;
  t = std::clamp(t, 0.0, 1.0);
  return a + ab * t;
}

inline double point_segment_distance(const Vec2& a, const Vec2& b,
                                     const Vec2& p) {
  return (p - closest_point_on_segment(a, b, p)).norm();
}

inline bool point_on_ring_edge(const Ring& ring, const Vec2& p,
                               double eps = kEdgeEpsilon) {
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (point_segment_distance(ring[i], ring[(i + 1) % n], p) <= eps)
      return true;
  }
  return false;
}

/// Even-odd ray cast; boundary behavior is unspecified here, callers that
/// need the on-edge-counts-as-inside convention check point_on_ring_edge
/// first.
inline bool point_in_ring(const Ring& ring, const Vec2& p) {
  bool inside = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& vi = ring[i];
    const Vec2& vj = ring[j];
    if ((vi.y > p.y) != (vj.y > p.y)) {
      const double x_cross = (vj.x - vi.x) * (p.y - vi.y) / (vj.y - vi.y) + vi.x;
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

/// Closest point on the ring boundary together with its distance.
inline std::pair<Vec2, double> closest_point_on_ring(const Ring& ring,
                                                     const Vec2& p) {
  Vec2 best = ring.front();
  double best_dist = (p - best).norm();
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 c = closest_point_on_segment(ring[i], ring[(i + 1) % n], p);
    const double d = (p - c).norm();
    if (d < best_dist) {
      best_dist = d;
      best = c;
    }
  }
  return {best, best_dist};
}

/// Polygon with optional interior rings (holes). A point inside a hole is
/// outside the polygon; any ring boundary counts as inside.
struct PolygonWithHoles {
  Ring outer;
  std::vector<Ring> holes;

  bool contains(const Vec2& p) const {
    if (point_on_ring_edge(outer, p)) return true;
    for (const auto& h : holes) {
      if (point_on_ring_edge(h, p)) return true;
    }
    bool inside = point_in_ring(outer, p);
    if (!inside) return false;
    for (const auto& h : holes) {
      if (point_in_ring(h, p)) return false;
    }
    return true;
  }
};

namespace detail {

inline int orientation_sign(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double v = (b - a).cross(c - a);
  if (v > 0) return 1;
  if (v < 0) return -1;
  return 0;
}

inline bool on_segment_collinear(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

}  // namespace detail

inline bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1,
                               const Vec2& q2) {
  const int o1 = detail::orientation_sign(p1, p2, q1);
  const int o2 = detail::orientation_sign(p1, p2, q2);
  const int o3 = detail::orientation_sign(q1, q2, p1);
  const int o4 = detail::orientation_sign(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && detail::on_segment_collinear(p1, p2, q1)) return true;
  if (o2 == 0 && detail::on_segment_collinear(p1, p2, q2)) return true;
  if (o3 == 0 && detail::on_segment_collinear(q1, q2, p1)) return true;
  if (o4 == 0 && detail::on_segment_collinear(q1, q2, p2)) return true;
  return false;
}

/// True when no two non-adjacent edges of the ring intersect.
inline bool ring_is_simple(const Ring& ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a1 = ring[i];
    const Vec2& a2 = ring[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      // Skip edges sharing a vertex (adjacent, incl. the wrap pair).
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_intersect(a1, a2, ring[j], ring[(j + 1) % n])) return false;
    }
  }
  return true;
}

/// True if the two rings touch or overlap anywhere (edge crossing or full
/// containment of one in the other).
inline bool rings_overlap(const Ring& a, const Ring& b) {
  if (!ring_bbox(a).intersects(ring_bbox(b))) return false;
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      if (segments_intersect(a[i], a[(i + 1) % na], b[j], b[(j + 1) % nb]))
        return true;
    }
  }
  return point_in_ring(b, a.front()) || point_in_ring(a, b.front());
}

/// Unit direction of the ring's dominant extent (eigenvector of the vertex
/// covariance matrix). Direction is a line, not a heading: v and -v are the
/// same axis.
inline Vec2 principal_axis(const Ring& ring) {
  Vec2 mean{0.0, 0.0};
  for (const auto& v : ring) mean += v;
  mean = mean * (1.0 / static_cast<double>(ring.size()));
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& v : ring) {
    const Vec2 d = v - mean;
    sxx += d.x * d.x;
    sxy += d.x * d.y;
    syy += d.y * d.y;
  }
  const double angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  return {std::cos(angle), std::sin(angle)};
}

/// Ratio of the larger to the smaller covariance eigenvalue; large values
/// mean a clearly elongated ring.
inline double elongation_ratio(const Ring& ring) {
  Vec2 mean{0.0, 0.0};
  for (const auto& v : ring) mean += v;
  mean = mean * (1.0 / static_cast<double>(ring.size()));
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& v : ring) {
    const Vec2 d = v - mean;
    sxx += d.x * d.x;
    sxy += d.x * d.y;
    syy += d.y * d.y;
  }
  const double tr = sxx + syy;
  const double det = sxx * syy - sxy * sxy;
  const double disc = std::sqrt(std::max(tr * tr / 4.0 - det, 0.0));
  const double l1 = tr / 2.0 + disc;
  const double l2 = tr / 2.0 - disc;
  if (l2 <= 0.0) return std::numeric_limits<double>::infinity();
  return l1 / l2;
}

}  // namespace pedloc
