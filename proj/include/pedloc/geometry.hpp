#pragma once

#include <cmath>
#include <stdexcept>

namespace pedloc {

inline constexpr double kPi = 3.14159265358979323846;

/// Meters per degree of latitude on the WGS84 sphere (semi-major axis).
inline constexpr double kMetersPerDegree = 6378137.0 * kPi / 180.0;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// 2D vector / point in the local tangent plane (x east, y north, meters).
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double norm_sq() const { return x * x + y * y; }

  /// 90-degree counterclockwise rotation.
  Vec2 perp() const { return {-y, x}; }

  Vec2 normalized() const {
    const double n = norm();
    if (n == 0.0) throw std::invalid_argument("cannot normalize zero vector");
    return {x / n, y / n};
  }
};

using LocalPoint = Vec2;

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

inline Vec2 rotate(const Vec2& v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

/// Geodetic position, WGS84 lon/lat in degrees.
struct GeoPoint {
  double longitude = 0.0;
  double latitude = 0.0;
};

/// Equirectangular tangent-plane projection anchored at a fixed origin.
/// Good to well under 1e-6 degrees of round-trip error at city-block scale;
/// scale factors are frozen at the origin latitude.
class LocalProjection {
 public:
  LocalProjection() = default;
  explicit LocalProjection(const GeoPoint& origin)
      : origin_(origin),
        m_per_deg_lon_(kMetersPerDegree * std::cos(deg_to_rad(origin.latitude))),
        m_per_deg_lat_(kMetersPerDegree) {
    if (origin.longitude < -180.0 || origin.longitude > 180.0 ||
        origin.latitude < -90.0 || origin.latitude > 90.0) {
      throw std::invalid_argument("projection origin out of lon/lat range");
    }
  }

  const GeoPoint& origin() const { return origin_; }

  LocalPoint to_local(const GeoPoint& g) const {
    return {(g.longitude - origin_.longitude) * m_per_deg_lon_,
            (g.latitude - origin_.latitude) * m_per_deg_lat_};
  }

  GeoPoint to_geo(const LocalPoint& p) const {
    return {origin_.longitude + p.x / m_per_deg_lon_,
            origin_.latitude + p.y / m_per_deg_lat_};
  }

 private:
  GeoPoint origin_{};
  double m_per_deg_lon_ = kMetersPerDegree;
  double m_per_deg_lat_ = kMetersPerDegree;
};

}  // namespace pedloc
