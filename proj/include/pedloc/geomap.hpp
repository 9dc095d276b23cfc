#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pedloc/geometry.hpp"
#include "pedloc/polygon.hpp"

namespace pedloc {

enum class SurfaceLabel { Impenetrable, Street, Traversable };

inline const char* to_string(SurfaceLabel l) {
  switch (l) {
    case SurfaceLabel::Impenetrable: return "impenetrable";
    case SurfaceLabel::Street: return "street";
    case SurfaceLabel::Traversable: return "traversable";
  }
  return "?";
}

using GeoRing = std::vector<GeoPoint>;

/// Building or street polygon, local-frame shape plus the geodetic rings it
/// was loaded from (kept for lossless re-export).
struct LabeledPolygon {
  PolygonWithHoles shape;
  SurfaceLabel label = SurfaceLabel::Impenetrable;
  std::vector<GeoRing> source_rings;  // outer first, then holes
  BoundingBox bbox;
};

struct SidewalkSegment {
  std::string id;
  Ring polygon;
  Vec2 street_bearing{1.0, 0.0};  // unit vector, along-street
  double bearing_deg = 0.0;
  GeoRing source_ring;
  BoundingBox bbox;

  bool contains(const Vec2& p) const {
    return point_on_ring_edge(polygon, p) || point_in_ring(polygon, p);
  }
};

struct NearestSidewalk {
  std::string id;
  LocalPoint point;  // closest point on/in the sidewalk polygon
  double distance = 0.0;
};

namespace detail {

/// Uniform grid over the labeled polygons; cells hold candidate indices.
class PolygonGrid {
 public:
  void build(const std::vector<LabeledPolygon>& obstacles,
             const std::vector<LabeledPolygon>& streets) {
    if (obstacles.empty() && streets.empty()) return;
    bool first = true;
    auto grow = [&](const BoundingBox& b) {
      if (first) {
        bounds_ = b;
        first = false;
      } else {
        bounds_.min_x = std::min(bounds_.min_x, b.min_x);
        bounds_.min_y = std::min(bounds_.min_y, b.min_y);
        bounds_.max_x = std::max(bounds_.max_x, b.max_x);
        bounds_.max_y = std::max(bounds_.max_y, b.max_y);
      }
    };
    for (const auto& o : obstacles) grow(o.bbox);
    for (const auto& s : streets) grow(s.bbox);
    const double span_x = std::max(bounds_.max_x - bounds_.min_x, 1e-9);
    const double span_y = std::max(bounds_.max_y - bounds_.min_y, 1e-9);
    nx_ = ny_ = 64;
    cell_w_ = span_x / nx_;
    cell_h_ = span_y / ny_;
    cells_.assign(static_cast<std::size_t>(nx_) * ny_, Cell{});
    for (std::uint32_t i = 0; i < obstacles.size(); ++i)
      insert(obstacles[i].bbox, i, /*street=*/false);
    for (std::uint32_t i = 0; i < streets.size(); ++i)
      insert(streets[i].bbox, i, /*street=*/true);
    built_ = true;
  }

  bool built() const { return built_; }
  bool covers(const Vec2& p) const { return built_ && bounds_.contains(p); }

  const std::vector<std::uint32_t>& obstacle_candidates(const Vec2& p) const {
    return cell_at(p).obstacles;
  }
  const std::vector<std::uint32_t>& street_candidates(const Vec2& p) const {
    return cell_at(p).streets;
  }

 private:
  struct Cell {
    std::vector<std::uint32_t> obstacles;
    std::vector<std::uint32_t> streets;
  };

  int clamp_ix(double x) const {
    return std::clamp(static_cast<int>((x - bounds_.min_x) / cell_w_), 0,
                      nx_ - 1);
  }
  int clamp_iy(double y) const {
    return std::clamp(static_cast<int>((y - bounds_.min_y) / cell_h_), 0,
                      ny_ - 1);
  }

  void insert(const BoundingBox& b, std::uint32_t idx, bool street) {
    const int x0 = clamp_ix(b.min_x), x1 = clamp_ix(b.max_x);
    const int y0 = clamp_iy(b.min_y), y1 = clamp_iy(b.max_y);
    for (int iy = y0; iy <= y1; ++iy) {
      for (int ix = x0; ix <= x1; ++ix) {
        Cell& c = cells_[static_cast<std::size_t>(iy) * nx_ + ix];
        (street ? c.streets : c.obstacles).push_back(idx);
      }
    }
  }

  const Cell& cell_at(const Vec2& p) const {
    return cells_[static_cast<std::size_t>(clamp_iy(p.y)) * nx_ + clamp_ix(p.x)];
  }

  BoundingBox bounds_;
  int nx_ = 0, ny_ = 0;
  double cell_w_ = 1.0, cell_h_ = 1.0;
  std::vector<Cell> cells_;
  bool built_ = false;
};

}  // namespace detail

/// Immutable labeled geosegment map in a local planar frame. Classification
/// precedence where polygons overlap is Impenetrable > Street > Traversable;
/// unlabeled area is Traversable. All query methods are safe for concurrent
/// read-only use.
class GeoSegmentMap {
 public:
  GeoSegmentMap() = default;

  GeoSegmentMap(LocalProjection projection, std::vector<LabeledPolygon> obstacles,
                std::vector<LabeledPolygon> streets,
                std::vector<SidewalkSegment> sidewalks)
      : projection_(std::move(projection)),
        obstacles_(std::move(obstacles)),
        streets_(std::move(streets)),
        sidewalks_(std::move(sidewalks)) {
    std::sort(sidewalks_.begin(), sidewalks_.end(),
              [](const SidewalkSegment& a, const SidewalkSegment& b) {
                return a.id < b.id;
              });
    grid_.build(obstacles_, streets_);
  }

  const LocalProjection& projection() const { return projection_; }
  const std::vector<LabeledPolygon>& obstacles() const { return obstacles_; }
  const std::vector<LabeledPolygon>& streets() const { return streets_; }
  const std::vector<SidewalkSegment>& sidewalks() const { return sidewalks_; }

  SurfaceLabel classify(const LocalPoint& p) const {
    if (!grid_.covers(p)) return SurfaceLabel::Traversable;
    for (std::uint32_t i : grid_.obstacle_candidates(p)) {
      if (obstacles_[i].bbox.contains(p) && obstacles_[i].shape.contains(p))
        return SurfaceLabel::Impenetrable;
    }
    for (std::uint32_t i : grid_.street_candidates(p)) {
      if (streets_[i].bbox.contains(p) && streets_[i].shape.contains(p))
        return SurfaceLabel::Street;
    }
    return SurfaceLabel::Traversable;
  }

  /// Reference path for the index-equivalence oracle: plain linear scan.
  SurfaceLabel classify_linear(const LocalPoint& p) const {
    for (const auto& o : obstacles_) {
      if (o.shape.contains(p)) return SurfaceLabel::Impenetrable;
    }
    for (const auto& s : streets_) {
      if (s.shape.contains(p)) return SurfaceLabel::Street;
    }
    return SurfaceLabel::Traversable;
  }

  /// Closest sidewalk polygon by Euclidean distance (0 when p is inside).
  /// Distance ties resolve to the lexicographically smallest id.
  NearestSidewalk nearest_sidewalk(const LocalPoint& p) const {
    require_sidewalks();
    NearestSidewalk best;
    double best_dist = std::numeric_limits<double>::infinity();
    // Sidewalks are id-sorted, so the first strict improvement wins ties.
    for (const auto& s : sidewalks_) {
      if (s.bbox.distance(p) >= best_dist) continue;
      auto [point, dist] = sidewalk_distance(s, p);
      if (dist < best_dist) {
        best_dist = dist;
        best = {s.id, point, dist};
      }
    }
    return best;
  }

  /// Same result as nearest_sidewalk, without the bounding-box pruning.
  NearestSidewalk nearest_sidewalk_linear(const LocalPoint& p) const {
    require_sidewalks();
    NearestSidewalk best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const auto& s : sidewalks_) {
      auto [point, dist] = sidewalk_distance(s, p);
      if (dist < best_dist) {
        best_dist = dist;
        best = {s.id, point, dist};
      }
    }
    return best;
  }

  /// Along-street direction at p: the authored bearing of the nearest
  /// sidewalk segment.
  Vec2 street_direction_at(const LocalPoint& p) const {
    require_sidewalks();
    const NearestSidewalk near = nearest_sidewalk(p);
    for (const auto& s : sidewalks_) {
      if (s.id == near.id) return s.street_bearing;
    }
    throw std::logic_error("nearest sidewalk id not found");
  }

  const SidewalkSegment* find_sidewalk(const std::string& id) const {
    auto it = std::lower_bound(
        sidewalks_.begin(), sidewalks_.end(), id,
        [](const SidewalkSegment& s, const std::string& key) { return s.id < key; });
    if (it == sidewalks_.end() || it->id != id) return nullptr;
    return &*it;
  }

  nlohmann::json to_geojson() const;

 private:
  static std::pair<Vec2, double> sidewalk_distance(const SidewalkSegment& s,
                                                   const Vec2& p) {
    if (s.contains(p)) return {p, 0.0};
    return closest_point_on_ring(s.polygon, p);
  }

  void require_sidewalks() const {
    if (sidewalks_.empty())
      throw std::runtime_error("map has no sidewalk segments");
  }

  LocalProjection projection_;
  std::vector<LabeledPolygon> obstacles_;
  std::vector<LabeledPolygon> streets_;
  std::vector<SidewalkSegment> sidewalks_;
  detail::PolygonGrid grid_;
};

namespace detail {

inline GeoRing parse_geo_ring(const nlohmann::json& coords, int feature_index) {
  GeoRing ring;
  for (const auto& pt : coords) {
    if (!pt.is_array() || pt.size() < 2)
      throw std::runtime_error("malformed coordinate at feature " +
                               std::to_string(feature_index));
    const double lon = pt[0].get<double>();
    const double lat = pt[1].get<double>();
    if (!(lon >= -180.0 && lon <= 180.0 && lat >= -90.0 && lat <= 90.0))
      throw std::runtime_error("coordinate out of lon/lat range at feature " +
                               std::to_string(feature_index));
    ring.push_back({lon, lat});
  }
  if (ring.size() < 4 || ring.front().longitude != ring.back().longitude ||
      ring.front().latitude != ring.back().latitude) {
    throw std::runtime_error("open ring at feature " +
                             std::to_string(feature_index));
  }
  ring.pop_back();  // store open
  // Collapse exact consecutive duplicates.
  GeoRing out;
  for (const auto& g : ring) {
    if (out.empty() || out.back().longitude != g.longitude ||
        out.back().latitude != g.latitude) {
      out.push_back(g);
    }
  }
  if (out.size() < 3)
    throw std::runtime_error(
        "degenerate ring (fewer than 3 distinct vertices) at feature " +
        std::to_string(feature_index));
  return out;
}

inline Ring project_ring(const GeoRing& geo, const LocalProjection& proj) {
  Ring r;
  r.reserve(geo.size());
  for (const auto& g : geo) r.push_back(proj.to_local(g));
  return r;
}

inline nlohmann::json geo_ring_to_json(const GeoRing& ring) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& g : ring) arr.push_back({g.longitude, g.latitude});
  arr.push_back({ring.front().longitude, ring.front().latitude});
  return arr;
}

}  // namespace detail

/// Parses a GeoJSON FeatureCollection with per-feature `label` properties
/// (impenetrable | street | sidewalk). Sidewalk features additionally carry
/// `id` and `bearing_deg` (degrees counterclockwise from east). The local
/// frame is anchored at the optional top-level `origin` [lon, lat] member,
/// else at the centroid of all outer-ring vertices.
inline GeoSegmentMap parse_map_geojson(const nlohmann::json& root) {
  if (!root.is_object() || root.value("type", "") != "FeatureCollection" ||
      !root.contains("features") || !root["features"].is_array()) {
    throw std::runtime_error("map parse error: not a GeoJSON FeatureCollection");
  }
  const auto& features = root["features"];

  struct RawFeature {
    std::string label;
    std::vector<GeoRing> rings;
    std::string id;
    std::optional<double> bearing_deg;
  };
  std::vector<RawFeature> raw;
  raw.reserve(features.size());

  for (int i = 0; i < static_cast<int>(features.size()); ++i) {
    const auto& f = features[i];
    const auto& props = f.value("properties", nlohmann::json::object());
    if (!props.contains("label") || !props["label"].is_string())
      throw std::runtime_error("missing label at feature " + std::to_string(i));
    RawFeature rf;
    rf.label = props["label"].get<std::string>();
    if (rf.label != "impenetrable" && rf.label != "street" &&
        rf.label != "sidewalk") {
      throw std::runtime_error("unknown label '" + rf.label + "' at feature " +
                               std::to_string(i));
    }
    if (!f.contains("geometry") || !f["geometry"].is_object() ||
        f["geometry"].value("type", "") != "Polygon") {
      throw std::runtime_error("unsupported geometry (expected Polygon) at feature " +
                               std::to_string(i));
    }
    const auto& coords = f["geometry"]["coordinates"];
    if (!coords.is_array() || coords.empty())
      throw std::runtime_error("empty polygon at feature " + std::to_string(i));
    for (const auto& ring : coords)
      rf.rings.push_back(detail::parse_geo_ring(ring, i));
    if (rf.label == "sidewalk") {
      if (!props.contains("id") || !props["id"].is_string())
        throw std::runtime_error("missing sidewalk id at feature " +
                                 std::to_string(i));
      rf.id = props["id"].get<std::string>();
      if (!props.contains("bearing_deg") || !props["bearing_deg"].is_number())
        throw std::runtime_error("missing sidewalk bearing at feature " +
                                 std::to_string(i));
      rf.bearing_deg = props["bearing_deg"].get<double>();
      if (rf.rings.size() > 1)
        throw std::runtime_error("sidewalk polygon with holes at feature " +
                                 std::to_string(i));
    }
    raw.push_back(std::move(rf));
  }

  GeoPoint origin;
  if (root.contains("origin")) {
    const auto& o = root["origin"];
    if (!o.is_array() || o.size() != 2)
      throw std::runtime_error("map parse error: origin must be [lon, lat]");
    origin = {o[0].get<double>(), o[1].get<double>()};
  } else {
    double sum_lon = 0.0, sum_lat = 0.0;
    std::size_t n = 0;
    for (const auto& rf : raw) {
      for (const auto& g : rf.rings.front()) {
        sum_lon += g.longitude;
        sum_lat += g.latitude;
        ++n;
      }
    }
    if (n == 0) throw std::runtime_error("map parse error: no features");
    origin = {sum_lon / static_cast<double>(n), sum_lat / static_cast<double>(n)};
  }

  LocalProjection proj(origin);
  std::vector<LabeledPolygon> obstacles;
  std::vector<LabeledPolygon> streets;
  std::vector<SidewalkSegment> sidewalks;

  for (int i = 0; i < static_cast<int>(raw.size()); ++i) {
    auto& rf = raw[i];
    if (rf.label == "sidewalk") {
      SidewalkSegment s;
      s.id = rf.id;
      s.polygon = detail::project_ring(rf.rings.front(), proj);
      s.bearing_deg = *rf.bearing_deg;
      const double b = deg_to_rad(*rf.bearing_deg);
      s.street_bearing = {std::cos(b), std::sin(b)};
      s.source_ring = std::move(rf.rings.front());
      s.bbox = ring_bbox(s.polygon);
      for (const auto& other : sidewalks) {
        if (other.id == s.id)
          throw std::runtime_error("duplicate sidewalk id '" + s.id +
                                   "' at feature " + std::to_string(i));
      }
      sidewalks.push_back(std::move(s));
    } else {
      LabeledPolygon p;
      p.label = rf.label == "impenetrable" ? SurfaceLabel::Impenetrable
                                           : SurfaceLabel::Street;
      p.shape.outer = detail::project_ring(rf.rings.front(), proj);
      for (std::size_t h = 1; h < rf.rings.size(); ++h)
        p.shape.holes.push_back(detail::project_ring(rf.rings[h], proj));
      p.source_rings = std::move(rf.rings);
      p.bbox = ring_bbox(p.shape.outer);
      (p.label == SurfaceLabel::Impenetrable ? obstacles : streets)
          .push_back(std::move(p));
    }
  }

  return GeoSegmentMap(std::move(proj), std::move(obstacles), std::move(streets),
                       std::move(sidewalks));
}

inline GeoSegmentMap load_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open map file: " + path);
  nlohmann::json root;
  try {
    in >> root;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("map parse error in " + path + ": " + e.what());
  }
  return parse_map_geojson(root);
}

inline nlohmann::json GeoSegmentMap::to_geojson() const {
  nlohmann::json features = nlohmann::json::array();
  auto push_labeled = [&](const LabeledPolygon& p) {
    nlohmann::json rings = nlohmann::json::array();
    for (const auto& r : p.source_rings) rings.push_back(detail::geo_ring_to_json(r));
    features.push_back(
        {{"type", "Feature"},
         {"properties", {{"label", to_string(p.label)}}},
         {"geometry", {{"type", "Polygon"}, {"coordinates", rings}}}});
  };
  for (const auto& o : obstacles_) push_labeled(o);
  for (const auto& s : streets_) push_labeled(s);
  for (const auto& s : sidewalks_) {
    nlohmann::json rings = nlohmann::json::array();
    rings.push_back(detail::geo_ring_to_json(s.source_ring));
    features.push_back(
        {{"type", "Feature"},
         {"properties",
          {{"label", "sidewalk"}, {"id", s.id}, {"bearing_deg", s.bearing_deg}}},
         {"geometry", {{"type", "Polygon"}, {"coordinates", rings}}}});
  }
  return {{"type", "FeatureCollection"},
          {"origin", {projection_.origin().longitude, projection_.origin().latitude}},
          {"features", features}};
}

inline void save_map(const GeoSegmentMap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write map file: " + path);
  out << map.to_geojson().dump(2) << "\n";
}

/// Authors a map in local meters around a fixed geodetic origin. The local
/// rings are converted to geodetic once and the map is then built through the
/// regular GeoJSON parse path, so a built map and its exported file agree
/// bit-for-bit.
class MapBuilder {
 public:
  explicit MapBuilder(const GeoPoint& origin) : origin_(origin), proj_(origin) {}

  MapBuilder& add_obstacle(const Ring& outer, const std::vector<Ring>& holes = {}) {
    nlohmann::json rings = nlohmann::json::array();
    rings.push_back(local_ring_json(outer));
    for (const auto& h : holes) rings.push_back(local_ring_json(h));
    features_.push_back(
        {{"type", "Feature"},
         {"properties", {{"label", "impenetrable"}}},
         {"geometry", {{"type", "Polygon"}, {"coordinates", rings}}}});
    return *this;
  }

  MapBuilder& add_street(const Ring& outer) {
    nlohmann::json rings = nlohmann::json::array();
    rings.push_back(local_ring_json(outer));
    features_.push_back(
        {{"type", "Feature"},
         {"properties", {{"label", "street"}}},
         {"geometry", {{"type", "Polygon"}, {"coordinates", rings}}}});
    return *this;
  }

  MapBuilder& add_sidewalk(const std::string& id, const Ring& outer,
                           double bearing_deg) {
    nlohmann::json rings = nlohmann::json::array();
    rings.push_back(local_ring_json(outer));
    features_.push_back(
        {{"type", "Feature"},
         {"properties",
          {{"label", "sidewalk"}, {"id", id}, {"bearing_deg", bearing_deg}}},
         {"geometry", {{"type", "Polygon"}, {"coordinates", rings}}}});
    return *this;
  }

  nlohmann::json to_geojson() const {
    return {{"type", "FeatureCollection"},
            {"origin", {origin_.longitude, origin_.latitude}},
            {"features", features_}};
  }

  GeoSegmentMap build() const { return parse_map_geojson(to_geojson()); }

 private:
  nlohmann::json local_ring_json(const Ring& ring) const {
    if (ring.size() < 3) throw std::invalid_argument("ring needs >= 3 vertices");
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& v : ring) {
      const GeoPoint g = proj_.to_geo(v);
      arr.push_back({g.longitude, g.latitude});
    }
    const GeoPoint g0 = proj_.to_geo(ring.front());
    arr.push_back({g0.longitude, g0.latitude});
    return arr;
  }

  GeoPoint origin_;
  LocalProjection proj_;
  nlohmann::json features_ = nlohmann::json::array();
};

/// Convenience for axis-aligned rectangles, the dominant authoring primitive.
inline Ring rect_ring(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

}  // namespace pedloc
