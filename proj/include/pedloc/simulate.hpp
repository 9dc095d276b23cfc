#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pedloc/filter.hpp"
#include "pedloc/geomap.hpp"
#include "pedloc/geometry.hpp"
#include "pedloc/trace_io.hpp"

namespace pedloc {

/// Straight-line waypoint walk at constant step length and cadence.
struct WaypointPath {
  std::vector<LocalPoint> waypoints;
  double step_length = 0.7;  // meters
  double cadence = 2.0;      // steps per second

  void validate() const {
    if (waypoints.size() < 2)
      throw std::invalid_argument("path needs >= 2 waypoints");
    if (!(step_length > 0.0)) throw std::invalid_argument("step_length must be > 0");
    if (!(cadence > 0.0)) throw std::invalid_argument("cadence must be > 0");
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
      if ((waypoints[i] - waypoints[i - 1]).norm() == 0.0)
        throw std::invalid_argument("consecutive waypoints must be distinct");
    }
  }
};

/// Velocity-source error model: the velocity frame rotates at a constant
/// rate (orientation integration drift) plus per-axis Gaussian noise, with
/// an optional multiplicative speed-scale miscalibration.
struct ImuDriftModel {
  double heading_drift_rate = 0.0;   // rad/s
  double velocity_noise_sigma = 0.0; // m/s per axis
  std::uint64_t seed = 1;
  double speed_scale = 1.0;          // 1.0 = calibrated
};

/// Urban-canyon GNSS error model, expressed in the street-aligned frame at
/// the true position: along-street noise, across-street noise with a bias
/// toward one side, a reported-uncertainty range, and outage windows.
struct GnssNoiseModel {
  double along_sigma = 0.0;
  double across_sigma = 0.0;
  double across_bias = 0.0;
  double radius_min = 10.0;
  double radius_max = 10.0;
  std::vector<std::pair<double, double>> outages;  // [t0, t1] seconds
  double fix_period = 1.0;
  std::uint64_t seed = 2;

  bool in_outage(double t) const {
    for (const auto& [a, b] : outages) {
      if (t >= a && t <= b) return true;
    }
    return false;
  }
};

struct GroundTruth {
  std::vector<double> times;
  std::vector<LocalPoint> positions;
  std::vector<double> tap_times;          // one per waypoint, in order
  std::vector<LocalPoint> tap_positions;  // the waypoints themselves
};

struct SyntheticTrace {
  GroundTruth truth;
  std::vector<VelocitySample> velocities;  // one per footstep after the first
  std::vector<GnssFix> fixes;
};

/// Footsteps every step_length along each straight segment; the final
/// partial step snaps to the waypoint so every waypoint is hit exactly.
/// Timestamps advance by 1/cadence per footstep.
inline GroundTruth generate_ground_truth(const WaypointPath& path) {
  path.validate();
  GroundTruth gt;
  const double dt = 1.0 / path.cadence;
  double t = 0.0;
  auto push = [&](const LocalPoint& p) {
    gt.times.push_back(t);
    gt.positions.push_back(p);
    t += dt;
  };
  push(path.waypoints.front());
  gt.tap_times.push_back(gt.times.back());
  gt.tap_positions.push_back(path.waypoints.front());

  constexpr double eps = 1e-9;
  for (std::size_t s = 1; s < path.waypoints.size(); ++s) {
    const Vec2 a = path.waypoints[s - 1];
    const Vec2 b = path.waypoints[s];
    const double len = (b - a).norm();
    const Vec2 dir = (b - a) * (1.0 / len);
    const auto full = static_cast<std::size_t>(len / path.step_length + eps);
    const bool exact = std::abs(len - static_cast<double>(full) * path.step_length) <= eps;
    for (std::size_t k = 1; k <= full; ++k) {
      if (k == full && exact) {
        push(b);
      } else {
        push(a + dir * (static_cast<double>(k) * path.step_length));
      }
    }
    if (!exact) push(b);
    gt.tap_times.push_back(gt.times.back());
    gt.tap_positions.push_back(b);
  }
  return gt;
}

/// Velocity stream a learned inertial tracker would produce for this walk:
/// per-footstep displacement quotients, rotated by the accumulated drift
/// angle at the footstep time, plus Gaussian noise.
inline std::vector<VelocitySample> synthesize_velocity(const GroundTruth& truth,
                                                       const ImuDriftModel& drift) {
  if (truth.times.size() < 2)
    throw std::invalid_argument("velocity synthesis needs >= 2 footsteps");
  std::mt19937_64 rng(drift.seed);
  std::vector<VelocitySample> out;
  out.reserve(truth.times.size() - 1);
  for (std::size_t i = 1; i < truth.times.size(); ++i) {
    const double dt = truth.times[i] - truth.times[i - 1];
    const Vec2 v_true = (truth.positions[i] - truth.positions[i - 1]) * (1.0 / dt);
    Vec2 v = rotate(v_true * drift.speed_scale,
                    drift.heading_drift_rate * truth.times[i]);
    v.x += detail::sample_gauss(rng, drift.velocity_noise_sigma);
    v.y += detail::sample_gauss(rng, drift.velocity_noise_sigma);
    out.push_back({v, truth.times[i]});
  }
  return out;
}

namespace detail {

inline LocalPoint interpolate_position(const GroundTruth& truth, double t) {
  if (t <= truth.times.front()) return truth.positions.front();
  if (t >= truth.times.back()) return truth.positions.back();
  const auto it = std::upper_bound(truth.times.begin(), truth.times.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - truth.times.begin());
  const double t0 = truth.times[i - 1];
  const double t1 = truth.times[i];
  const double frac = (t - t0) / (t1 - t0);
  return truth.positions[i - 1] +
         (truth.positions[i] - truth.positions[i - 1]) * frac;
}

}  // namespace detail

/// GNSS fixes at fix_period ticks outside outage windows. Noise is drawn in
/// the street-aligned frame at the true position and rotated back to world,
/// reproducing the across-street-dominant canyon error structure.
inline std::vector<GnssFix> synthesize_gnss(const GroundTruth& truth,
                                            const GeoSegmentMap& map,
                                            const GnssNoiseModel& model) {
  if (!(model.fix_period > 0.0))
    throw std::invalid_argument("fix_period must be > 0");
  std::mt19937_64 rng(model.seed);
  std::uniform_real_distribution<double> radius_dist(model.radius_min,
                                                     model.radius_max);
  std::vector<GnssFix> fixes;
  const double t0 = truth.times.front();
  const double t_end = truth.times.back();
  for (std::size_t k = 0;; ++k) {
    const double t = t0 + static_cast<double>(k) * model.fix_period;
    if (t > t_end + 1e-9) break;
    // Noise draws stay in lockstep with the tick index even during outages
    // so outage windows do not shift the later noise sequence.
    const double along = detail::sample_gauss(rng, model.along_sigma);
    const double across =
        model.across_bias + detail::sample_gauss(rng, model.across_sigma);
    const double radius = radius_dist(rng);
    if (model.in_outage(t)) continue;
    const LocalPoint p = detail::interpolate_position(truth, t);
    const Vec2 dir = map.street_direction_at(p);
    const LocalPoint shifted = p + dir * along + dir.perp() * across;
    fixes.push_back({shifted, radius, t});
  }
  return fixes;
}

/// A fully authored synthetic walk: map, path, and error models.
struct Scenario {
  std::string name;
  GeoSegmentMap map;
  WaypointPath path;
  ImuDriftModel drift;
  GnssNoiseModel gnss;
};

inline std::vector<std::string> builtin_scenario_names() {
  return {"straight_canyon", "l_corner", "block_loop", "jaywalk_cross",
          "covered_hub"};
}

namespace detail {

inline GeoPoint scenario_origin() { return {-122.3965, 37.7895}; }

inline Scenario make_straight_canyon() {
  Scenario sc;
  sc.name = "straight_canyon";
  MapBuilder b(scenario_origin());
  b.add_obstacle(rect_ring(-10, -30, 330, 0));
  b.add_obstacle(rect_ring(-10, 22, 330, 52));
  b.add_street(rect_ring(-10, 3, 330, 19));
  b.add_sidewalk("canyon_s", rect_ring(-2, 0, 322, 3), 0.0);
  b.add_sidewalk("canyon_n", rect_ring(-2, 19, 322, 22), 0.0);
  sc.map = b.build();
  sc.path.waypoints = {{0, 1.5}, {100, 1.5}, {200, 1.5}, {300, 1.5}};
  // 0.5 m steps divide the 100 m segments exactly, so the tap-derived
  // ground truth coincides with the simulated one.
  sc.path.step_length = 0.5;
  sc.drift = {0.005, 0.03, 1};
  sc.gnss = {4.0, 8.0, 6.0, 5.0, 25.0, {}, 1.0, 2};
  return sc;
}

inline Scenario make_l_corner() {
  Scenario sc;
  sc.name = "l_corner";
  MapBuilder b(scenario_origin());
  b.add_obstacle(rect_ring(-12, 3, 100, 115));    // inner corner block
  b.add_obstacle(rect_ring(-12, -52, 122, -22));  // across the south street
  b.add_obstacle(rect_ring(122, -52, 152, 115));  // across the east street
  b.add_street(rect_ring(-12, -19, 119, 0));
  b.add_street(rect_ring(103, -19, 119, 112));
  b.add_sidewalk("leg_e", rect_ring(-2, 0, 100, 3), 0.0);
  b.add_sidewalk("leg_n", rect_ring(100, 0, 103, 112), 90.0);
  b.add_sidewalk("out_s", rect_ring(-2, -22, 119, -19), 0.0);
  b.add_sidewalk("out_e", rect_ring(119, -22, 122, 112), 90.0);
  sc.map = b.build();
  sc.path.waypoints = {{0, 1.5}, {101.5, 1.5}, {101.5, 110}};
  sc.drift = {0.004, 0.03, 1};
  sc.gnss = {4.0, 8.0, 6.0, 5.0, 25.0, {}, 1.0, 2};
  return sc;
}

inline Scenario make_block_loop() {
  Scenario sc;
  sc.name = "block_loop";
  MapBuilder b(scenario_origin());
  b.add_obstacle(rect_ring(0, 0, 80, 60));  // the block being looped
  b.add_obstacle(rect_ring(-52, -52, 132, -22));
  b.add_obstacle(rect_ring(-52, 82, 132, 112));
  b.add_obstacle(rect_ring(-52, -22, -22, 82));
  b.add_obstacle(rect_ring(102, -22, 132, 82));
  // Street rectangles stop short of the corner intersections, which stay
  // unlabeled: crosswalk areas are gaps in the street surface.
  b.add_street(rect_ring(-3, -19, 83, -3));
  b.add_street(rect_ring(-3, 63, 83, 79));
  b.add_street(rect_ring(-19, -3, -3, 63));
  b.add_street(rect_ring(83, -3, 99, 63));
  b.add_sidewalk("blk_s", rect_ring(-3, -3, 83, 0), 0.0);
  b.add_sidewalk("blk_n", rect_ring(-3, 60, 83, 63), 0.0);
  b.add_sidewalk("blk_w", rect_ring(-3, 0, 0, 60), 90.0);
  b.add_sidewalk("blk_e", rect_ring(80, 0, 83, 60), 90.0);
  b.add_sidewalk("out_s", rect_ring(-19, -22, 99, -19), 0.0);
  b.add_sidewalk("out_n", rect_ring(-19, 79, 99, 82), 0.0);
  b.add_sidewalk("out_w", rect_ring(-22, -19, -19, 79), 90.0);
  b.add_sidewalk("out_e", rect_ring(99, -19, 102, 79), 90.0);
  sc.map = b.build();
  sc.path.waypoints = {
      {-1.5, -1.5}, {81.5, -1.5}, {81.5, 61.5}, {-1.5, 61.5}, {-1.5, -1.5}};
  // A miscalibrated velocity source: modest frame rotation plus a 15% speed
  // scale error, the along-track drift the map alone cannot observe.
  sc.drift = {0.006, 0.05, 1, 1.15};
  // GNSS noise calibrated so the GNSS-only median Euclidean error lands
  // near 13.6 m; the reported radius range keeps fusion's pull strong.
  sc.gnss = {6.0, 17.0, -4.0, 6.0, 14.0, {}, 1.0, 2};
  return sc;
}

inline Scenario make_jaywalk_cross() {
  Scenario sc;
  sc.name = "jaywalk_cross";
  MapBuilder b(scenario_origin());
  b.add_obstacle(rect_ring(-10, -30, 210, 0));
  b.add_obstacle(rect_ring(-10, 22, 210, 52));
  // Crosswalk gap at x in [188, 192]; the walk crosses at x = 100, far from it.
  b.add_street(rect_ring(-10, 3, 188, 19));
  b.add_street(rect_ring(192, 3, 210, 19));
  b.add_sidewalk("jw_s", rect_ring(-2, 0, 202, 3), 0.0);
  b.add_sidewalk("jw_n", rect_ring(-2, 19, 202, 22), 0.0);
  sc.map = b.build();
  sc.path.waypoints = {{0, 1.5}, {100, 1.5}, {100, 20.5}, {200, 20.5}};
  sc.drift = {0.005, 0.03, 1};
  sc.gnss = {4.0, 8.0, 6.0, 5.0, 25.0, {}, 1.0, 2};
  return sc;
}

inline Scenario make_covered_hub() {
  Scenario sc;
  sc.name = "covered_hub";
  MapBuilder b(scenario_origin());
  b.add_obstacle(rect_ring(-45, -30, 165, 0));  // hall south wall
  b.add_obstacle(rect_ring(-45, 60, 165, 90));  // hall north wall
  b.add_obstacle(rect_ring(-5, 0, 0, 24));      // west wall below entrance
  b.add_obstacle(rect_ring(-5, 30, 0, 60));     // west wall above entrance
  b.add_obstacle(rect_ring(120, 0, 125, 24));   // east wall below exit
  b.add_obstacle(rect_ring(120, 30, 125, 60));  // east wall above exit
  // Pillar rows inside the hub.
  for (double px : {30.0, 60.0, 90.0}) {
    b.add_obstacle(rect_ring(px - 1, 14, px + 1, 16));
    b.add_obstacle(rect_ring(px - 1, 44, px + 1, 46));
  }
  b.add_sidewalk("app_w", rect_ring(-45, 24, 0, 30), 0.0);
  b.add_sidewalk("app_e", rect_ring(125, 24, 165, 30), 0.0);
  sc.map = b.build();
  sc.path.waypoints = {{-40, 27}, {20, 27},  {40, 45},  {70, 10},
                       {100, 45}, {120, 27}, {160, 27}};
  sc.drift = {0.002, 0.03, 1};
  // Fixes vanish while the walker is under the roof: >= 60% of the walk.
  sc.gnss = {3.0, 6.0, 4.0, 5.0, 20.0, {{26.0, 155.0}}, 1.0, 2};
  return sc;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + salt * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

inline Scenario builtin_scenario(const std::string& name) {
  if (name == "straight_canyon") return detail::make_straight_canyon();
  if (name == "l_corner") return detail::make_l_corner();
  if (name == "block_loop") return detail::make_block_loop();
  if (name == "jaywalk_cross") return detail::make_jaywalk_cross();
  if (name == "covered_hub") return detail::make_covered_hub();
  throw std::runtime_error("unknown scenario '" + name + "'");
}

/// Generates the full sensor trace for a scenario. The run seed perturbs the
/// drift and GNSS model seeds so replications are independent.
inline SyntheticTrace make_trace(const Scenario& sc, std::uint64_t seed) {
  SyntheticTrace trace;
  trace.truth = generate_ground_truth(sc.path);
  ImuDriftModel drift = sc.drift;
  drift.seed = detail::mix_seed(seed, drift.seed | 1);
  GnssNoiseModel gnss = sc.gnss;
  gnss.seed = detail::mix_seed(seed, (gnss.seed << 1) | 1);
  trace.velocities = synthesize_velocity(trace.truth, drift);
  trace.fixes = synthesize_gnss(trace.truth, sc.map, gnss);
  return trace;
}

/// Serializes a synthetic trace into the on-disk record stream (geodetic
/// coordinates, format_version header, stable ordering at equal timestamps).
inline std::vector<TraceRecord> to_trace_records(const SyntheticTrace& trace,
                                                 const LocalProjection& proj) {
  struct Entry {
    double t;
    int priority;
    TraceRecord rec;
  };
  std::vector<Entry> entries;
  entries.reserve(trace.truth.times.size() + trace.velocities.size() +
                  trace.fixes.size() + trace.truth.tap_times.size());
  for (std::size_t i = 0; i < trace.truth.times.size(); ++i)
    entries.push_back({trace.truth.times[i], 0, FootstepRecord{trace.truth.times[i]}});
  for (const auto& v : trace.velocities)
    entries.push_back({v.timestamp, 1, VelocityRecord{v.timestamp, v.v.x, v.v.y}});
  for (const auto& f : trace.fixes) {
    const GeoPoint g = proj.to_geo(f.position);
    entries.push_back({f.timestamp, 2,
                       GnssRecord{f.timestamp, g.longitude, g.latitude,
                                  f.uncertainty_radius}});
  }
  for (std::size_t i = 0; i < trace.truth.tap_times.size(); ++i) {
    const GeoPoint g = proj.to_geo(trace.truth.tap_positions[i]);
    entries.push_back({trace.truth.tap_times[i], 3,
                       WaypointTapRecord{trace.truth.tap_times[i], g.longitude,
                                         g.latitude}});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.t < b.t || (a.t == b.t && a.priority < b.priority);
  });
  std::vector<TraceRecord> records;
  records.reserve(entries.size() + 1);
  records.push_back(format_version_record());
  for (auto& e : entries) records.push_back(std::move(e.rec));
  return records;
}

}  // namespace pedloc
