#pragma once

#include <algorithm>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "pedloc/filter.hpp"
#include "pedloc/geomap.hpp"
#include "pedloc/geometry.hpp"

namespace pedloc {

inline constexpr const char* kTraceFormatVersion = "1";

struct FootstepRecord {
  double t = 0.0;
};

struct VelocityRecord {
  double t = 0.0;
  double vx = 0.0;
  double vy = 0.0;
};

struct GnssRecord {
  double t = 0.0;
  double lon = 0.0;
  double lat = 0.0;
  double uncertainty_radius = 0.0;
};

struct WaypointTapRecord {
  double t = 0.0;
  double lon = 0.0;
  double lat = 0.0;
};

struct MetaRecord {
  std::string key;
  std::string value;
};

/// One line of a trace file. Timestamps must be nondecreasing in file order;
/// Meta records carry no timestamp and are exempt.
using TraceRecord = std::variant<FootstepRecord, VelocityRecord, GnssRecord,
                                 WaypointTapRecord, MetaRecord>;

inline MetaRecord format_version_record() {
  return MetaRecord{"format_version", kTraceFormatVersion};
}

inline nlohmann::json record_to_json(const TraceRecord& rec) {
  nlohmann::json j;
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, FootstepRecord>) {
          j = {{"type", "Footstep"}, {"t", r.t}};
        } else if constexpr (std::is_same_v<T, VelocityRecord>) {
          j = {{"type", "Velocity"}, {"t", r.t}, {"vx", r.vx}, {"vy", r.vy}};
        } else if constexpr (std::is_same_v<T, GnssRecord>) {
          j = {{"type", "Gnss"},
               {"t", r.t},
               {"lon", r.lon},
               {"lat", r.lat},
               {"uncertainty_radius", r.uncertainty_radius}};
        } else if constexpr (std::is_same_v<T, WaypointTapRecord>) {
          j = {{"type", "WaypointTap"}, {"t", r.t}, {"lon", r.lon}, {"lat", r.lat}};
        } else {
          j = {{"type", "Meta"}, {"key", r.key}, {"value", r.value}};
        }
      },
      rec);
  return j;
}

namespace detail {

inline double require_number(const nlohmann::json& j, const char* field,
                             const char* type, int line) {
  if (!j.contains(field) || !j[field].is_number()) {
    throw std::runtime_error("missing field '" + std::string(field) + "' in " +
                             type + " record at line " + std::to_string(line));
  }
  return j[field].get<double>();
}

}  // namespace detail

inline TraceRecord parse_record(const std::string& line, int line_number) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed trace line " +
                             std::to_string(line_number) + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw std::runtime_error("missing record type at line " +
                             std::to_string(line_number));
  const std::string type = j["type"].get<std::string>();
  if (type == "Footstep") {
    return FootstepRecord{detail::require_number(j, "t", "Footstep", line_number)};
  }
  if (type == "Velocity") {
    return VelocityRecord{detail::require_number(j, "t", "Velocity", line_number),
                          detail::require_number(j, "vx", "Velocity", line_number),
                          detail::require_number(j, "vy", "Velocity", line_number)};
  }
  if (type == "Gnss") {
    return GnssRecord{
        detail::require_number(j, "t", "Gnss", line_number),
        detail::require_number(j, "lon", "Gnss", line_number),
        detail::require_number(j, "lat", "Gnss", line_number),
        detail::require_number(j, "uncertainty_radius", "Gnss", line_number)};
  }
  if (type == "WaypointTap") {
    return WaypointTapRecord{
        detail::require_number(j, "t", "WaypointTap", line_number),
        detail::require_number(j, "lon", "WaypointTap", line_number),
        detail::require_number(j, "lat", "WaypointTap", line_number)};
  }
  if (type == "Meta") {
    if (!j.contains("key") || !j["key"].is_string() || !j.contains("value") ||
        !j["value"].is_string())
      throw std::runtime_error("malformed Meta record at line " +
                               std::to_string(line_number));
    return MetaRecord{j["key"].get<std::string>(), j["value"].get<std::string>()};
  }
  // Unknown record types are preserved as Meta so they survive rewrites.
  return MetaRecord{type, line};
}

inline std::optional<double> record_timestamp(const TraceRecord& rec) {
  return std::visit(
      [](const auto& r) -> std::optional<double> {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, MetaRecord>)
          return std::nullopt;
        else
          return r.t;
      },
      rec);
}

inline std::vector<TraceRecord> read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  std::vector<TraceRecord> records;
  std::string line;
  int line_number = 0;
  double last_t = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    TraceRecord rec = parse_record(line, line_number);
    if (auto t = record_timestamp(rec)) {
      if (*t < last_t)
        throw std::runtime_error("timestamp regression at line " +
                                 std::to_string(line_number));
      last_t = *t;
    }
    if (records.empty()) {
      if (const auto* meta = std::get_if<MetaRecord>(&rec);
          meta && meta->key == "format_version" &&
          meta->value != kTraceFormatVersion) {
        throw std::runtime_error("unsupported trace format_version '" +
                                 meta->value + "'");
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

inline void write_trace(const std::vector<TraceRecord>& records,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace file: " + path);
  for (const auto& rec : records) out << record_to_json(rec).dump() << "\n";
}

/// Places footsteps on the straight segment between consecutive waypoint
/// taps at equal arc-length spacing by footstep count: k interior footsteps
/// split the segment into k+1 equal gaps. A footstep whose timestamp equals
/// a tap's is the waypoint itself.
inline std::vector<LocalPoint> derive_ground_truth(
    const std::vector<double>& tap_times, const std::vector<LocalPoint>& tap_positions,
    const std::vector<double>& footstep_times) {
  if (tap_times.size() != tap_positions.size())
    throw std::invalid_argument("tap times/positions size mismatch");
  if (tap_times.size() < 2)
    throw std::runtime_error("ground-truth derivation needs >= 2 waypoint taps");
  for (std::size_t i = 1; i < tap_times.size(); ++i) {
    if (!(tap_times[i] > tap_times[i - 1]))
      throw std::runtime_error("waypoint taps must be strictly increasing in time");
  }

  std::vector<LocalPoint> truth(footstep_times.size());
  std::vector<char> placed(footstep_times.size(), 0);

  for (std::size_t i = 0; i < footstep_times.size(); ++i) {
    const double t = footstep_times[i];
    if (t < tap_times.front() || t > tap_times.back())
      throw std::runtime_error("footstep at t=" + std::to_string(t) +
                               " outside waypoint tap intervals");
    for (std::size_t k = 0; k < tap_times.size(); ++k) {
      if (t == tap_times[k]) {
        truth[i] = tap_positions[k];
        placed[i] = 1;
        break;
      }
    }
  }

  // Interior footsteps, grouped per tap interval.
  for (std::size_t k = 0; k + 1 < tap_times.size(); ++k) {
    const double t0 = tap_times[k];
    const double t1 = tap_times[k + 1];
    std::vector<std::size_t> interior;
    for (std::size_t i = 0; i < footstep_times.size(); ++i) {
      if (!placed[i] && footstep_times[i] > t0 && footstep_times[i] < t1)
        interior.push_back(i);
    }
    std::sort(interior.begin(), interior.end(),
              [&](std::size_t a, std::size_t b) {
                return footstep_times[a] < footstep_times[b];
              });
    const Vec2 a = tap_positions[k];
    const Vec2 b = tap_positions[k + 1];
    const double denom = static_cast<double>(interior.size()) + 1.0;
    for (std::size_t j = 0; j < interior.size(); ++j) {
      const double frac = static_cast<double>(j + 1) / denom;
      truth[interior[j]] = a + (b - a) * frac;
      placed[interior[j]] = 1;
    }
  }

  for (std::size_t i = 0; i < placed.size(); ++i) {
    if (!placed[i])
      throw std::logic_error("footstep not covered by any tap interval");
  }
  return truth;
}

/// A trace bound to a map: footstep times, sensor streams projected into the
/// local frame, and ground truth re-derived from the waypoint taps.
/// Immutable after construction.
struct ReplaySession {
  std::vector<TraceRecord> records;
  const GeoSegmentMap* map = nullptr;
  std::vector<double> footstep_times;
  std::vector<LocalPoint> truth;
  std::vector<VelocitySample> velocities;
  std::vector<GnssFix> fixes;
  std::vector<double> tap_times;
  std::vector<LocalPoint> tap_positions;
};

inline ReplaySession make_session(std::vector<TraceRecord> records,
                                  const GeoSegmentMap& map) {
  ReplaySession s;
  s.map = &map;
  const LocalProjection& proj = map.projection();
  for (const auto& rec : records) {
    std::visit(
        [&](const auto& r) {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, FootstepRecord>) {
            if (!s.footstep_times.empty() && r.t == s.footstep_times.back())
              throw std::runtime_error("duplicate footstep timestamp t=" +
                                       std::to_string(r.t));
            s.footstep_times.push_back(r.t);
          } else if constexpr (std::is_same_v<T, VelocityRecord>) {
            if (!s.velocities.empty() && r.t <= s.velocities.back().timestamp)
              throw std::runtime_error(
                  "velocity timestamps must be strictly increasing");
            if (!std::isfinite(r.vx) || !std::isfinite(r.vy))
              throw std::runtime_error("non-finite velocity at t=" +
                                       std::to_string(r.t));
            s.velocities.push_back({{r.vx, r.vy}, r.t});
          } else if constexpr (std::is_same_v<T, GnssRecord>) {
            if (!(r.uncertainty_radius > 0.0))
              throw std::runtime_error("nonpositive GNSS uncertainty radius at t=" +
                                       std::to_string(r.t));
            s.fixes.push_back(
                {proj.to_local({r.lon, r.lat}), r.uncertainty_radius, r.t});
          } else if constexpr (std::is_same_v<T, WaypointTapRecord>) {
            s.tap_times.push_back(r.t);
            s.tap_positions.push_back(proj.to_local({r.lon, r.lat}));
          }
        },
        rec);
  }
  s.truth = derive_ground_truth(s.tap_times, s.tap_positions, s.footstep_times);
  s.records = std::move(records);
  return s;
}

inline ReplaySession load_session(const std::string& trace_path,
                                  const GeoSegmentMap& map) {
  return make_session(read_trace(trace_path), map);
}

}  // namespace pedloc
