#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pedloc/filter.hpp"
#include "pedloc/geomap.hpp"
#include "pedloc/metrics.hpp"
#include "pedloc/simulate.hpp"
#include "pedloc/trace_io.hpp"

namespace pedloc {

/// The three tracking configurations under comparison.
enum class RunMode { GnssOnly, RoninPf, GnssRoninPf };

inline const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::GnssOnly: return "gnss_only";
    case RunMode::RoninPf: return "ronin_pf";
    case RunMode::GnssRoninPf: return "gnss_ronin_pf";
  }
  return "?";
}

inline RunMode parse_run_mode(const std::string& s) {
  if (s == "gnss_only") return RunMode::GnssOnly;
  if (s == "ronin_pf") return RunMode::RoninPf;
  if (s == "gnss_ronin_pf") return RunMode::GnssRoninPf;
  throw std::runtime_error("unknown mode '" + s +
                           "' (expected gnss_only | ronin_pf | gnss_ronin_pf)");
}

namespace detail {

/// Index of the velocity sample driving the step to footstep time t, or
/// throws: traces must carry one velocity per footstep after the first.
inline std::size_t velocity_index_at(const std::vector<VelocitySample>& vs,
                                     std::size_t cursor, double t) {
  while (cursor < vs.size() && vs[cursor].timestamp < t - 1e-9) ++cursor;
  if (cursor >= vs.size() || std::abs(vs[cursor].timestamp - t) > 1e-9)
    throw std::runtime_error("no velocity sample for footstep at t=" +
                             std::to_string(t));
  return cursor;
}

}  // namespace detail

/// Pure dead reckoning: cumulative v*dt from the known start, no filtering.
/// Serves as the drift baseline the filter is judged against.
inline std::vector<LocalPoint> dead_reckoning_track(const ReplaySession& session) {
  std::vector<LocalPoint> track;
  track.reserve(session.footstep_times.size());
  LocalPoint p = session.truth.front();
  track.push_back(p);
  std::size_t vc = 0;
  for (std::size_t i = 1; i < session.footstep_times.size(); ++i) {
    const double t = session.footstep_times[i];
    vc = detail::velocity_index_at(session.velocities, vc, t);
    const double dt = t - session.footstep_times[i - 1];
    p += session.velocities[vc].v * dt;
    track.push_back(p);
  }
  return track;
}

struct FilterRun {
  std::vector<StateEstimate> estimates;  // one per footstep
  int fixes_used = 0;                    // fixes that passed the radius gate
};

/// Runs the particle filter over the session footsteps. When use_gnss is
/// set, each step consumes the latest fix that arrived since the previous
/// footstep.
inline FilterRun run_filter(const ReplaySession& session, bool use_gnss,
                            const FilterConfig& config) {
  FilterRun out;
  const auto& times = session.footstep_times;
  if (times.empty()) throw std::runtime_error("session has no footsteps");
  ParticleSet set = init_particle_set(session.truth.front(), 0.0, config);
  StateEstimate first = estimate(set);
  first.timestamp = times.front();
  set.recovery_anchor = first.position;
  out.estimates.push_back(first);

  std::size_t vc = 0;
  std::size_t fc = 0;
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double t = times[i];
    vc = detail::velocity_index_at(session.velocities, vc, t);
    const double dt = t - times[i - 1];

    std::optional<GnssFix> fix;
    if (use_gnss) {
      std::size_t last = fc;
      bool any = false;
      while (last < session.fixes.size() &&
             session.fixes[last].timestamp <= t + 1e-9) {
        any = true;
        ++last;
      }
      if (any) {
        fix = session.fixes[last - 1];
        fc = last;
      }
    }
    if (fix && gnss_fix_applies(*fix, config)) ++out.fixes_used;
    out.estimates.push_back(
        step(set, session.velocities[vc], dt, fix, *session.map, config));
  }
  return out;
}

/// GNSS resampled at footstep times by zero-order hold: the most recent fix
/// wins; during an outage the last fix persists. Takes no filter
/// configuration by construction.
inline std::vector<LocalPoint> gnss_only_track(const ReplaySession& session) {
  if (session.fixes.empty())
    throw std::runtime_error("gnss_only requires at least one fix in the trace");
  std::vector<LocalPoint> track;
  track.reserve(session.footstep_times.size());
  std::size_t fc = 0;
  for (double t : session.footstep_times) {
    while (fc + 1 < session.fixes.size() &&
           session.fixes[fc + 1].timestamp <= t + 1e-9) {
      ++fc;
    }
    // Before the first fix arrives, fall back to it (documented choice).
    track.push_back(session.fixes[fc].position);
  }
  return track;
}

struct RunResult {
  RunMode mode = RunMode::GnssRoninPf;
  std::uint64_t seed = 0;
  int fixes_used = 0;
  std::vector<FootstepEval> evals;
  std::vector<LocalPoint> track;
  MetricSummary summary;
};

// The seed recorded in the result is the caller's run seed; run() fills it.
// gnss_only summaries must not vary with any FilterConfig field, the filter
// seed included.
inline RunResult run_session(const ReplaySession& session, RunMode mode,
                             const FilterConfig& filter_config) {
  RunResult r;
  r.mode = mode;
  switch (mode) {
    case RunMode::GnssOnly: {
      r.track = gnss_only_track(session);
      r.fixes_used = static_cast<int>(session.fixes.size());
      break;
    }
    case RunMode::RoninPf:
    case RunMode::GnssRoninPf: {
      const FilterRun fr =
          run_filter(session, mode == RunMode::GnssRoninPf, filter_config);
      r.fixes_used = fr.fixes_used;
      r.track.reserve(fr.estimates.size());
      for (const auto& e : fr.estimates) r.track.push_back(e.position);
      break;
    }
  }
  r.evals.reserve(session.footstep_times.size());
  for (std::size_t i = 0; i < session.footstep_times.size(); ++i) {
    r.evals.push_back(evaluate_footstep(session.footstep_times[i],
                                        session.truth[i], r.track[i],
                                        *session.map));
  }
  r.summary = summarize(r.evals);
  return r;
}

/// Metrics-only summary document; key order (and therefore the byte stream)
/// is deterministic.
inline nlohmann::json summary_to_json(const RunResult& r) {
  return {{"mode", to_string(r.mode)},
          {"seed", r.seed},
          {"n_footsteps", r.evals.size()},
          {"fixes_used", r.fixes_used},
          {"correct_sidewalk_proportion", r.summary.correct_sidewalk_proportion},
          {"euclidean",
           {{"mean", r.summary.euclidean_mean},
            {"median", r.summary.euclidean_median},
            {"p90", r.summary.euclidean_p90}}},
          {"along",
           {{"median", r.summary.along_median}, {"p90", r.summary.along_p90}}},
          {"across",
           {{"median", r.summary.across_median}, {"p90", r.summary.across_p90}}}};
}

namespace detail {

// Shortest decimal form that parses back to the same double.
inline std::string dtos(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

inline void write_artifacts(const RunResult& r, const ReplaySession& session,
                            const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  {
    std::ofstream out(dir / "summary.json");
    if (!out) throw std::runtime_error("cannot write summary.json");
    out << summary_to_json(r).dump(2) << "\n";
  }
  {
    std::ofstream out(dir / "evals.csv");
    if (!out) throw std::runtime_error("cannot write evals.csv");
    out << "timestamp,truth_x,truth_y,est_x,est_y,euclidean,along,across,"
           "assigned_sidewalk,truth_sidewalk,correct\n";
    for (const auto& ev : r.evals) {
      out << detail::dtos(ev.timestamp) << ',' << detail::dtos(ev.truth.x) << ','
          << detail::dtos(ev.truth.y) << ',' << detail::dtos(ev.estimate.x) << ','
          << detail::dtos(ev.estimate.y) << ',' << detail::dtos(ev.euclidean)
          << ',' << detail::dtos(ev.along) << ',' << detail::dtos(ev.across)
          << ',' << ev.assigned_sidewalk << ',' << ev.truth_sidewalk << ','
          << (ev.correct ? 1 : 0) << "\n";
    }
  }
  {
    std::ofstream out(dir / "cdf.csv");
    if (!out) throw std::runtime_error("cannot write cdf.csv");
    out << "euclidean_error,cum_prob\n";
    const auto& cdf = r.summary.cdf;
    for (std::size_t i = 0; i < cdf.size(); ++i) {
      out << detail::dtos(cdf[i]) << ','
          << detail::dtos(static_cast<double>(i + 1) /
                          static_cast<double>(cdf.size()))
          << "\n";
    }
  }
  {
    const LocalProjection& proj = session.map->projection();
    auto line_feature = [&](const std::vector<LocalPoint>& pts,
                            const std::string& mode_name) {
      nlohmann::json coords = nlohmann::json::array();
      for (const auto& p : pts) {
        const GeoPoint g = proj.to_geo(p);
        coords.push_back({g.longitude, g.latitude});
      }
      return nlohmann::json{
          {"type", "Feature"},
          {"properties", {{"mode", mode_name}}},
          {"geometry", {{"type", "LineString"}, {"coordinates", coords}}}};
    };
    nlohmann::json features = nlohmann::json::array();
    features.push_back(line_feature(r.track, to_string(r.mode)));
    features.push_back(line_feature(session.truth, "ground_truth"));
    nlohmann::json track = {{"type", "FeatureCollection"}, {"features", features}};
    std::ofstream out(dir / "track.geojson");
    if (!out) throw std::runtime_error("cannot write track.geojson");
    out << track.dump(2) << "\n";
  }
}

/// Top-level run request: one input source (built-in scenario or trace+map
/// files), a mode, a filter configuration, and a seed that drives both the
/// simulation draw and the filter.
struct RunConfig {
  RunMode mode = RunMode::GnssRoninPf;
  FilterConfig filter;
  std::string scenario;
  std::string trace_path;
  std::string map_path;
  std::string out_dir;  // empty: no artifacts written
  std::uint64_t seed = 1;

  void validate() const {
    const bool has_scenario = !scenario.empty();
    const bool has_trace = !trace_path.empty() || !map_path.empty();
    if (has_scenario == has_trace)
      throw std::runtime_error(
          "exactly one input source required: a scenario name or trace+map paths");
    if (has_trace && (trace_path.empty() || map_path.empty()))
      throw std::runtime_error("replay requires both trace and map paths");
  }
};

struct LoadedInput {
  GeoSegmentMap map;
  std::vector<TraceRecord> records;
  std::string source;
};

inline LoadedInput load_input(const RunConfig& config) {
  config.validate();
  LoadedInput in;
  if (!config.scenario.empty()) {
    Scenario sc = builtin_scenario(config.scenario);
    const SyntheticTrace trace = make_trace(sc, config.seed);
    in.records = to_trace_records(trace, sc.map.projection());
    in.map = std::move(sc.map);
    in.source = config.scenario;
  } else {
    in.map = load_map(config.map_path);
    in.records = read_trace(config.trace_path);
    in.source = config.trace_path;
  }
  return in;
}

inline FilterConfig effective_filter_config(const RunConfig& config) {
  FilterConfig fc = config.filter;
  fc.seed = detail::mix_seed(config.seed, 0xF117E5ull);
  return fc;
}

inline RunResult run(const RunConfig& config) {
  const LoadedInput in = load_input(config);
  const ReplaySession session = make_session(in.records, in.map);
  RunResult r = run_session(session, config.mode, effective_filter_config(config));
  r.seed = config.seed;
  if (!config.out_dir.empty()) write_artifacts(r, session, config.out_dir);
  return r;
}

// ---------------------------------------------------------------------------
// Parameter sweeps

struct SweepSpec {
  std::string parameter;
  std::vector<double> values;
  int replications = 1;

  void validate() const {
    if (values.empty()) throw std::runtime_error("sweep needs a nonempty value list");
    if (replications < 1) throw std::runtime_error("replications must be >= 1");
  }
};

inline void set_filter_parameter(FilterConfig& fc, const std::string& name,
                                 double value) {
  if (name == "jaywalk_weight") fc.jaywalk_weight = value;
  else if (name == "pos_noise_sigma") fc.pos_noise_sigma = value;
  else if (name == "theta_noise_sigma") fc.theta_noise_sigma = value;
  else if (name == "gnss_sigma_scale") fc.gnss_sigma_scale = value;
  else if (name == "gnss_radius_threshold") fc.gnss_radius_threshold = value;
  else if (name == "init_pos_sigma") fc.init_pos_sigma = value;
  else if (name == "init_theta_sigma") fc.init_theta_sigma = value;
  else if (name == "n_particles") fc.n_particles = static_cast<int>(value);
  else throw std::runtime_error("unknown parameter '" + name + "'");
  fc.validate();
}

struct SweepRow {
  double value = 0.0;
  int replication = 0;  // -1 marks the per-value aggregate row
  std::uint64_t seed = 0;
  std::size_t n_footsteps = 0;
  int fixes_used = 0;
  MetricSummary summary;
};

struct SweepResult {
  std::string parameter;
  std::string aggregate;  // "pooled" or "per_run"
  std::vector<SweepRow> rows;
};

/// One run per (value, replication) on a seed ladder, plus an aggregate row
/// per value. Pooled aggregation concatenates all footstep evals for the
/// value; per_run averages the per-replication summaries.
inline SweepResult sweep(const SweepSpec& spec, const RunConfig& base,
                         const std::string& aggregate = "pooled") {
  spec.validate();
  if (aggregate != "pooled" && aggregate != "per_run")
    throw std::runtime_error("aggregate must be 'pooled' or 'per_run'");
  {
    FilterConfig probe = base.filter;  // reject unknown names up front
    set_filter_parameter(probe, spec.parameter, spec.values.front());
  }
  SweepResult result;
  result.parameter = spec.parameter;
  result.aggregate = aggregate;
  for (double value : spec.values) {
    std::vector<FootstepEval> pooled;
    std::vector<MetricSummary> run_summaries;
    for (int rep = 0; rep < spec.replications; ++rep) {
      RunConfig cfg = base;
      cfg.out_dir.clear();
      set_filter_parameter(cfg.filter, spec.parameter, value);
      cfg.seed = base.seed + static_cast<std::uint64_t>(rep);
      const RunResult r = run(cfg);
      result.rows.push_back({value, rep, cfg.seed, r.evals.size(), r.fixes_used,
                             r.summary});
      if (aggregate == "pooled")
        pooled.insert(pooled.end(), r.evals.begin(), r.evals.end());
      else
        run_summaries.push_back(r.summary);
    }
    SweepRow agg;
    agg.value = value;
    agg.replication = -1;
    if (aggregate == "pooled") {
      agg.n_footsteps = pooled.size();
      agg.summary = summarize(pooled);
    } else {
      MetricSummary m;
      const double inv = 1.0 / static_cast<double>(run_summaries.size());
      for (const auto& s : run_summaries) {
        m.correct_sidewalk_proportion += s.correct_sidewalk_proportion * inv;
        m.euclidean_mean += s.euclidean_mean * inv;
        m.euclidean_median += s.euclidean_median * inv;
        m.euclidean_p90 += s.euclidean_p90 * inv;
        m.along_median += s.along_median * inv;
        m.along_p90 += s.along_p90 * inv;
        m.across_median += s.across_median * inv;
        m.across_p90 += s.across_p90 * inv;
      }
      agg.summary = std::move(m);
    }
    result.rows.push_back(std::move(agg));
  }
  return result;
}

inline void write_sweep_csv(const SweepResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write sweep csv: " + path);
  out << "parameter,value,replication,seed,n_footsteps,fixes_used,"
         "correct_sidewalk,euclid_mean,euclid_median,euclid_p90,"
         "along_median,along_p90,across_median,across_p90\n";
  for (const auto& row : result.rows) {
    out << result.parameter << ',' << detail::dtos(row.value) << ','
        << (row.replication < 0 ? std::string("aggregate")
                                : std::to_string(row.replication))
        << ',' << (row.replication < 0 ? std::string("-")
                                       : std::to_string(row.seed))
        << ',' << row.n_footsteps << ',' << row.fixes_used << ','
        << detail::dtos(row.summary.correct_sidewalk_proportion) << ','
        << detail::dtos(row.summary.euclidean_mean) << ','
        << detail::dtos(row.summary.euclidean_median) << ','
        << detail::dtos(row.summary.euclidean_p90) << ','
        << detail::dtos(row.summary.along_median) << ','
        << detail::dtos(row.summary.along_p90) << ','
        << detail::dtos(row.summary.across_median) << ','
        << detail::dtos(row.summary.across_p90) << "\n";
  }
}

// ---------------------------------------------------------------------------
// Map validation

struct MapValidationIssue {
  bool error = false;  // false: warning
  std::string message;
};

struct MapValidationReport {
  int n_impenetrable = 0;
  int n_street = 0;
  int n_sidewalk = 0;
  std::vector<MapValidationIssue> issues;

  bool ok() const {
    for (const auto& i : issues) {
      if (i.error) return false;
    }
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json errors = nlohmann::json::array();
    nlohmann::json warnings = nlohmann::json::array();
    for (const auto& i : issues) (i.error ? errors : warnings).push_back(i.message);
    return {{"label_counts",
             {{"impenetrable", n_impenetrable},
              {"street", n_street},
              {"sidewalk", n_sidewalk}}},
            {"errors", errors},
            {"warnings", warnings},
            {"ok", ok()}};
  }
};

/// Structural and sanity checks over a map file: label counts, ring
/// validity, obstacle/street overlap warnings, and sidewalk bearings vs the
/// polygon's principal axis (warn when > 25 degrees off for clearly
/// elongated polygons).
inline MapValidationReport validate_map_file(const std::string& path) {
  MapValidationReport report;
  nlohmann::json root;
  {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open map file: " + path);
    try {
      in >> root;
    } catch (const nlohmann::json::exception& e) {
      report.issues.push_back({true, std::string("JSON parse failure: ") + e.what()});
      return report;
    }
  }
  if (!root.is_object() || root.value("type", "") != "FeatureCollection" ||
      !root.contains("features") || !root["features"].is_array()) {
    report.issues.push_back({true, "not a GeoJSON FeatureCollection"});
    return report;
  }

  const auto& features = root["features"];
  std::vector<std::string> sidewalk_ids;
  for (int i = 0; i < static_cast<int>(features.size()); ++i) {
    const auto& f = features[i];
    const auto props = f.value("properties", nlohmann::json::object());
    const std::string label =
        props.contains("label") && props["label"].is_string()
            ? props["label"].get<std::string>()
            : "";
    if (label.empty()) {
      report.issues.push_back({true, "missing label at feature " + std::to_string(i)});
      continue;
    }
    if (label == "impenetrable") ++report.n_impenetrable;
    else if (label == "street") ++report.n_street;
    else if (label == "sidewalk") ++report.n_sidewalk;
    else {
      report.issues.push_back(
          {true, "unknown label '" + label + "' at feature " + std::to_string(i)});
      continue;
    }
    if (!f.contains("geometry") || !f["geometry"].is_object() ||
        f["geometry"].value("type", "") != "Polygon" ||
        !f["geometry"].contains("coordinates")) {
      report.issues.push_back(
          {true, "unsupported geometry (expected Polygon) at feature " +
                     std::to_string(i)});
      continue;
    }
    for (const auto& ring : f["geometry"]["coordinates"]) {
      try {
        detail::parse_geo_ring(ring, i);
      } catch (const std::exception& e) {
        report.issues.push_back({true, e.what()});
      }
    }
    if (label == "sidewalk") {
      if (!props.contains("id") || !props["id"].is_string())
        report.issues.push_back(
            {true, "missing sidewalk id at feature " + std::to_string(i)});
      else {
        const std::string id = props["id"].get<std::string>();
        for (const auto& seen : sidewalk_ids) {
          if (seen == id)
            report.issues.push_back({true, "duplicate sidewalk id '" + id +
                                               "' at feature " + std::to_string(i)});
        }
        sidewalk_ids.push_back(id);
      }
      if (!props.contains("bearing_deg") || !props["bearing_deg"].is_number())
        report.issues.push_back(
            {true, "missing sidewalk bearing at feature " + std::to_string(i)});
    }
  }
  if (!report.ok()) return report;

  // Geometric checks need the built map.
  GeoSegmentMap map;
  try {
    map = parse_map_geojson(root);
  } catch (const std::exception& e) {
    report.issues.push_back({true, e.what()});
    return report;
  }
  for (std::size_t i = 0; i < map.obstacles().size(); ++i) {
    const auto& rings = map.obstacles()[i].shape;
    if (!ring_is_simple(rings.outer))
      report.issues.push_back(
          {true, "self-intersecting obstacle ring (obstacle " + std::to_string(i) + ")"});
  }
  for (std::size_t i = 0; i < map.streets().size(); ++i) {
    if (!ring_is_simple(map.streets()[i].shape.outer))
      report.issues.push_back(
          {true, "self-intersecting street ring (street " + std::to_string(i) + ")"});
  }
  for (const auto& s : map.sidewalks()) {
    if (!ring_is_simple(s.polygon))
      report.issues.push_back({true, "self-intersecting sidewalk ring '" + s.id + "'"});
  }
  if (!report.ok()) return report;

  for (std::size_t i = 0; i < map.obstacles().size(); ++i) {
    for (std::size_t j = 0; j < map.streets().size(); ++j) {
      if (rings_overlap(map.obstacles()[i].shape.outer, map.streets()[j].shape.outer))
        report.issues.push_back(
            {false, "obstacle " + std::to_string(i) + " overlaps street " +
                        std::to_string(j) + " (impenetrable takes precedence)"});
    }
  }
  for (const auto& s : map.sidewalks()) {
    if (elongation_ratio(s.polygon) < 4.0) continue;  // axis ill-defined
    const Vec2 axis = principal_axis(s.polygon);
    const double cosang = std::abs(axis.dot(s.street_bearing));
    const double off = rad_to_deg(std::acos(std::clamp(cosang, 0.0, 1.0)));
    if (off > 25.0) {
      report.issues.push_back(
          {false, "sidewalk '" + s.id + "' bearing is " + detail::dtos(off) +
                      " degrees off its polygon's principal axis"});
    }
  }
  return report;
}

}  // namespace pedloc
