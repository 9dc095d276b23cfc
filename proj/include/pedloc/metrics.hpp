#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "pedloc/geomap.hpp"
#include "pedloc/geometry.hpp"

namespace pedloc {

/// Per-footstep evaluation row: all three error metrics plus the sidewalk
/// assignment outcome.
struct FootstepEval {
  double timestamp = 0.0;
  LocalPoint truth;
  LocalPoint estimate;
  double euclidean = 0.0;
  double along = 0.0;   // magnitude of the along-street error component
  double across = 0.0;  // magnitude of the across-street error component
  std::string assigned_sidewalk;
  std::string truth_sidewalk;
  bool correct = false;
};

struct MetricSummary {
  double correct_sidewalk_proportion = 0.0;
  double euclidean_mean = 0.0;
  double euclidean_median = 0.0;
  double euclidean_p90 = 0.0;
  double along_median = 0.0;
  double along_p90 = 0.0;
  double across_median = 0.0;
  double across_p90 = 0.0;
  std::vector<double> cdf;  // sorted Euclidean errors
};

inline double euclidean_error(const LocalPoint& estimate,
                              const LocalPoint& truth) {
  return (estimate - truth).norm();
}

/// Decomposes the error vector into along- and across-street magnitudes.
/// street_dir must be unit length; directions within 1e-3 of unit are
/// normalized, anything further off is rejected.
inline std::pair<double, double> along_across_error(const LocalPoint& estimate,
                                                    const LocalPoint& truth,
                                                    Vec2 street_dir) {
  const double n = street_dir.norm();
  if (std::abs(n - 1.0) > 1e-3)
    throw std::invalid_argument("street_dir must be a unit vector");
  if (n != 1.0) street_dir = {street_dir.x / n, street_dir.y / n};
  const Vec2 e = estimate - truth;
  return {std::abs(e.dot(street_dir)), std::abs(e.dot(street_dir.perp()))};
}

struct SidewalkAssignment {
  std::string assigned;
  std::string truth;
  bool correct = false;
};

/// Projects both points onto their nearest sidewalk polygons; the assignment
/// is correct when both land on the same segment.
inline SidewalkAssignment sidewalk_assignment(const LocalPoint& estimate,
                                              const LocalPoint& truth,
                                              const GeoSegmentMap& map) {
  const NearestSidewalk a = map.nearest_sidewalk(estimate);
  const NearestSidewalk t = map.nearest_sidewalk(truth);
  return {a.id, t.id, a.id == t.id};
}

inline FootstepEval evaluate_footstep(double timestamp, const LocalPoint& truth,
                                      const LocalPoint& estimate,
                                      const GeoSegmentMap& map) {
  FootstepEval ev;
  ev.timestamp = timestamp;
  ev.truth = truth;
  ev.estimate = estimate;
  ev.euclidean = euclidean_error(estimate, truth);
  const Vec2 dir = map.street_direction_at(truth);
  std::tie(ev.along, ev.across) = along_across_error(estimate, truth, dir);
  const SidewalkAssignment sa = sidewalk_assignment(estimate, truth, map);
  ev.assigned_sidewalk = sa.assigned;
  ev.truth_sidewalk = sa.truth;
  ev.correct = sa.correct;
  return ev;
}

/// Quantile by linear interpolation between order statistics of a sorted
/// sample (q in [0, 1]).
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  if (sorted.size() == 1) return sorted.front();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline MetricSummary summarize(const std::vector<FootstepEval>& evals) {
  if (evals.empty()) throw std::invalid_argument("summarize of empty eval list");
  MetricSummary s;
  std::vector<double> euclid, along, across;
  euclid.reserve(evals.size());
  along.reserve(evals.size());
  across.reserve(evals.size());
  std::size_t correct = 0;
  double sum = 0.0;
  for (const auto& ev : evals) {
    euclid.push_back(ev.euclidean);
    along.push_back(ev.along);
    across.push_back(ev.across);
    sum += ev.euclidean;
    if (ev.correct) ++correct;
  }
  std::sort(euclid.begin(), euclid.end());
  std::sort(along.begin(), along.end());
  std::sort(across.begin(), across.end());
  s.correct_sidewalk_proportion =
      static_cast<double>(correct) / static_cast<double>(evals.size());
  s.euclidean_mean = sum / static_cast<double>(evals.size());
  s.euclidean_median = quantile_sorted(euclid, 0.5);
  s.euclidean_p90 = quantile_sorted(euclid, 0.9);
  s.along_median = quantile_sorted(along, 0.5);
  s.along_p90 = quantile_sorted(along, 0.9);
  s.across_median = quantile_sorted(across, 0.5);
  s.across_p90 = quantile_sorted(across, 0.9);
  s.cdf = std::move(euclid);
  return s;
}

}  // namespace pedloc
