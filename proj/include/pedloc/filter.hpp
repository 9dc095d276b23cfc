#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "pedloc/geomap.hpp"
#include "pedloc/geometry.hpp"

namespace pedloc {

/// One posterior hypothesis: position, orientation-drift angle theta
/// (radians, wrapped to (-pi, pi]) and a nonnegative weight.
struct Particle {
  LocalPoint position;
  double theta = 0.0;
  double weight = 0.0;
};

/// World-frame walking velocity at a footstep timestamp.
struct VelocitySample {
  Vec2 v;
  double timestamp = 0.0;
};

/// GNSS observation: position, reported uncertainty radius, timestamp.
struct GnssFix {
  LocalPoint position;
  double uncertainty_radius = 0.0;
  double timestamp = 0.0;
};

struct FilterConfig {
  int n_particles = 500;
  double pos_noise_sigma = 0.15;                    // m per footstep
  double theta_noise_sigma = deg_to_rad(0.5);       // rad per footstep
  double jaywalk_weight = 0.4;                      // street-surface weight
  double gnss_sigma_scale = 1.0;                    // sigma = scale * radius
  double gnss_radius_threshold = 30.0;              // m; fixes at/above are ignored
  double init_pos_sigma = 1.0;                      // m
  double init_theta_sigma = deg_to_rad(5.0);        // rad
  std::uint64_t seed = 1;

  void validate() const {
    if (n_particles < 1) throw std::invalid_argument("n_particles must be >= 1");
    if (pos_noise_sigma < 0 || theta_noise_sigma < 0 || init_pos_sigma < 0 ||
        init_theta_sigma < 0)
      throw std::invalid_argument("noise sigmas must be nonnegative");
    if (jaywalk_weight < 0.0 || jaywalk_weight > 1.0)
      throw std::invalid_argument("jaywalk_weight must be in [0, 1]");
    if (gnss_sigma_scale < 0.0)
      throw std::invalid_argument("gnss_sigma_scale must be nonnegative");
    if (gnss_radius_threshold < 0.0)
      throw std::invalid_argument("gnss_radius_threshold must be nonnegative");
  }
};

struct StateEstimate {
  LocalPoint position;
  double mean_theta = 0.0;  // circular weighted mean; diagnostic only
  double effective_sample_size = 0.0;
  double timestamp = 0.0;
};

/// The filter's sample set plus its seedable randomness source. `heading`
/// is the world heading the incoming velocity stream is aligned to; step()
/// pre-rotates velocities by it, so particle theta stays pure drift.
struct ParticleSet {
  std::vector<Particle> particles;
  std::mt19937_64 rng;
  double heading = 0.0;
  LocalPoint recovery_anchor;
};

namespace detail {

inline double sample_gauss(std::mt19937_64& rng, double sigma) {
  if (sigma <= 0.0) return 0.0;
  std::normal_distribution<double> dist(0.0, sigma);
  return dist(rng);
}

inline double total_weight(const ParticleSet& set) {
  double sum = 0.0;
  for (const auto& p : set.particles) sum += p.weight;
  return sum;
}

}  // namespace detail

inline ParticleSet init_particle_set(const LocalPoint& start,
                                     double heading_hint,
                                     const FilterConfig& config) {
  config.validate();
  ParticleSet set;
  set.rng.seed(config.seed);
  set.heading = heading_hint;
  set.recovery_anchor = start;
  set.particles.resize(config.n_particles);
  const double w0 = 1.0 / config.n_particles;
  for (auto& p : set.particles) {
    p.position = {start.x + detail::sample_gauss(set.rng, config.init_pos_sigma),
                  start.y + detail::sample_gauss(set.rng, config.init_pos_sigma)};
    p.theta = wrap_angle(detail::sample_gauss(set.rng, config.init_theta_sigma));
    p.weight = w0;
  }
  return set;
}

/// Moves every particle by its drift-rotated velocity integrated over dt,
/// with Gaussian position and theta noise. Weights are untouched.
inline void propagate(ParticleSet& set, const VelocitySample& v, double dt,
                      const FilterConfig& config) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  for (auto& p : set.particles) {
    const Vec2 d = rotate(v.v, p.theta) * dt;
    p.position.x += d.x + detail::sample_gauss(set.rng, config.pos_noise_sigma);
    p.position.y += d.y + detail::sample_gauss(set.rng, config.pos_noise_sigma);
    p.theta = wrap_angle(p.theta +
                         detail::sample_gauss(set.rng, config.theta_noise_sigma));
  }
}

/// Sets (does not multiply) each particle's weight from the surface label at
/// its position: impenetrable 0, street jaywalk_weight, traversable 1.
inline void apply_map_weights(ParticleSet& set, const GeoSegmentMap& map,
                              const FilterConfig& config) {
  for (auto& p : set.particles) {
    switch (map.classify(p.position)) {
      case SurfaceLabel::Impenetrable: p.weight = 0.0; break;
      case SurfaceLabel::Street: p.weight = config.jaywalk_weight; break;
      case SurfaceLabel::Traversable: p.weight = 1.0; break;
    }
  }
}

inline bool gnss_fix_applies(const GnssFix& fix, const FilterConfig& config) {
  return fix.uncertainty_radius < config.gnss_radius_threshold;
}

/// Multiplies weights by an isotropic Gaussian centered on the fix, with
/// sigma proportional to the reported uncertainty radius. The 1/(2*pi*s^2)
/// constant is omitted; it cancels under normalization. No-op (returns
/// false) when the radius is at or above the config threshold.
inline bool apply_gnss(ParticleSet& set, const GnssFix& fix,
                       const FilterConfig& config) {
  if (!gnss_fix_applies(fix, config)) return false;
  const double sigma = config.gnss_sigma_scale * fix.uncertainty_radius;
  if (sigma <= 0.0)
    throw std::runtime_error("degenerate GNSS sigma (scale * radius == 0)");
  const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
  for (auto& p : set.particles) {
    const double d_sq = (p.position - fix.position).norm_sq();
    p.weight *= std::exp(-d_sq * inv_two_sigma_sq);
  }
  return true;
}

/// Normalizes weights to unit sum. If all weights are zero (every particle
/// on an impenetrable surface), recovers by re-scattering positions around
/// the last estimate with sigma 2*pos_noise_sigma and resetting weights to
/// uniform; returns true in that case.
inline bool normalize(ParticleSet& set, const FilterConfig& config) {
  const double sum = detail::total_weight(set);
  if (sum > 0.0) {
    for (auto& p : set.particles) p.weight /= sum;
    return false;
  }
  const double scatter = 2.0 * config.pos_noise_sigma;
  const double w0 = 1.0 / static_cast<double>(set.particles.size());
  for (auto& p : set.particles) {
    p.position = {set.recovery_anchor.x + detail::sample_gauss(set.rng, scatter),
                  set.recovery_anchor.y + detail::sample_gauss(set.rng, scatter)};
    p.weight = w0;
  }
  return true;
}

/// Systematic resampling: N strata of width 1/N with a shared random offset.
/// Zero-weight particles are never selected. Weights reset to 1/N.
inline void resample(ParticleSet& set) {
  const std::size_t n = set.particles.size();
  std::vector<double> cum(n);
  double running = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    running += set.particles[i].weight;
    cum[i] = running;
  }
  if (std::abs(running - 1.0) > 1e-6)
    throw std::invalid_argument("resample requires normalized weights");

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u0 = unit(set.rng) / static_cast<double>(n);

  std::vector<Particle> out;
  out.reserve(n);
  const double w0 = 1.0 / static_cast<double>(n);
  std::size_t k = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double pj = u0 + static_cast<double>(j) / static_cast<double>(n);
    while (pj >= cum[k] && k + 1 < n) ++k;
    std::size_t sel = k;
    // Floating-point tail guard: never land on a zero-weight particle.
    while (sel > 0 && set.particles[sel].weight == 0.0) --sel;
    out.push_back(set.particles[sel]);
    out.back().weight = w0;
  }
  set.particles = std::move(out);
}

/// Weighted-mean state over the particle set. Requires positive total weight.
inline StateEstimate estimate(const ParticleSet& set) {
  double sum = 0.0, sum_sq = 0.0;
  double sx = 0.0, sy = 0.0, sin_sum = 0.0, cos_sum = 0.0;
  for (const auto& p : set.particles) {
    sum += p.weight;
    sum_sq += p.weight * p.weight;
    sx += p.weight * p.position.x;
    sy += p.weight * p.position.y;
    sin_sum += p.weight * std::sin(p.theta);
    cos_sum += p.weight * std::cos(p.theta);
  }
  if (!(sum > 0.0))
    throw std::runtime_error("estimate requires positive total weight");
  StateEstimate est;
  est.position = {sx / sum, sy / sum};
  est.mean_theta = std::atan2(sin_sum, cos_sum);
  est.effective_sample_size = sum * sum / sum_sq;
  return est;
}

/// One footstep update: propagate, map weighting, optional GNSS reweighting,
/// normalize, estimate (before resampling resets the weights), resample.
/// If map weighting zeroed the whole set, the recovered set is re-weighted
/// once before estimating; should even that leave zero total weight (a map
/// with no walkable surface near the track), weights stay uniform.
inline StateEstimate step(ParticleSet& set, const VelocitySample& v, double dt,
                          const std::optional<GnssFix>& fix,
                          const GeoSegmentMap& map, const FilterConfig& config) {
  VelocitySample aligned = v;
  if (set.heading != 0.0) aligned.v = rotate(v.v, set.heading);
  propagate(set, aligned, dt, config);
  apply_map_weights(set, map, config);
  if (fix) apply_gnss(set, *fix, config);
  if (normalize(set, config)) {
    apply_map_weights(set, map, config);
    if (fix) apply_gnss(set, *fix, config);
    const double sum = detail::total_weight(set);
    if (sum > 0.0) {
      for (auto& p : set.particles) p.weight /= sum;
    } else {
      const double w0 = 1.0 / static_cast<double>(set.particles.size());
      for (auto& p : set.particles) p.weight = w0;
    }
  }
  StateEstimate est = estimate(set);
  est.timestamp = v.timestamp;
  set.recovery_anchor = est.position;
  resample(set);
  return est;
}

}  // namespace pedloc
