// Smallest useful pipeline: author a map in code, walk a straight corridor
// with a drifting velocity source, and track it with the particle filter.

#include <iostream>

#include "pedloc/filter.hpp"
#include "pedloc/geomap.hpp"
#include "pedloc/simulate.hpp"

int main() {
  using namespace pedloc;

  MapBuilder builder({-122.3965, 37.7895});
  builder.add_obstacle(rect_ring(-10, -30, 210, 0));
  builder.add_obstacle(rect_ring(-10, 4, 210, 34));
  builder.add_sidewalk("walkway", rect_ring(-2, 0, 202, 4), 0.0);
  const GeoSegmentMap map = builder.build();

  WaypointPath path;
  path.waypoints = {{0, 2}, {200, 2}};
  const GroundTruth truth = generate_ground_truth(path);

  ImuDriftModel drift;
  drift.heading_drift_rate = 0.004;  // the velocity frame slowly rotates
  drift.velocity_noise_sigma = 0.05;
  const auto velocities = synthesize_velocity(truth, drift);

  FilterConfig config;
  config.seed = 42;
  ParticleSet set = init_particle_set(truth.positions.front(), 0.0, config);

  std::cout << "step  truth_x  est_x  est_y  theta_deg\n";
  for (std::size_t i = 1; i < truth.times.size(); ++i) {
    const double dt = truth.times[i] - truth.times[i - 1];
    const StateEstimate est =
        step(set, velocities[i - 1], dt, std::nullopt, map, config);
    if (i % 50 == 0) {
      std::cout << i << "  " << truth.positions[i].x << "  " << est.position.x
                << "  " << est.position.y << "  " << rad_to_deg(est.mean_theta)
                << "\n";
    }
  }
  return 0;
}
