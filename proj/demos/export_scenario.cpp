// Exports a built-in scenario to trace.jsonl + map.geojson so it can be
// replayed with `pedloc replay` or inspected in any GeoJSON viewer.

#include <iostream>
#include <string>

#include "pedloc/simulate.hpp"

int main(int argc, char** argv) {
  const std::string name = argc > 1 ? argv[1] : "straight_canyon";
  const std::uint64_t seed = argc > 2 ? std::stoull(argv[2]) : 1;

  const pedloc::Scenario sc = pedloc::builtin_scenario(name);
  const pedloc::SyntheticTrace trace = pedloc::make_trace(sc, seed);
  const auto records = pedloc::to_trace_records(trace, sc.map.projection());

  pedloc::write_trace(records, name + ".trace.jsonl");
  pedloc::save_map(sc.map, name + ".map.geojson");
  std::cout << "wrote " << name << ".trace.jsonl (" << records.size()
            << " records) and " << name << ".map.geojson\n";
  return 0;
}
