// Command-line front end: scenario simulation, trace replay, parameter
// sweeps, and map validation. See README.md for the file formats.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pedloc/runner.hpp"

namespace {

struct FilterFlags {
  std::optional<int> n_particles;
  std::optional<double> pos_noise_sigma;
  std::optional<double> theta_noise_sigma;
  std::optional<double> jaywalk_weight;
  std::optional<double> gnss_sigma_scale;
  std::optional<double> gnss_radius_threshold;
  std::optional<double> init_pos_sigma;
  std::optional<double> init_theta_sigma;
};

void add_filter_flags(CLI::App* cmd, FilterFlags& flags) {
  cmd->add_option("--n-particles", flags.n_particles, "particle count (default 500)");
  cmd->add_option("--pos-noise", flags.pos_noise_sigma,
                  "position noise sigma per footstep, meters");
  cmd->add_option("--theta-noise", flags.theta_noise_sigma,
                  "orientation-drift noise sigma per footstep, radians");
  cmd->add_option("--jaywalk-weight", flags.jaywalk_weight,
                  "street-surface particle weight in [0,1]");
  cmd->add_option("--gnss-sigma-scale", flags.gnss_sigma_scale,
                  "Gaussian sigma = scale * uncertainty radius");
  cmd->add_option("--gnss-radius-threshold", flags.gnss_radius_threshold,
                  "ignore fixes with uncertainty radius at/above this, meters");
  cmd->add_option("--init-pos-sigma", flags.init_pos_sigma,
                  "initial particle position scatter, meters");
  cmd->add_option("--init-theta-sigma", flags.init_theta_sigma,
                  "initial orientation-drift scatter, radians");
}

pedloc::FilterConfig load_filter_config(const std::string& config_path,
                                        const FilterFlags& flags) {
  pedloc::FilterConfig fc;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config file: " + config_path);
    nlohmann::json j;
    in >> j;
    if (j.contains("n_particles")) fc.n_particles = j["n_particles"].get<int>();
    if (j.contains("pos_noise_sigma")) fc.pos_noise_sigma = j["pos_noise_sigma"].get<double>();
    if (j.contains("theta_noise_sigma")) fc.theta_noise_sigma = j["theta_noise_sigma"].get<double>();
    if (j.contains("jaywalk_weight")) fc.jaywalk_weight = j["jaywalk_weight"].get<double>();
    if (j.contains("gnss_sigma_scale")) fc.gnss_sigma_scale = j["gnss_sigma_scale"].get<double>();
    if (j.contains("gnss_radius_threshold")) fc.gnss_radius_threshold = j["gnss_radius_threshold"].get<double>();
    if (j.contains("init_pos_sigma")) fc.init_pos_sigma = j["init_pos_sigma"].get<double>();
    if (j.contains("init_theta_sigma")) fc.init_theta_sigma = j["init_theta_sigma"].get<double>();
  }
  if (flags.n_particles) fc.n_particles = *flags.n_particles;
  if (flags.pos_noise_sigma) fc.pos_noise_sigma = *flags.pos_noise_sigma;
  if (flags.theta_noise_sigma) fc.theta_noise_sigma = *flags.theta_noise_sigma;
  if (flags.jaywalk_weight) fc.jaywalk_weight = *flags.jaywalk_weight;
  if (flags.gnss_sigma_scale) fc.gnss_sigma_scale = *flags.gnss_sigma_scale;
  if (flags.gnss_radius_threshold) fc.gnss_radius_threshold = *flags.gnss_radius_threshold;
  if (flags.init_pos_sigma) fc.init_pos_sigma = *flags.init_pos_sigma;
  if (flags.init_theta_sigma) fc.init_theta_sigma = *flags.init_theta_sigma;
  fc.validate();
  return fc;
}

int run_command(const pedloc::RunConfig& config, bool export_inputs) {
  const pedloc::LoadedInput input = pedloc::load_input(config);
  const pedloc::ReplaySession session = pedloc::make_session(input.records, input.map);
  pedloc::RunResult result =
      pedloc::run_session(session, config.mode, pedloc::effective_filter_config(config));
  result.seed = config.seed;
  pedloc::write_artifacts(result, session, config.out_dir);
  if (export_inputs) {
    const std::filesystem::path dir(config.out_dir);
    pedloc::write_trace(input.records, (dir / "trace.jsonl").string());
    pedloc::save_map(input.map, (dir / "map.geojson").string());
  }
  std::cout << pedloc::summary_to_json(result).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Map-prior particle-filter pedestrian localization"};
  app.require_subcommand(1);

  std::string scenario, trace_path, map_path, out_dir = "pedloc_out";
  std::string mode_name = "gnss_ronin_pf", config_path;
  std::uint64_t seed = 1;
  bool export_inputs = false;
  FilterFlags flags;

  auto* sim = app.add_subcommand("simulate", "run a built-in synthetic scenario");
  sim->add_option("scenario", scenario, "one of: straight_canyon, l_corner, block_loop, jaywalk_cross, covered_hub")
      ->required();
  sim->add_option("--mode", mode_name, "gnss_only | ronin_pf | gnss_ronin_pf");
  sim->add_option("--seed", seed, "run seed (drives simulation and filter)");
  sim->add_option("--out", out_dir, "output directory");
  sim->add_option("--config", config_path, "filter config JSON file");
  sim->add_flag("--export", export_inputs, "also write trace.jsonl and map.geojson");
  add_filter_flags(sim, flags);

  auto* rep = app.add_subcommand("replay", "replay a recorded trace against a map");
  rep->add_option("trace", trace_path, "trace JSONL file")->required();
  rep->add_option("map", map_path, "map GeoJSON file")->required();
  rep->add_option("--mode", mode_name, "gnss_only | ronin_pf | gnss_ronin_pf");
  rep->add_option("--seed", seed, "filter seed");
  rep->add_option("--out", out_dir, "output directory");
  rep->add_option("--config", config_path, "filter config JSON file");
  add_filter_flags(rep, flags);

  std::string sweep_param = "jaywalk_weight", aggregate = "pooled";
  std::vector<double> sweep_values;
  int replications = 1;
  auto* swp = app.add_subcommand("sweep", "run a filter-parameter sweep");
  swp->add_option("--param", sweep_param, "FilterConfig parameter name");
  swp->add_option("--values", sweep_values, "value list")->required()->delimiter(',');
  swp->add_option("--reps", replications, "replications per value (seed ladder)");
  swp->add_option("--scenario", scenario, "built-in scenario input");
  swp->add_option("--trace", trace_path, "trace JSONL input");
  swp->add_option("--map", map_path, "map GeoJSON input");
  swp->add_option("--mode", mode_name, "gnss_only | ronin_pf | gnss_ronin_pf");
  swp->add_option("--seed", seed, "base seed of the ladder");
  swp->add_option("--out", out_dir, "output directory");
  swp->add_option("--config", config_path, "filter config JSON file");
  swp->add_option("--aggregate", aggregate, "pooled | per-run");
  add_filter_flags(swp, flags);

  std::string validate_path;
  bool validate_json = false;
  auto* val = app.add_subcommand("map-validate", "check a map GeoJSON file");
  val->add_option("map", validate_path, "map GeoJSON file")->required();
  val->add_flag("--json", validate_json, "emit the report as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed() || rep->parsed()) {
      pedloc::RunConfig config;
      config.mode = pedloc::parse_run_mode(mode_name);
      config.filter = load_filter_config(config_path, flags);
      config.scenario = scenario;
      config.trace_path = trace_path;
      config.map_path = map_path;
      config.out_dir = out_dir;
      config.seed = seed;
      return run_command(config, export_inputs);
    }
    if (swp->parsed()) {
      pedloc::RunConfig base;
      base.mode = pedloc::parse_run_mode(mode_name);
      base.filter = load_filter_config(config_path, flags);
      base.scenario = scenario;
      base.trace_path = trace_path;
      base.map_path = map_path;
      base.seed = seed;
      pedloc::SweepSpec spec{sweep_param, sweep_values, replications};
      const std::string agg = aggregate == "per-run" ? "per_run" : aggregate;
      const pedloc::SweepResult result = pedloc::sweep(spec, base, agg);
      std::filesystem::create_directories(out_dir);
      const std::string csv_path =
          (std::filesystem::path(out_dir) / "sweep.csv").string();
      pedloc::write_sweep_csv(result, csv_path);
      std::cout << "wrote " << csv_path << "\n";
      return 0;
    }
    if (val->parsed()) {
      const pedloc::MapValidationReport report =
          pedloc::validate_map_file(validate_path);
      if (validate_json) {
        std::cout << report.to_json().dump(2) << "\n";
      } else {
        std::cout << "labels: impenetrable=" << report.n_impenetrable
                  << " street=" << report.n_street
                  << " sidewalk=" << report.n_sidewalk << "\n";
        for (const auto& issue : report.issues)
          std::cout << (issue.error ? "error: " : "warning: ") << issue.message
                    << "\n";
        std::cout << (report.ok() ? "OK" : "INVALID") << "\n";
      }
      return report.ok() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
