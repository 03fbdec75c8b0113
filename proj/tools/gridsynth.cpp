#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gridsynth/h0_profile.hpp"
#include "gridsynth/pipeline.hpp"

namespace {

void add_run_options(CLI::App* cmd, gridsynth::RunConfig& cfg, std::string& variant,
                     std::string& tmode) {
  cmd->add_option("--overpass", cfg.overpass_path, "Overpass JSON input");
  cmd->add_option("--heights", cfg.heights_path, "height CSV (id,height_m)");
  cmd->add_option("--meters", cfg.meters_path, "meter CSV (id,meter_count)");
  cmd->add_option("--stations", cfg.stations_path, "known stations CSV (station_id,lat,lon)");
  cmd->add_option("--h0", cfg.h0_path, "H0 profile CSV");
  cmd->add_option("--catalog", cfg.catalog_path, "cable catalog JSON");
  cmd->add_option("--data-source", variant, "O2D | O3D | EM")->capture_default_str();
  cmd->add_option("--transformer-mode", tmode, "T_K | T_C")->capture_default_str();
  cmd->add_option("--seed", cfg.seed, "deterministic seed")->capture_default_str();
  cmd->add_option("--cap0", cfg.cap0_kw, "initial cable capacity in kW (0 = total demand)")
      ->capture_default_str();
  cmd->add_option("--cce-n", cfg.cce_n, "N parameter of the IP schedule")->capture_default_str();
  cmd->add_option("--cce", cfg.cce_method, "capacity estimation: ip | nb")
      ->capture_default_str();
  cmd->add_option("--milp-time-limit", cfg.milp_time_limit_s, "seconds per MILP solve")
      ->capture_default_str();
  cmd->add_option("--max-service-length", cfg.max_service_length_m,
                  "max building-to-road distance in m")
      ->capture_default_str();
  cmd->add_flag("--exclude-footpaths,!--include-footpaths", cfg.include_footpaths,
                "drop footway/path edges from LV routing")
      ->capture_default_str();
  cmd->add_option("--hv-lat", cfg.hv_lat, "HV/MV substation latitude override");
  cmd->add_option("--hv-lon", cfg.hv_lon, "HV/MV substation longitude override");
  cmd->add_option("--su", cfg.estimation.stories_factor, "stories scaling factor S_U")
      ->capture_default_str();
  cmd->add_option_function<std::string>(
         "--units2d-mode",
         [&cfg](const std::string& v) {
           if (v == "literal")
             cfg.estimation.units2d_mode = gridsynth::Units2dMode::literal;
           else if (v == "floor-scaled")
             cfg.estimation.units2d_mode = gridsynth::Units2dMode::floor_scaled;
           else
             throw CLI::ValidationError("--units2d-mode", "must be literal or floor-scaled");
         },
         "literal | floor-scaled")
      ->default_str("literal");
  cmd->add_option("--quasi-day", cfg.quasi_day, "run one quasi-dynamic day (YYYY-MM-DD)");
  cmd->add_option("--profile-year", cfg.profile_year, "calendar year for load series")
      ->capture_default_str();
  cmd->add_flag("--benchmark-ab", cfg.benchmark_ab, "run both CCE methods and report runtimes");
  cmd->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
  cmd->add_flag("--debug-geojson", cfg.debug_geojson, "dump the attached street graph");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridsynth: residential distribution-grid synthesis from open map data"};
  app.require_subcommand(1);

  gridsynth::RunConfig cfg;
  std::string variant = "O2D";
  std::string tmode = "T_C";

  auto* run_cmd = app.add_subcommand("run", "run the full pipeline from a config file");
  run_cmd->set_config("--config", "", "TOML-style config file; flags override config keys");
  add_run_options(run_cmd, cfg, variant, tmode);

  auto* cmp_cmd = app.add_subcommand("compare", "compare model JSONs (optionally vs a reference)");
  std::vector<std::string> cmp_models;
  std::string cmp_ref, cmp_out = "compare_out";
  bool cmp_norm = false;
  cmp_cmd->add_option("models", cmp_models, "model.json paths")->required();
  cmp_cmd->add_option("--ref", cmp_ref, "reference model.json");
  cmp_cmd->add_option("--out", cmp_out, "output directory")->capture_default_str();
  cmp_cmd->add_flag("--normalized", cmp_norm, "compare normalized histograms");

  auto* fix_cmd = app.add_subcommand("fixtures", "generate bundled fixtures");
  auto* synth_cmd = fix_cmd->add_subcommand("synth", "generate a synthetic town");
  gridsynth::SynthTownSpec spec;
  std::string synth_out = ".";
  std::string synth_stem = "town";
  synth_cmd->add_option("--buildings", spec.buildings, "number of buildings")
      ->capture_default_str();
  synth_cmd->add_option("--roads", spec.road_ways, "number of street ways")
      ->capture_default_str();
  synth_cmd->add_option("--seed", spec.seed, "generator seed")->capture_default_str();
  synth_cmd->add_option("--spacing", spec.spacing_m, "block edge length in m")
      ->capture_default_str();
  synth_cmd->add_option("--multifamily", spec.multifamily, "number of apartment buildings")
      ->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "output directory")->capture_default_str();
  synth_cmd->add_option("--stem", synth_stem, "file name stem")->capture_default_str();

  auto* h0_cmd = fix_cmd->add_subcommand("h0", "write the built-in H0 profile CSV");
  std::string h0_out = "h0_profile.csv";
  h0_cmd->add_option("--out", h0_out, "output CSV path")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      cfg.data_source = gridsynth::variant_from_string(variant);
      if (tmode == "T_K")
        cfg.known_transformers = true;
      else if (tmode == "T_C")
        cfg.known_transformers = false;
      else
        throw gridsynth::ConfigError("transformer mode must be T_K or T_C");
      auto out = gridsynth::run(cfg);
      std::printf("model written to %s/model.json (%zu substations, ring %.1f m, LV %.1f m)\n",
                  cfg.out_dir.c_str(), out.model.substations.size(),
                  out.model.ring.total_length_m(), out.model.lv.objective_m);
      if (out.times_b)
        std::printf("A/B MILP time: %s %.2f s vs %s %.2f s\n", cfg.cce_method.c_str(),
                    out.times.milp_s, cfg.cce_method == "nb" ? "ip" : "nb", out.times_b->milp_s);
    } else if (cmp_cmd->parsed()) {
      auto rep = gridsynth::compare(cmp_models, cmp_ref, cmp_out, cmp_norm);
      std::printf("compared %zu models; tables in %s\n", rep.labels.size(), cmp_out.c_str());
    } else if (fix_cmd->parsed()) {
      if (synth_cmd->parsed()) {
        auto town = gridsynth::generate_town(spec);
        gridsynth::write_town(town, synth_out, synth_stem);
        std::printf("synthetic town written to %s/%s.json\n", synth_out.c_str(),
                    synth_stem.c_str());
      } else if (h0_cmd->parsed()) {
        gridsynth::write_h0_csv(h0_out, gridsynth::builtin_h0());
        std::printf("H0 profile written to %s\n", h0_out.c_str());
      } else {
        std::fprintf(stderr, "fixtures needs a subcommand (synth | h0)\n");
        return 2;
      }
    }
  } catch (const gridsynth::Error& e) {
    nlohmann::json err{{"error", e.what()}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "{\"error\": \"%s\"}\n", e.what());
    return 1;
  }
  return 0;
}
