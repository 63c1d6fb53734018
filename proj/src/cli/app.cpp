#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "cli/cli.hpp"

namespace blockflow::cli {

namespace {

void print_error(const std::string& code, const std::string& message) {
  std::cerr << json{{"error", {{"code", code}, {"message", message}}}}.dump() << std::endl;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"blockflow: block pose tracking and desk-scale wind simulation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  app.add_option("--config", config_file, "JSON config file (nested objects or dotted keys)");
  app.add_option("--set", sets, "Override a config key: --set wind.tau=0.9 (repeatable)");
  app.add_option("--seed", seed, "Seed for every random stream");
  app.add_option("--out", out, "Output directory")->capture_default_str();

  // Flags that map onto config keys; applied after file and --set values.
  std::vector<std::pair<std::string, std::function<std::optional<json>()>>> flag_keys;
  auto keyed = [&](CLI::App* sub, const std::string& flag, const std::string& key, auto& storage, const std::string& help) {
    sub->add_option(flag, storage, help);
    flag_keys.emplace_back(key, [&storage]() -> std::optional<json> {
      if (!storage) return std::nullopt;
      return json(*storage);
    });
  };

  NormalizeArgs norm;
  auto* normalize = app.add_subcommand("normalize", "Crop and normalize a point cloud into the unit sphere");
  normalize->add_option("--input", norm.input, "PLY point cloud")->required()->check(CLI::ExistingFile);
  normalize->add_option("--crop-min", norm.crop_min, "Crop box minimum x,y,z")->delimiter(',')->expected(3);
  normalize->add_option("--crop-max", norm.crop_max, "Crop box maximum x,y,z")->delimiter(',')->expected(3);
  normalize->add_option("--x-axis", norm.x_axis, "Recorded object x direction")->delimiter(',')->expected(3);
  normalize->add_option("--z-axis", norm.z_axis, "Recorded object z direction")->delimiter(',')->expected(3);
  normalize->add_flag("--ascii", norm.ascii, "Write ASCII PLY instead of binary");

  std::optional<int> blocks, frames, passes, trials, nx, ny, max_iters, window;
  std::optional<std::string> layout, mode, anchor_rule, anchor_id, axis_model, host;
  std::optional<double> sigma_deg, tau, alpha, tolerance;
  std::optional<int> port;
  std::vector<double> distances;

  auto* synth = app.add_subcommand("synth", "Generate a scene, ground truth and a noisy observation log");
  keyed(synth, "--blocks", "synth.blocks", blocks, "Number of blocks");
  keyed(synth, "--layout", "synth.layout", layout, "row, stack or random");
  keyed(synth, "--frames", "synth.frames", frames, "Frame count");
  keyed(synth, "--mode", "tracking.mode", mode, "fixed or moving camera");

  TrackArgs track_args;
  auto* track = app.add_subcommand("track", "Run multi-pass tracking over an observation log");
  track->add_option("--log", track_args.log, "Observation log (JSONL)")->required()->check(CLI::ExistingFile);
  track->add_option("--truth", track_args.truth, "Reference trajectories (JSONL) for metrics")->check(CLI::ExistingFile);
  keyed(track, "--passes", "tracking.passes", passes, "Refinement passes");
  keyed(track, "--mode", "tracking.mode", mode, "fixed or moving camera");
  keyed(track, "--anchor-rule", "tracking.anchor_rule", anchor_rule, "nearest, fixed_id or highest_confidence");
  keyed(track, "--anchor-id", "tracking.anchor_id", anchor_id, "Anchor block for fixed_id");
  keyed(track, "--window", "tracking.window", window, "Frames covered by non-final passes (0 = all)");

  auto* study = app.add_subcommand("study", "Anchor-transfer error amplification study");
  keyed(study, "--sigma-deg", "study.sigma_deg", sigma_deg, "Anchor rotation error, degrees");
  study->add_option("--distances", distances, "Anchor-target distances in meters")->delimiter(',');
  keyed(study, "--trials", "study.trials", trials, "Trials per distance (>= 100)");
  keyed(study, "--axis-model", "study.axis_model", axis_model, "perpendicular or uniform");

  WindArgs wind_args;
  auto* wind = app.add_subcommand("wind", "Solve the wind field around a scene");
  wind->add_option("--scene", wind_args.scene, "Scene JSON (default: the three-block scene)")->check(CLI::ExistingFile);
  keyed(wind, "--nx", "wind.nx", nx, "Grid cells along x");
  keyed(wind, "--ny", "wind.ny", ny, "Grid cells along y");
  keyed(wind, "--tau", "wind.tau", tau, "Relaxation time");
  keyed(wind, "--tolerance", "wind.tolerance", tolerance, "Steady-state tolerance");
  keyed(wind, "--max-iterations", "wind.max_iterations", max_iters, "Iteration cap");

  OverlayArgs overlay_args;
  auto* overlay = app.add_subcommand("overlay", "Render tracked boxes and a wind field into frames");
  overlay->add_option("--scene", overlay_args.scene, "Scene JSON")->required()->check(CLI::ExistingFile);
  overlay->add_option("--trajectories", overlay_args.trajectories, "Trajectories (JSONL)")->required()->check(CLI::ExistingFile);
  overlay->add_option("--camera", overlay_args.camera, "Camera trajectory JSON")->required()->check(CLI::ExistingFile);
  overlay->add_option("--wind", overlay_args.wind, "Wind field (.wnd with .json sidecar)")->check(CLI::ExistingFile);
  overlay->add_option("--background", overlay_args.background, "Background PPM")->check(CLI::ExistingFile);
  keyed(overlay, "--alpha", "render.alpha", alpha, "Wind overlay opacity");

  auto* exp1 = app.add_subcommand("repro-exp1", "Fixed camera; blue, red and yellow placed in turn");
  auto* exp2 = app.add_subcommand("repro-exp2", "Moving camera; occluded block inferred from an anchor; wind overlay");

  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  keyed(serve, "--host", "serve.host", host, "Bind address");
  keyed(serve, "--port", "serve.port", port, "Port (0 = any free port)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  Common common;
  try {
    if (!config_file.empty()) common.config.merge_file(config_file);
    for (const std::string& s : sets) common.config.apply_override(s);
    for (const auto& [key, getter] : flag_keys) {
      if (auto v = getter()) common.config.set(key, *v);
    }
    if (!distances.empty()) common.config.set("study.distances", distances);
    if (seed) common.config.set("seed", *seed);
  } catch (const Error& e) {
    print_error(std::string(to_string(e.code())), e.message());
    return 2;
  }
  common.out = out;

  try {
    if (normalize->parsed()) return cmd_normalize(common, norm);
    if (synth->parsed()) return cmd_synth(common, {});
    if (track->parsed()) return cmd_track(common, track_args);
    if (study->parsed()) return cmd_study(common);
    if (wind->parsed()) return cmd_wind(common, wind_args);
    if (overlay->parsed()) return cmd_overlay(common, overlay_args);
    if (exp1->parsed()) return cmd_repro_exp1(common);
    if (exp2->parsed()) return cmd_repro_exp2(common);
    if (serve->parsed()) return cmd_serve(common);
  } catch (const Error& e) {
    print_error(std::string(to_string(e.code())), e.message());
    return 1;
  } catch (const std::exception& e) {
    print_error("Internal", e.what());
    return 1;
  }
  return 2;
}

}  // namespace blockflow::cli
