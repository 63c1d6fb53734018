#include <iostream>

#include "blockflow/synth.hpp"
#include "blockflow/wind_io.hpp"
#include "cli/cli.hpp"

namespace blockflow::cli {

namespace {

OrbitParams orbit_from(const RunConfig& config) {
  OrbitParams p;
  p.radius = config.get_double("synth.orbit_radius");
  p.height = config.get_double("synth.orbit_height");
  p.start_angle = config.get_double("synth.orbit_start_deg") * M_PI / 180.0;
  p.angular_span = config.get_double("synth.orbit_span_deg") * M_PI / 180.0;
  p.frames = config.get_int("synth.frames");
  return p;
}

// Entries of one block restricted to the frames of `interval`.
Trajectories restrict_to(const Trajectories& all, const OcclusionInterval& interval) {
  Trajectories out;
  auto it = all.find(interval.block_id);
  if (it == all.end()) return out;
  TrackedTrajectory t{interval.block_id, interval.first, {}};
  for (int f = interval.first; f <= interval.last; ++f) {
    if (!it->second.covers(f)) break;
    t.entries.push_back(it->second.at(f));
  }
  if (!t.entries.empty()) out.emplace(interval.block_id, std::move(t));
  return out;
}

json pass_metrics_json(const std::vector<PassMetrics>& passes) {
  json out = json::array();
  for (const PassMetrics& p : passes) {
    json m = to_json(p.metrics);
    m["pass"] = p.pass;
    out.push_back(m);
  }
  return out;
}

void render_frames(OutputDir& out, const RunConfig& config, const Scene& scene, const Trajectories& tracks,
                   const CameraTrajectory& camera, const WindField* field, const GridSpec& spec) {
  const CameraIntrinsics k = config.intrinsics();
  const int stride = std::max(1, config.get_int("render.frame_stride"));
  const double alpha = config.get_double("render.alpha");
  for (int f = 0; f < camera.frame_count(); f += stride) {
    Image img = Image::blank(k.width, k.height, {30, 30, 30});
    if (field) img = render_wind_overlay(*field, spec, camera.world_to_camera[static_cast<std::size_t>(f)], k, img, alpha);
    img = render_wireframe(wire_boxes(scene, tracks, f), k, img);
    out.write_image("frames/" + frame_filename(f), img);
  }
}

void write_common(OutputDir& out, const GroundTruth& truth, const OcclusionSchedule& occlusions, const ObservationLog& log,
                  const RefinementResult& result) {
  out.write_text("scene.json", blockflow::to_json(truth.scene).dump(2) + "\n");
  out.write_text("camera.json", to_json(truth.camera).dump(2) + "\n");
  out.write_text("occlusions.json", to_json(occlusions).dump(2) + "\n");
  out.write_text("observations.jsonl", serialize_log(log));
  out.write_text("truth.jsonl", serialize_trajectories(truth_trajectories(truth)));
  out.write_text("trajectories.jsonl", serialize_trajectories(result.trajectories));
  out.write_text("pass_metrics.csv", pass_metrics_csv(result.pass_metrics));
}

}  // namespace

// Fixed camera. Blue, red and yellow enter one after another, each sliding
// in from +x before coming to rest. While yellow is being placed a hand hides
// red, which the tracker must hold at its last pose.
int cmd_repro_exp1(const Common& c) {
  OutputDir out(c.out);
  const std::uint64_t seed = c.config.get_seed();
  const int frames = c.config.get_int("synth.frames");
  if (frames < 12) throw Error(ErrorCode::ConfigError, "repro-exp1 needs at least 12 frames");
  const int slide = std::max(2, frames / 10);
  const Vec3 slide_offset(0.10, 0.0, 0.0);

  GroundTruth truth;
  truth.scene = default_scene();
  truth.camera = fixed_trajectory(orbit_from(c.config));
  const std::map<std::string, int> entry{{"blue", 0}, {"red", frames / 3}, {"yellow", 2 * frames / 3}};
  OcclusionSchedule occlusions;
  for (const auto& [id, first] : entry) {
    const Pose& rest = truth.scene.world_poses.at(id);
    std::vector<Pose> poses;
    for (int f = 0; f < frames; ++f) {
      const double s = std::clamp(static_cast<double>(f - first) / slide, 0.0, 1.0);
      poses.emplace_back(rest.rotation(), rest.translation() + (1.0 - s) * slide_offset, rest.frame());
    }
    truth.object_to_world[id] = std::move(poses);
    if (first > 0) occlusions.push_back({id, 0, first - 1});
  }
  const OcclusionInterval hand{"red", entry.at("yellow"), std::min(frames - 1, entry.at("yellow") + slide)};
  occlusions.push_back(hand);

  TrackerConfig tracker = c.config.tracker_config();
  tracker.mode = CameraMode::Fixed;
  const NoiseModel noise = c.config.noise_model();
  const SyntheticEstimator estimator(truth, noise, occlusions, seed, c.config.intrinsics());
  const ObservationLog log = generate_observations(estimator, truth.scene);
  const RefinementResult result = refine_multi_pass(estimator, truth.scene, tracker, &truth);

  write_common(out, truth, occlusions, log, result);
  render_frames(out, c.config, truth.scene, result.trajectories, truth.camera, nullptr, GridSpec{});

  // Hold-last check over the hand occlusion.
  const TrackedTrajectory& red = result.trajectories.at("red");
  bool held = red.covers(hand.first - 1);
  for (int f = hand.first; held && f <= hand.last; ++f) {
    held = red.covers(f) && red.at(f).pose == red.at(hand.first - 1).pose &&
           red.at(f).provenance.kind == ProvenanceKind::HeldLast;
  }
  json report{{"passes", pass_metrics_json(result.pass_metrics)},
              {"hand_occlusion", {{"block", hand.block_id}, {"first", hand.first}, {"last", hand.last}}},
              {"hold_last_exact", held}};
  out.write_text("report.json", report.dump(2) + "\n");
  out.write_manifest("repro-exp1", c.config, {{"hold_last_exact", held}});
  std::cout << report.dump() << std::endl;
  return 0;
}

// Orbiting camera over the static three-block scene. Blue is hidden for the
// middle third and recovered from an anchor; the wind field around the
// blocks is drawn under the boxes.
int cmd_repro_exp2(const Common& c) {
  OutputDir out(c.out);
  const std::uint64_t seed = c.config.get_seed();
  const int frames = c.config.get_int("synth.frames");
  if (frames < 6) throw Error(ErrorCode::ConfigError, "repro-exp2 needs at least 6 frames");

  const GroundTruth truth = static_ground_truth(default_scene(), orbit_trajectory(orbit_from(c.config)));
  const OcclusionInterval hidden{"blue", frames / 3, 2 * frames / 3 - 1};
  const OcclusionSchedule occlusions{hidden};

  TrackerConfig tracker = c.config.tracker_config();
  tracker.mode = CameraMode::Moving;
  const NoiseModel noise = c.config.noise_model();
  const SyntheticEstimator estimator(truth, noise, occlusions, seed, c.config.intrinsics());
  const ObservationLog log = generate_observations(estimator, truth.scene);
  const RefinementResult result = refine_multi_pass(estimator, truth.scene, tracker, &truth);

  // Occluded-block error with each other block forced as the anchor.
  json anchors = json::object();
  const Trajectories truth_tracks = truth_trajectories(truth);
  for (const std::string anchor : {"red", "yellow"}) {
    TrackerConfig fixed = tracker;
    fixed.anchor_rule = AnchorRule::FixedId;
    fixed.anchor_id = anchor;
    const RefinementResult r = refine_multi_pass(estimator, truth.scene, fixed);
    const Metrics m = evaluate(restrict_to(r.trajectories, hidden), truth_tracks, truth.scene);
    anchors[anchor] = {{"mean_rot_err_deg", m.aggregate.mean_rot_deg}, {"mean_trans_err_m", m.aggregate.mean_trans_m},
                       {"samples", m.aggregate.samples}};
  }

  const GridSpec spec = c.config.grid_spec();
  SteadyOptions options;
  options.tolerance = c.config.get_double("wind.tolerance");
  options.max_iterations = c.config.get_int("wind.max_iterations");
  const WindField field = run_to_steady(voxelize(truth.scene, spec), spec, options);

  write_common(out, truth, occlusions, log, result);
  for (const auto& p : export_wind(out.root() / "wind", field, spec)) out.record(p.filename().string());
  out.write_image("wind_map.ppm", render_wind_map(field));
  render_frames(out, c.config, truth.scene, result.trajectories, truth.camera, &field, spec);

  const Metrics occluded = evaluate(restrict_to(result.trajectories, hidden), truth_tracks, truth.scene);
  json report{{"passes", pass_metrics_json(result.pass_metrics)},
              {"occlusion", {{"block", hidden.block_id}, {"first", hidden.first}, {"last", hidden.last}}},
              {"occluded_error", to_json(occluded).at("aggregate")},
              {"anchor_comparison", anchors},
              {"wind", {{"iterations", field.iterations}, {"converged", field.converged}}}};
  out.write_text("report.json", report.dump(2) + "\n");
  out.write_manifest("repro-exp2", c.config, {{"wind_iterations", field.iterations}});
  std::cout << report.dump() << std::endl;
  return 0;
}

}  // namespace blockflow::cli
