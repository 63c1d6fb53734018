#include <csignal>
#include <cstdio>
#include <iostream>
#include <sstream>

#include <pthread.h>

#include "blockflow/point_cloud.hpp"
#include "blockflow/service.hpp"
#include "blockflow/synth.hpp"
#include "blockflow/wind_io.hpp"
#include "cli/cli.hpp"

namespace blockflow::cli {

namespace fs = std::filesystem;

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

OutputDir::OutputDir(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + root_.string() + ": " + ec.message());
}

fs::path OutputDir::write_text(const std::string& relative, const std::string& content) {
  const fs::path p = root_ / relative;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  write_text_file(p, content);
  record(relative);
  return p;
}

fs::path OutputDir::write_image(const std::string& relative, const Image& img) { return write_text(relative, encode_ppm(img)); }

void OutputDir::record(const std::string& relative) {
  if (std::find(files_.begin(), files_.end(), relative) == files_.end()) files_.push_back(relative);
}

void OutputDir::write_manifest(const std::string& command, const RunConfig& config, const json& extra) {
  std::vector<std::string> sorted = files_;
  std::sort(sorted.begin(), sorted.end());
  json artifacts = json::array();
  for (const std::string& rel : sorted) {
    const std::string bytes = read_text_file(root_ / rel);
    artifacts.push_back({{"path", rel}, {"bytes", bytes.size()}, {"fnv1a64", fnv1a64_hex(bytes)}});
  }
  json manifest{{"command", command},
                {"seeds", {{"seed", config.get_seed()}}},
                {"config", config.to_json()},
                {"artifacts", artifacts}};
  for (const auto& [k, v] : extra.items()) manifest[k] = v;
  write_text_file(root_ / "manifest.json", manifest.dump(2) + "\n");
}

json to_json(const CameraTrajectory& camera) {
  json frames = json::array();
  for (const Pose& p : camera.world_to_camera) frames.push_back(blockflow::to_json(p));
  return {{"frames", frames}};
}

CameraTrajectory camera_from_json(const json& j) {
  CameraTrajectory cam;
  try {
    for (const json& p : j.at("frames")) cam.world_to_camera.push_back(pose_from_json(p));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("camera trajectory: ") + e.what());
  }
  if (cam.world_to_camera.empty()) throw Error(ErrorCode::ParseError, "camera trajectory has no frames");
  cam.params.frames = static_cast<int>(cam.world_to_camera.size());
  return cam;
}

namespace {

json block_metrics_json(const BlockMetrics& b) {
  return {{"block", b.block_id},
          {"samples", b.samples},
          {"mean_rot_err_deg", b.mean_rot_deg},
          {"median_rot_err_deg", b.median_rot_deg},
          {"mean_trans_err_m", b.mean_trans_m},
          {"median_trans_err_m", b.median_trans_m},
          {"mean_add_m", b.mean_add_m}};
}

Vec3 to_vec3(const std::vector<double>& v, const char* what) {
  if (v.size() != 3) throw Error(ErrorCode::InvalidArgument, std::string(what) + " needs three values");
  return {v[0], v[1], v[2]};
}

OrbitParams orbit_params(const RunConfig& config) {
  OrbitParams p;
  p.radius = config.get_double("synth.orbit_radius");
  p.height = config.get_double("synth.orbit_height");
  p.start_angle = config.get_double("synth.orbit_start_deg") * M_PI / 180.0;
  p.angular_span = config.get_double("synth.orbit_span_deg") * M_PI / 180.0;
  p.frames = config.get_int("synth.frames");
  return p;
}

std::string svg_plot(const AmplificationReport& report) {
  const double w = 480, h = 320, m = 50;
  double max_x = 0.0, max_y = 0.0;
  for (const auto& r : report.rows) {
    max_x = std::max(max_x, r.distance_m);
    max_y = std::max({max_y, r.mean_error_m + r.std_error_m, r.predicted_m});
  }
  if (max_x <= 0.0) max_x = 1.0;
  if (max_y <= 0.0) max_y = 1.0;
  auto sx = [&](double x) { return m + x / max_x * (w - 2 * m); };
  auto sy = [&](double y) { return h - m - y / max_y * (h - 2 * m); };
  std::ostringstream s;
  s.precision(6);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << m << "\" y1=\"" << h - m << "\" x2=\"" << w - m << "\" y2=\"" << h - m << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m << "\" y2=\"" << h - m << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << w / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\">anchor-target distance (m)</text>\n";
  s << "<text x=\"12\" y=\"" << h / 2 << "\" transform=\"rotate(-90 12 " << h / 2
    << ")\" text-anchor=\"middle\">mean position error (m)</text>\n";
  s << "<polyline fill=\"none\" stroke=\"gray\" stroke-dasharray=\"4 3\" points=\"" << sx(0) << ',' << sy(0);
  for (const auto& r : report.rows) s << ' ' << sx(r.distance_m) << ',' << sy(r.predicted_m);
  s << "\"/>\n";
  for (const auto& r : report.rows) {
    s << "<line x1=\"" << sx(r.distance_m) << "\" y1=\"" << sy(r.mean_error_m - r.std_error_m) << "\" x2=\""
      << sx(r.distance_m) << "\" y2=\"" << sy(r.mean_error_m + r.std_error_m) << "\" stroke=\"steelblue\"/>\n";
    s << "<circle cx=\"" << sx(r.distance_m) << "\" cy=\"" << sy(r.mean_error_m) << "\" r=\"4\" fill=\"steelblue\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace

json to_json(const Metrics& m) {
  json blocks = json::array();
  for (const auto& b : m.blocks) blocks.push_back(block_metrics_json(b));
  return {{"blocks", blocks}, {"aggregate", block_metrics_json(m.aggregate)}};
}

json to_json(const OcclusionSchedule& schedule) {
  json out = json::array();
  for (const auto& o : schedule) out.push_back({{"block", o.block_id}, {"first", o.first}, {"last", o.last}});
  return out;
}

int cmd_normalize(const Common& c, const NormalizeArgs& a) {
  OutputDir out(c.out);
  PointCloud cloud = load_cloud(a.input);
  json extra = {{"input_points", cloud.size()}};
  if (!a.crop_min.empty() || !a.crop_max.empty()) {
    cloud = crop(cloud, {to_vec3(a.crop_min, "--crop-min"), to_vec3(a.crop_max, "--crop-max")});
  }
  auto [normalized, params] = normalize(cloud);
  json params_json = blockflow::to_json(params);
  if (!a.x_axis.empty() || !a.z_axis.empty()) {
    const Rotation r = object_frame_from_axes(to_vec3(a.x_axis, "--x-axis"), to_vec3(a.z_axis, "--z-axis"));
    const auto rm = r.row_major();
    params_json["object_axes_row_major"] = rm;
  }
  const fs::path ply = out.root() / "normalized.ply";
  save_cloud(normalized, ply, a.ascii ? PlyEncoding::Ascii : PlyEncoding::BinaryLittleEndian);
  out.record("normalized.ply");
  out.write_text("normalization.json", params_json.dump(2) + "\n");
  extra["output_points"] = normalized.size();
  out.write_manifest("normalize", c.config, extra);
  std::cout << params_json.dump() << std::endl;
  return 0;
}

int cmd_synth(const Common& c, const SynthArgs&) {
  OutputDir out(c.out);
  const std::uint64_t seed = c.config.get_seed();
  const TrackerConfig tracker = c.config.tracker_config();
  const Scene scene = generate_scene(c.config.get_int("synth.blocks"), layout_from_string(c.config.get_string("synth.layout")), seed);
  const OrbitParams orbit = orbit_params(c.config);
  const CameraTrajectory camera = tracker.mode == CameraMode::Fixed ? fixed_trajectory(orbit) : orbit_trajectory(orbit);
  const GroundTruth truth = static_ground_truth(scene, camera);
  const OcclusionSchedule occlusions = occlusion_from_geometry(truth);
  const ObservationLog log = generate_observations(truth, c.config.noise_model(), occlusions, seed, c.config.intrinsics());

  out.write_text("scene.json", blockflow::to_json(scene).dump(2) + "\n");
  out.write_text("camera.json", to_json(camera).dump(2) + "\n");
  out.write_text("occlusions.json", to_json(occlusions).dump(2) + "\n");
  out.write_text("observations.jsonl", serialize_log(log));
  out.write_text("truth.jsonl", serialize_trajectories(truth_trajectories(truth)));
  out.write_manifest("synth", c.config, {{"frames", truth.frame_count()}, {"blocks", scene.blocks.size()}});
  return 0;
}

int cmd_track(const Common& c, const TrackArgs& a) {
  OutputDir out(c.out);
  const ObservationLog log = parse_log(read_text_file(a.log));
  const LogEstimator estimator(log);
  const RefinementResult result = refine_multi_pass(estimator, log.scene, c.config.tracker_config());
  out.write_text("trajectories.jsonl", serialize_trajectories(result.trajectories));
  json extra = json::object();
  if (!a.truth.empty()) {
    const Trajectories reference = parse_trajectories(read_text_file(a.truth));
    const Metrics metrics = evaluate(result.trajectories, reference, log.scene);
    const json m = to_json(metrics);
    out.write_text("metrics.json", m.dump(2) + "\n");
    extra["aggregate"] = m.at("aggregate");
    std::cout << m.at("aggregate").dump() << std::endl;
  }
  out.write_manifest("track", c.config, extra);
  return 0;
}

int cmd_study(const Common& c) {
  OutputDir out(c.out);
  const std::string axis = c.config.get_string("study.axis_model");
  AxisModel model;
  if (axis == "perpendicular") model = AxisModel::PerpendicularToLever;
  else if (axis == "uniform") model = AxisModel::UniformSphere;
  else throw Error(ErrorCode::ConfigError, "study.axis_model must be perpendicular or uniform");
  const std::vector<double> distances = c.config.get_doubles("study.distances");
  const AmplificationReport report = amplification_study(distances, c.config.get_double("study.sigma_deg") * M_PI / 180.0,
                                                         c.config.get_int("study.trials"), c.config.get_seed(), model);
  out.write_text("amplification.csv", amplification_csv(report));
  out.write_text("amplification.svg", svg_plot(report));
  std::vector<double> x, y;
  json ratios = json::array();
  for (const auto& r : report.rows) {
    x.push_back(r.distance_m);
    y.push_back(r.mean_error_m);
    ratios.push_back(r.mean_error_m / report.rows.front().mean_error_m);
  }
  json summary{{"ratios_to_first", ratios}};
  if (x.size() >= 2) summary["slope_m_per_m"] = linear_fit_slope(x, y);
  out.write_text("summary.json", summary.dump(2) + "\n");
  out.write_manifest("study", c.config, summary);
  std::cout << amplification_csv(report);
  return 0;
}

namespace {

WindField solve_wind(const RunConfig& config, const Scene& scene, const GridSpec& spec) {
  const ObstacleMask mask = voxelize(scene, spec);
  SteadyOptions options;
  options.tolerance = config.get_double("wind.tolerance");
  options.max_iterations = config.get_int("wind.max_iterations");
  return run_to_steady(mask, spec, options);
}

}  // namespace

int cmd_wind(const Common& c, const WindArgs& a) {
  OutputDir out(c.out);
  const Scene scene = a.scene.empty() ? default_scene() : scene_from_json(read_json_file(a.scene));
  const GridSpec spec = c.config.grid_spec();
  const WindField field = solve_wind(c.config, scene, spec);
  for (const fs::path& p : export_wind(out.root() / "wind", field, spec)) out.record(p.filename().string());
  out.write_image("wind_map.ppm", render_wind_map(field));
  const json summary{{"iterations", field.iterations}, {"converged", field.converged}};
  out.write_manifest("wind", c.config, summary);
  std::cout << summary.dump() << std::endl;
  return 0;
}

int cmd_overlay(const Common& c, const OverlayArgs& a) {
  OutputDir out(c.out);
  const Scene scene = scene_from_json(read_json_file(a.scene));
  const Trajectories trajectories = parse_trajectories(read_text_file(a.trajectories));
  const CameraTrajectory camera = camera_from_json(read_json_file(a.camera));
  const CameraIntrinsics k = c.config.intrinsics();
  std::optional<WindField> field;
  GridSpec spec;
  if (!a.wind.empty()) {
    field = parse_wind_binary(read_text_file(a.wind));
    fs::path sidecar = a.wind;
    sidecar.replace_extension(".json");
    spec = grid_spec_from_json(read_json_file(sidecar).at("spec"));
  }
  const Image background = a.background.empty() ? Image::blank(k.width, k.height, {30, 30, 30}) : read_image(a.background);
  const double alpha = c.config.get_double("render.alpha");
  for (int f = 0; f < camera.frame_count(); ++f) {
    Image img = background;
    if (field) img = render_wind_overlay(*field, spec, camera.world_to_camera[static_cast<std::size_t>(f)], k, img, alpha);
    img = render_wireframe(wire_boxes(scene, trajectories, f), k, img);
    out.write_image("frames/" + frame_filename(f), img);
  }
  out.write_manifest("overlay", c.config, {{"frames", camera.frame_count()}});
  return 0;
}

int cmd_serve(const Common& c) {
  ServiceOptions options;
  options.host = c.config.get_string("serve.host");
  options.port = c.config.get_int("serve.port");
  options.snapshot = c.config.get_string("serve.snapshot");

  // Block the stop signals before any thread starts so only sigwait sees them.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  Service service(options);
  const int port = service.start();
  std::cout << json{{"listening", options.host + ":" + std::to_string(port)}}.dump() << std::endl;
  int sig = 0;
  sigwait(&set, &sig);
  service.stop();
  return 0;
}

}  // namespace blockflow::cli
