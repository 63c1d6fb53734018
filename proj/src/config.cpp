#include "blockflow/config.hpp"

#include <cmath>

namespace blockflow {

namespace {

json defaults() {
  return {
      {"seed", 7},
      {"camera.fx", 500.0},
      {"camera.fy", 500.0},
      {"camera.cx", 320.0},
      {"camera.cy", 240.0},
      {"camera.width", 640},
      {"camera.height", 480},
      {"synth.blocks", 3},
      {"synth.layout", "row"},
      {"synth.frames", 60},
      {"synth.orbit_radius", 0.5},
      {"synth.orbit_height", 0.35},
      {"synth.orbit_start_deg", -90.0},
      {"synth.orbit_span_deg", 90.0},
      {"noise.sigma_rot_deg", 2.0},
      {"noise.sigma_trans_m", 0.005},
      {"noise.prior_coupling", 0.5},
      {"tracking.mode", "fixed"},
      {"tracking.passes", 2},
      {"tracking.anchor_rule", "nearest"},
      {"tracking.anchor_id", ""},
      {"tracking.prior_threshold_deg", 10.0},
      {"tracking.prior_threshold_m", 0.05},
      {"tracking.window", 0},
      {"study.sigma_deg", 1.0},
      {"study.distances", json::array({0.1, 0.2, 0.4})},
      {"study.trials", 500},
      {"study.axis_model", "perpendicular"},
      {"wind.nx", 128},
      {"wind.ny", 64},
      {"wind.dx", 0.005},
      {"wind.origin_x", -0.32},
      {"wind.origin_y", -0.16},
      {"wind.slice_height", 0.0075},
      {"wind.inlet_velocity", 0.05},
      {"wind.inlet_speed_mps", 1.0},
      {"wind.tau", 0.8},
      {"wind.viscosity_m2s", 0.0},
      {"wind.x_boundary", "inlet_outlet"},
      {"wind.y_boundary", "wall"},
      {"wind.tolerance", 1e-5},
      {"wind.max_iterations", 20000},
      {"render.alpha", 0.5},
      {"render.frame_stride", 10},
      {"serve.host", "127.0.0.1"},
      {"serve.port", 7780},
      {"serve.snapshot", ""},
  };
}

// Flattens nested objects into dotted keys; arrays are leaf values.
void flatten(const json& j, const std::string& prefix, std::map<std::string, json>& out) {
  for (const auto& [key, value] : j.items()) {
    const std::string full = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) flatten(value, full, out);
    else out[full] = value;
  }
}

bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) {
    // An integer slot must stay integral.
    return !a.is_number_integer() || b.is_number_integer();
  }
  return a.type() == b.type();
}

}  // namespace

RunConfig::RunConfig() {
  const json d = defaults();
  for (const auto& [key, value] : d.items()) values_[key] = value;
}

void RunConfig::set(const std::string& key, json value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
  if (!same_kind(it->second, value)) {
    throw Error(ErrorCode::ConfigError, "config key '" + key + "' expects " + std::string(it->second.type_name()) +
                                            ", got " + value.type_name());
  }
  if (it->second.is_number_float()) value = value.get<double>();
  it->second = std::move(value);
}

void RunConfig::merge_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
  std::map<std::string, json> flat;
  flatten(j, "", flat);
  for (auto& [key, value] : flat) set(key, value);
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  try {
    merge_json(read_json_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) throw Error(ErrorCode::ConfigError, e.what());
    throw;
  }
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::ConfigError, "override must look like key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  // A string slot given something that parsed as another type keeps the raw text.
  if (has(key) && values_.at(key).is_string() && !value.is_string()) value = text;
  set(key, std::move(value));
}

const json& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
  return it->second;
}

int RunConfig::get_int(const std::string& key) const { return get(key).get<int>(); }
std::uint64_t RunConfig::get_seed() const {
  const json& v = get("seed");
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  const auto s = v.get<std::int64_t>();
  if (s < 0) throw Error(ErrorCode::ConfigError, "seed must be non-negative");
  return static_cast<std::uint64_t>(s);
}
double RunConfig::get_double(const std::string& key) const { return get(key).get<double>(); }
bool RunConfig::get_bool(const std::string& key) const { return get(key).get<bool>(); }
std::string RunConfig::get_string(const std::string& key) const { return get(key).get<std::string>(); }

std::vector<double> RunConfig::get_doubles(const std::string& key) const {
  const json& v = get(key);
  std::vector<double> out;
  for (const json& x : v) {
    if (!x.is_number()) throw Error(ErrorCode::ConfigError, "config key '" + key + "' must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<std::string> RunConfig::keys() const {
  std::vector<std::string> out;
  for (const auto& [key, value] : values_) out.push_back(key);
  return out;
}

json RunConfig::to_json() const {
  json out = json::object();
  for (const auto& [key, value] : values_) out[key] = value;
  return out;
}

CameraIntrinsics RunConfig::intrinsics() const {
  CameraIntrinsics k;
  k.fx = get_double("camera.fx");
  k.fy = get_double("camera.fy");
  k.cx = get_double("camera.cx");
  k.cy = get_double("camera.cy");
  k.width = get_int("camera.width");
  k.height = get_int("camera.height");
  k.validate();
  return k;
}

GridSpec RunConfig::grid_spec() const {
  GridSpec s;
  s.nx = get_int("wind.nx");
  s.ny = get_int("wind.ny");
  s.dx = get_double("wind.dx");
  s.origin_x = get_double("wind.origin_x");
  s.origin_y = get_double("wind.origin_y");
  s.slice_height = get_double("wind.slice_height");
  s.inlet_velocity = get_double("wind.inlet_velocity");
  s.inlet_speed_mps = get_double("wind.inlet_speed_mps");
  s.tau = get_double("wind.tau");
  s.x_boundary = x_boundary_from_string(get_string("wind.x_boundary"));
  s.y_boundary = y_boundary_from_string(get_string("wind.y_boundary"));
  const double nu = get_double("wind.viscosity_m2s");
  if (nu > 0.0) s.tau = tau_for_viscosity(s, nu);
  s.validate();
  return s;
}

TrackerConfig RunConfig::tracker_config() const {
  TrackerConfig c;
  c.mode = camera_mode_from_string(get_string("tracking.mode"));
  c.refinement_passes = get_int("tracking.passes");
  c.anchor_rule = anchor_rule_from_string(get_string("tracking.anchor_rule"));
  c.anchor_id = get_string("tracking.anchor_id");
  c.prior_threshold.rotation_rad = get_double("tracking.prior_threshold_deg") * M_PI / 180.0;
  c.prior_threshold.translation_m = get_double("tracking.prior_threshold_m");
  c.window = get_int("tracking.window");
  c.validate();
  return c;
}

NoiseModel RunConfig::noise_model() const {
  NoiseModel n;
  n.sigma_rot_rad = get_double("noise.sigma_rot_deg") * M_PI / 180.0;
  n.sigma_trans_m = get_double("noise.sigma_trans_m");
  n.prior_coupling = get_double("noise.prior_coupling");
  n.prior_threshold = tracker_config().prior_threshold;
  if (n.sigma_rot_rad < 0.0 || n.sigma_trans_m < 0.0) throw Error(ErrorCode::ConfigError, "noise must be non-negative");
  if (n.prior_coupling < 0.0 || n.prior_coupling >= 1.0) throw Error(ErrorCode::ConfigError, "prior coupling must lie in [0, 1)");
  return n;
}

}  // namespace blockflow
