#include "blockflow/json_io.hpp"

#include <fstream>
#include <sstream>

namespace blockflow {
namespace {

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::ParseError, "expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

// Turns nlohmann type/key errors into ParseError so callers deal with one
// error type.
template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string(what) + ": " + e.what());
  }
}

}  // namespace

json to_json(const Pose& pose) {
  const auto q = pose.rotation().wxyz();
  return {{"q", json::array({q[0], q[1], q[2], q[3]})},
          {"t", vec3_to_json(pose.translation())},
          {"src", pose.source()},
          {"dst", pose.target()}};
}

Pose pose_from_json(const json& j) {
  return guarded("pose", [&] {
    Rotation r;
    if (j.contains("q")) {
      const auto& q = j.at("q");
      if (!q.is_array() || q.size() != 4) throw Error(ErrorCode::ParseError, "pose 'q' must have 4 entries");
      r = Rotation::from_quaternion(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
    } else if (j.contains("R")) {
      const auto& m = j.at("R");
      if (!m.is_array() || m.size() != 9) throw Error(ErrorCode::ParseError, "pose 'R' must have 9 entries");
      std::array<double, 9> rm{};
      for (std::size_t i = 0; i < 9; ++i) rm[i] = m[i].get<double>();
      r = Rotation::from_row_major(rm);
    } else {
      throw Error(ErrorCode::ParseError, "pose needs 'q' or 'R'");
    }
    return Pose(r, vec3_from_json(j.at("t")), {j.at("src").get<std::string>(), j.at("dst").get<std::string>()});
  });
}

json to_json(const CameraIntrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

CameraIntrinsics intrinsics_from_json(const json& j) {
  return guarded("intrinsics", [&] {
    CameraIntrinsics k{j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
                       j.at("cy").get<double>(), j.at("width").get<int>(),  j.at("height").get<int>()};
    k.validate();
    return k;
  });
}

json to_json(const BoundingBox& b) {
  return {{"min_x", b.min_x}, {"min_y", b.min_y}, {"max_x", b.max_x}, {"max_y", b.max_y}};
}

BoundingBox bbox_from_json(const json& j) {
  return guarded("bbox", [&] {
    return BoundingBox{j.at("min_x").get<double>(), j.at("min_y").get<double>(), j.at("max_x").get<double>(),
                       j.at("max_y").get<double>()};
  });
}

json to_json(const AxisBox& box) { return {{"min", vec3_to_json(box.min)}, {"max", vec3_to_json(box.max)}}; }

AxisBox axis_box_from_json(const json& j) {
  return guarded("crop box", [&] { return AxisBox{vec3_from_json(j.at("min")), vec3_from_json(j.at("max"))}; });
}

json to_json(const NormalizationParams& p) {
  return {{"center", vec3_to_json(p.center)}, {"radius", p.radius}, {"scale", p.scale}};
}

NormalizationParams normalization_from_json(const json& j) {
  return guarded("normalization", [&] {
    return NormalizationParams{vec3_from_json(j.at("center")), j.at("radius").get<double>(), j.at("scale").get<double>()};
  });
}

json to_json(const Block& b) {
  return {{"id", b.id}, {"half_extents", vec3_to_json(b.half_extents)}, {"color", std::string(to_string(b.color))}};
}

Block block_from_json(const json& j) {
  return guarded("block", [&] {
    Block b{j.at("id").get<std::string>(), vec3_from_json(j.at("half_extents")),
            color_tag_from_string(j.value("color", std::string("other")))};
    if (!(b.half_extents.array() > 0.0).all()) throw Error(ErrorCode::ParseError, "block half extents must be positive");
    return b;
  });
}

json to_json(const Scene& scene) {
  json blocks = json::array();
  for (const Block& b : scene.blocks) blocks.push_back(to_json(b));
  json poses = json::object();
  for (const auto& [id, pose] : scene.world_poses) poses[id] = to_json(pose);
  return {{"blocks", blocks}, {"world_poses", poses}};
}

Scene scene_from_json(const json& j) {
  return guarded("scene", [&] {
    Scene scene;
    for (const auto& b : j.at("blocks")) scene.blocks.push_back(block_from_json(b));
    for (const auto& [id, pose] : j.at("world_poses").items()) scene.world_poses.emplace(id, pose_from_json(pose));
    return scene;
  });
}

json to_json(const Observation& obs) {
  json j = {{"type", "observation"}, {"frame", obs.frame_index}, {"block", obs.block_id}, {"visible", obs.visible}};
  j["pose"] = obs.pose ? to_json(*obs.pose) : json(nullptr);
  j["bbox"] = obs.bbox ? to_json(*obs.bbox) : json(nullptr);
  j["confidence"] = obs.confidence ? json(*obs.confidence) : json(nullptr);
  return j;
}

Observation observation_from_json(const json& j) {
  return guarded("observation", [&] {
    Observation obs;
    obs.frame_index = j.at("frame").get<int>();
    obs.block_id = j.at("block").get<std::string>();
    obs.visible = j.at("visible").get<bool>();
    if (j.contains("pose") && !j["pose"].is_null()) obs.pose = pose_from_json(j["pose"]);
    if (j.contains("bbox") && !j["bbox"].is_null()) obs.bbox = bbox_from_json(j["bbox"]);
    if (j.contains("confidence") && !j["confidence"].is_null()) obs.confidence = j["confidence"].get<double>();
    obs.validate();
    return obs;
  });
}

json to_json(const Provenance& p) {
  switch (p.kind) {
    case ProvenanceKind::Observed: return {{"kind", "observed"}};
    case ProvenanceKind::HeldLast: return {{"kind", "held_last"}};
    case ProvenanceKind::AnchorInferred: return {{"kind", "anchor_inferred"}, {"anchor", p.anchor_id}};
    case ProvenanceKind::PriorRefined: return {{"kind", "prior_refined"}, {"pass", p.pass}};
  }
  return {};
}

Provenance provenance_from_json(const json& j) {
  return guarded("provenance", [&] {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "observed") return Provenance::observed();
    if (kind == "held_last") return Provenance::held_last();
    if (kind == "anchor_inferred") return Provenance::anchor_inferred(j.at("anchor").get<std::string>());
    if (kind == "prior_refined") return Provenance::prior_refined(j.at("pass").get<int>());
    throw Error(ErrorCode::ParseError, "unknown provenance '" + kind + "'");
  });
}

std::string serialize_log(const ObservationLog& log) {
  std::string out = json{{"type", "scene"}, {"scene", to_json(log.scene)}}.dump() + "\n";
  for (const Observation& obs : log.observations) out += to_json(obs).dump() + "\n";
  return out;
}

ObservationLog parse_log(const std::string& text) {
  ObservationLog log;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool have_scene = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, "log line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string type = j.value("type", "");
    if (type == "scene") {
      if (have_scene) throw Error(ErrorCode::ParseError, "log line " + std::to_string(line_no) + ": second scene header");
      log.scene = scene_from_json(j.at("scene"));
      have_scene = true;
    } else if (type == "observation") {
      if (!have_scene) throw Error(ErrorCode::ParseError, "log line " + std::to_string(line_no) + ": observation before scene header");
      log.observations.push_back(observation_from_json(j));
    } else {
      throw Error(ErrorCode::ParseError, "log line " + std::to_string(line_no) + ": unknown record type '" + type + "'");
    }
  }
  if (!have_scene) throw Error(ErrorCode::ParseError, "log has no scene header");
  return log;
}

std::string serialize_trajectories(const Trajectories& trajectories) {
  std::string out;
  for (const auto& [id, traj] : trajectories) {
    for (int f = traj.first_frame; f < traj.end_frame(); ++f) {
      const TrackedEntry& e = traj.at(f);
      out += json{{"block", id}, {"frame", f}, {"pose", to_json(e.pose)}, {"provenance", to_json(e.provenance)}}.dump();
      out += "\n";
    }
  }
  return out;
}

Trajectories parse_trajectories(const std::string& text) {
  Trajectories out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = guarded("trajectory line", [&] { return json::parse(line); });
    const auto id = guarded("trajectory line", [&] { return j.at("block").get<std::string>(); });
    const int frame = guarded("trajectory line", [&] { return j.at("frame").get<int>(); });
    auto [it, fresh] = out.try_emplace(id);
    TrackedTrajectory& traj = it->second;
    if (fresh) {
      traj.block_id = id;
      traj.first_frame = frame;
    }
    if (frame != traj.end_frame()) {
      throw Error(ErrorCode::ParseError, "trajectory line " + std::to_string(line_no) + ": frames of '" + id + "' are not contiguous");
    }
    traj.entries.push_back({pose_from_json(j.at("pose")), provenance_from_json(j.at("provenance"))});
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

}  // namespace blockflow
