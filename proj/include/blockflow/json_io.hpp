#pragma once

#include <filesystem>
#include <json.hpp>

#include "blockflow/camera.hpp"
#include "blockflow/point_cloud.hpp"
#include "blockflow/scene.hpp"
#include "blockflow/se3.hpp"

// JSON encodings shared by logs, the service and the CLI.
//   Pose:       {"q":[w,x,y,z], "t":[x,y,z], "src":..., "dst":...}
//   Intrinsics: {"fx","fy","cx","cy","width","height"}
//   Crop box:   {"min":[x,y,z], "max":[x,y,z]}
// Observation logs are JSON lines: one {"type":"scene",...} header, then one
// {"type":"observation",...} per line. Trajectories are JSON lines with one
// entry per (block, frame).

namespace blockflow {

using json = nlohmann::json;

json to_json(const Pose& pose);
Pose pose_from_json(const json& j);

json to_json(const CameraIntrinsics& k);
CameraIntrinsics intrinsics_from_json(const json& j);

json to_json(const BoundingBox& b);
BoundingBox bbox_from_json(const json& j);

json to_json(const AxisBox& box);
AxisBox axis_box_from_json(const json& j);

json to_json(const NormalizationParams& p);
NormalizationParams normalization_from_json(const json& j);

json to_json(const Block& b);
Block block_from_json(const json& j);

json to_json(const Scene& scene);
Scene scene_from_json(const json& j);

json to_json(const Observation& obs);
Observation observation_from_json(const json& j);

json to_json(const Provenance& p);
Provenance provenance_from_json(const json& j);

std::string serialize_log(const ObservationLog& log);
ObservationLog parse_log(const std::string& text);

std::string serialize_trajectories(const Trajectories& trajectories);
Trajectories parse_trajectories(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
json read_json_file(const std::filesystem::path& path);

}  // namespace blockflow
