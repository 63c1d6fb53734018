#include "blockflow/scene.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace blockflow {

std::string_view to_string(ColorTag tag) {
  switch (tag) {
    case ColorTag::Blue: return "blue";
    case ColorTag::Red: return "red";
    case ColorTag::Yellow: return "yellow";
    case ColorTag::Other: return "other";
  }
  return "other";
}

ColorTag color_tag_from_string(std::string_view name) {
  if (name == "blue") return ColorTag::Blue;
  if (name == "red") return ColorTag::Red;
  if (name == "yellow") return ColorTag::Yellow;
  if (name == "other") return ColorTag::Other;
  throw Error(ErrorCode::InvalidArgument, "unknown color tag '" + std::string(name) + "'");
}

std::array<Vec3, 8> Block::corners() const {
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    out[static_cast<std::size_t>(i)] = Vec3((i & 1) ? half_extents.x() : -half_extents.x(),
                                            (i & 2) ? half_extents.y() : -half_extents.y(),
                                            (i & 4) ? half_extents.z() : -half_extents.z());
  }
  return out;
}

const Block* Scene::find(const std::string& id) const {
  auto it = std::find_if(blocks.begin(), blocks.end(), [&](const Block& b) { return b.id == id; });
  return it == blocks.end() ? nullptr : &*it;
}

Scene default_scene() {
  Scene scene;
  const double z = kDefaultHalfExtents.z();
  const std::array<std::pair<const char*, ColorTag>, 3> blocks{
      {{"blue", ColorTag::Blue}, {"red", ColorTag::Red}, {"yellow", ColorTag::Yellow}}};
  double y = -0.05;
  for (const auto& [id, color] : blocks) {
    scene.blocks.push_back({id, kDefaultHalfExtents, color});
    scene.world_poses.emplace(id, Pose({}, Vec3(0.0, y, z), {id, kWorldFrame}));
    y += 0.05;
  }
  return scene;
}

void Observation::validate() const {
  if (visible && !pose) throw Error(ErrorCode::InvalidArgument, "visible observation without a pose");
  if (confidence.has_value() != pose.has_value()) {
    throw Error(ErrorCode::InvalidArgument, "confidence must be present exactly when a pose is");
  }
  if (confidence && !(*confidence >= 0.0 && *confidence <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "confidence outside [0, 1]");
  }
}

std::string to_string(const Provenance& p) {
  switch (p.kind) {
    case ProvenanceKind::Observed: return "observed";
    case ProvenanceKind::HeldLast: return "held_last";
    case ProvenanceKind::AnchorInferred: return "anchor_inferred(" + p.anchor_id + ")";
    case ProvenanceKind::PriorRefined: return "prior_refined(" + std::to_string(p.pass) + ")";
  }
  return "observed";
}

bool boxes_overlap(const Vec3& half_a, const Pose& pose_a, const Vec3& half_b, const Pose& pose_b) {
  const Mat3 ra = pose_a.rotation().matrix();
  const Mat3 rb = pose_b.rotation().matrix();
  // b's axes and center in a's frame
  const Mat3 r = ra.transpose() * rb;
  const Vec3 t = ra.transpose() * (pose_b.translation() - pose_a.translation());
  Mat3 abs_r = r.cwiseAbs();
  abs_r.array() += 1e-12;

  // Must exceed the padding on abs_r so touching faces count as separated.
  constexpr double kSlack = 1e-9;
  for (int i = 0; i < 3; ++i) {
    const double ea = half_a(i);
    const double eb = half_b.dot(abs_r.row(i));
    if (std::abs(t(i)) >= ea + eb - kSlack) return false;
  }
  for (int j = 0; j < 3; ++j) {
    const double ea = half_a.dot(abs_r.col(j));
    const double eb = half_b(j);
    if (std::abs(t.dot(r.col(j))) >= ea + eb - kSlack) return false;
  }
  for (int i = 0; i < 3; ++i) {
    const int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
    for (int j = 0; j < 3; ++j) {
      const int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
      // Parallel edges give a zero cross axis that separates nothing.
      if (1.0 - std::abs(r(i, j)) < 1e-9) continue;
      const double ea = half_a(i1) * abs_r(i2, j) + half_a(i2) * abs_r(i1, j);
      const double eb = half_b(j1) * abs_r(i, j2) + half_b(j2) * abs_r(i, j1);
      const double dist = std::abs(t(i2) * r(i1, j) - t(i1) * r(i2, j));
      if (dist >= ea + eb - kSlack) return false;
    }
  }
  return true;
}

bool box_contains(const Vec3& half_extents, const Pose& object_to_world, const Vec3& p_world) {
  const Vec3 local = object_to_world.rotation().inverse().rotate(p_world - object_to_world.translation());
  return (local.cwiseAbs().array() <= half_extents.array()).all();
}

std::vector<Violation> validate_scene(const Scene& scene) {
  std::vector<Violation> out;
  std::map<std::string, int> counts;
  for (const Block& b : scene.blocks) ++counts[b.id];
  for (const auto& [id, n] : counts) {
    if (n > 1) out.push_back({ViolationKind::DuplicateId, {id}, "block id '" + id + "' appears " + std::to_string(n) + " times"});
    if (!scene.world_poses.contains(id)) out.push_back({ViolationKind::MissingPose, {id}, "block '" + id + "' has no world pose"});
  }

  std::set<std::pair<std::string, std::string>> reported;
  for (std::size_t i = 0; i < scene.blocks.size(); ++i) {
    for (std::size_t j = i + 1; j < scene.blocks.size(); ++j) {
      const Block& a = scene.blocks[i];
      const Block& b = scene.blocks[j];
      if (a.id == b.id) continue;
      auto pa = scene.world_poses.find(a.id);
      auto pb = scene.world_poses.find(b.id);
      if (pa == scene.world_poses.end() || pb == scene.world_poses.end()) continue;
      if (boxes_overlap(a.half_extents, pa->second, b.half_extents, pb->second)) {
        auto key = std::minmax(a.id, b.id);
        if (reported.insert({key.first, key.second}).second) {
          out.push_back({ViolationKind::Interpenetration, {key.first, key.second},
                         "blocks '" + key.first + "' and '" + key.second + "' interpenetrate"});
        }
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace blockflow
