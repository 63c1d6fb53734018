#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "blockflow/camera.hpp"
#include "blockflow/se3.hpp"

namespace blockflow {

enum class ColorTag { Blue, Red, Yellow, Other };

std::string_view to_string(ColorTag tag);
ColorTag color_tag_from_string(std::string_view name);

/// Frame name used for world-anchored poses.
inline const std::string kWorldFrame = "world";
inline const std::string kCameraFrame = "camera";

/// Standard Jenga block, meters.
inline const Vec3 kDefaultHalfExtents{0.0375, 0.0125, 0.0075};

struct Block {
  std::string id;
  Vec3 half_extents = kDefaultHalfExtents;
  ColorTag color = ColorTag::Other;

  /// Diameter of the block's bounding sphere.
  double diameter() const { return 2.0 * half_extents.norm(); }
  /// Eight box corners in the object frame.
  std::array<Vec3, 8> corners() const;
};

struct Scene {
  std::vector<Block> blocks;
  /// block id → Pose(block → world)
  std::map<std::string, Pose> world_poses;

  const Block* find(const std::string& id) const;
};

/// The default tabletop: blue, red, yellow side by side on the table plane.
Scene default_scene();

struct Observation {
  int frame_index = 0;
  std::string block_id;
  std::optional<Pose> pose;  // object → camera
  std::optional<BoundingBox> bbox;
  bool visible = false;
  std::optional<double> confidence;

  /// Throws InvalidArgument if visible without a pose, or if confidence and
  /// pose presence disagree.
  void validate() const;
};

struct ObservationLog {
  Scene scene;
  std::vector<Observation> observations;
};

enum class ProvenanceKind { Observed, HeldLast, AnchorInferred, PriorRefined };

struct Provenance {
  ProvenanceKind kind = ProvenanceKind::Observed;
  std::string anchor_id;  // AnchorInferred only
  int pass = 0;           // PriorRefined only

  static Provenance observed() { return {}; }
  static Provenance held_last() { return {ProvenanceKind::HeldLast, {}, 0}; }
  static Provenance anchor_inferred(std::string anchor) { return {ProvenanceKind::AnchorInferred, std::move(anchor), 0}; }
  static Provenance prior_refined(int pass) { return {ProvenanceKind::PriorRefined, {}, pass}; }

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

std::string to_string(const Provenance& p);

struct TrackedEntry {
  Pose pose;  // object → camera
  Provenance provenance;
};

/// Contiguous per-frame poses of one block starting at first_frame.
struct TrackedTrajectory {
  std::string block_id;
  int first_frame = 0;
  std::vector<TrackedEntry> entries;

  int end_frame() const { return first_frame + static_cast<int>(entries.size()); }
  bool covers(int frame) const { return frame >= first_frame && frame < end_frame(); }
  const TrackedEntry& at(int frame) const { return entries.at(static_cast<std::size_t>(frame - first_frame)); }
};

using Trajectories = std::map<std::string, TrackedTrajectory>;

enum class ViolationKind { DuplicateId, MissingPose, Interpenetration };

struct Violation {
  ViolationKind kind;
  std::vector<std::string> block_ids;  // sorted
  std::string message;

  friend bool operator==(const Violation& a, const Violation& b) {
    return a.kind == b.kind && a.block_ids == b.block_ids;
  }
  friend bool operator<(const Violation& a, const Violation& b) {
    return std::tie(a.kind, a.block_ids) < std::tie(b.kind, b.block_ids);
  }
};

/// Report-only checks: duplicate ids, blocks without a world pose, and
/// overlapping oriented boxes. Result is sorted so block order does not matter.
std::vector<Violation> validate_scene(const Scene& scene);

/// Separating-axis test for two oriented boxes (strict overlap; touching
/// faces do not count).
bool boxes_overlap(const Vec3& half_a, const Pose& pose_a, const Vec3& half_b, const Pose& pose_b);

/// Point-in-oriented-box test, boundary inclusive.
bool box_contains(const Vec3& half_extents, const Pose& object_to_world, const Vec3& p_world);

}  // namespace blockflow
