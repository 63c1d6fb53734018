#pragma once

#include <map>
#include <string>
#include <vector>

#include "blockflow/scene.hpp"

namespace blockflow {

struct OrbitParams {
  double radius = 0.5;        // m, horizontal distance from target
  double height = 0.35;       // m, above the table
  double start_angle = 0.0;   // rad
  double angular_span = 0.0;  // rad swept over the sequence
  int frames = 1;
  Vec3 target = Vec3::Zero();
};

struct CameraTrajectory {
  std::vector<Pose> world_to_camera;  // one per frame, frame (world, camera)
  OrbitParams params;

  int frame_count() const { return static_cast<int>(world_to_camera.size()); }
};

/// Pose(world → camera) of a camera at `eye` looking at `target`, with z
/// forward, x right and y down; world z is up.
Pose look_at(const Vec3& eye, const Vec3& target);

/// Camera circling `params.target` at fixed radius and height.
CameraTrajectory orbit_trajectory(const OrbitParams& params);
/// Camera that stays at the orbit's start for every frame.
CameraTrajectory fixed_trajectory(const OrbitParams& params);

/// Ground truth for a synthetic sequence: the camera path plus every block's
/// world pose at every frame.
struct GroundTruth {
  Scene scene;
  CameraTrajectory camera;
  std::map<std::string, std::vector<Pose>> object_to_world;

  int frame_count() const { return camera.frame_count(); }
  const Pose& world_pose(const std::string& block_id, int frame) const;
  Pose object_to_camera(const std::string& block_id, int frame) const;
};

/// Blocks stay at their scene poses for the whole camera path.
GroundTruth static_ground_truth(const Scene& scene, const CameraTrajectory& camera);

struct BlockMetrics {
  std::string block_id;
  int samples = 0;
  double mean_rot_deg = 0.0;
  double median_rot_deg = 0.0;
  double mean_trans_m = 0.0;
  double median_trans_m = 0.0;
  double mean_add_m = 0.0;
};

struct Metrics {
  std::vector<BlockMetrics> blocks;
  BlockMetrics aggregate;
};

/// Mean distance between the block's eight corners under two poses.
double add_distance(const Block& block, const Pose& predicted, const Pose& truth);

/// Rotation, translation and ADD errors of every tracked entry against
/// ground truth. FrameMismatch when a trajectory extends past the truth.
Metrics evaluate(const Trajectories& predicted, const GroundTruth& truth);
/// Same metrics against reference trajectories; predicted frames without a
/// reference pose are skipped.
Metrics evaluate(const Trajectories& predicted, const Trajectories& reference, const Scene& scene);

/// Ground-truth object-to-camera poses as trajectories with observed
/// provenance, one per block over every frame.
Trajectories truth_trajectories(const GroundTruth& truth);

}  // namespace blockflow
