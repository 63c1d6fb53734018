#include "blockflow/ground_truth.hpp"

#include <algorithm>
#include <cmath>

namespace blockflow {

Pose look_at(const Vec3& eye, const Vec3& target) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(Vec3::UnitZ());
  if (right.norm() < 1e-9) right = forward.cross(Vec3::UnitY());  // looking straight down or up
  right.normalize();
  const Vec3 down = forward.cross(right);
  Mat3 cam_to_world;
  cam_to_world.col(0) = right;
  cam_to_world.col(1) = down;
  cam_to_world.col(2) = forward;
  const Rotation r = Rotation::from_matrix(cam_to_world.transpose());
  return Pose(r, -r.rotate(eye), {kWorldFrame, kCameraFrame});
}

namespace {

Vec3 orbit_eye(const OrbitParams& p, double angle) {
  return p.target + Vec3(p.radius * std::cos(angle), p.radius * std::sin(angle), p.height);
}

void check(const OrbitParams& p) {
  if (p.frames < 1) throw Error(ErrorCode::InvalidArgument, "camera trajectory needs at least one frame");
  if (!(p.radius > 0.0) && !(p.height != 0.0)) throw Error(ErrorCode::InvalidArgument, "camera sits on its target");
}

}  // namespace

CameraTrajectory orbit_trajectory(const OrbitParams& params) {
  check(params);
  CameraTrajectory traj;
  traj.params = params;
  for (int i = 0; i < params.frames; ++i) {
    const double s = params.frames > 1 ? static_cast<double>(i) / (params.frames - 1) : 0.0;
    traj.world_to_camera.push_back(look_at(orbit_eye(params, params.start_angle + s * params.angular_span), params.target));
  }
  return traj;
}

CameraTrajectory fixed_trajectory(const OrbitParams& params) {
  check(params);
  CameraTrajectory traj;
  traj.params = params;
  traj.params.angular_span = 0.0;
  traj.world_to_camera.assign(static_cast<std::size_t>(params.frames),
                              look_at(orbit_eye(params, params.start_angle), params.target));
  return traj;
}

const Pose& GroundTruth::world_pose(const std::string& block_id, int frame) const {
  auto it = object_to_world.find(block_id);
  if (it == object_to_world.end()) throw Error(ErrorCode::InvalidArgument, "unknown block '" + block_id + "'");
  if (frame < 0 || frame >= static_cast<int>(it->second.size())) {
    throw Error(ErrorCode::FrameMismatch, "frame " + std::to_string(frame) + " outside ground truth");
  }
  return it->second[static_cast<std::size_t>(frame)];
}

Pose GroundTruth::object_to_camera(const std::string& block_id, int frame) const {
  if (frame < 0 || frame >= frame_count()) {
    throw Error(ErrorCode::FrameMismatch, "frame " + std::to_string(frame) + " outside camera trajectory");
  }
  return compose(camera.world_to_camera[static_cast<std::size_t>(frame)], world_pose(block_id, frame));
}

GroundTruth static_ground_truth(const Scene& scene, const CameraTrajectory& camera) {
  GroundTruth gt;
  gt.scene = scene;
  gt.camera = camera;
  for (const Block& b : scene.blocks) {
    auto it = scene.world_poses.find(b.id);
    if (it == scene.world_poses.end()) throw Error(ErrorCode::InvalidArgument, "block '" + b.id + "' has no world pose");
    gt.object_to_world[b.id].assign(static_cast<std::size_t>(camera.frame_count()), it->second);
  }
  return gt;
}

double add_distance(const Block& block, const Pose& predicted, const Pose& truth) {
  double sum = 0.0;
  for (const Vec3& c : block.corners()) sum += (predicted.apply(c) - truth.apply(c)).norm();
  return sum / 8.0;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

BlockMetrics summarize(const std::string& id, const std::vector<double>& rot, const std::vector<double>& trans,
                       const std::vector<double>& add) {
  return {id, static_cast<int>(rot.size()), mean(rot), median(rot), mean(trans), median(trans), mean(add)};
}

}  // namespace

Metrics evaluate(const Trajectories& predicted, const GroundTruth& truth) {
  Metrics out;
  std::vector<double> all_rot, all_trans, all_add;
  for (const auto& [id, traj] : predicted) {
    const Block* block = truth.scene.find(id);
    if (!block) throw Error(ErrorCode::InvalidArgument, "trajectory for unknown block '" + id + "'");
    if (traj.first_frame < 0 || traj.end_frame() > truth.frame_count()) {
      throw Error(ErrorCode::FrameMismatch, "trajectory of '" + id + "' exceeds the ground-truth frame range");
    }
    std::vector<double> rot, trans, add;
    for (int f = traj.first_frame; f < traj.end_frame(); ++f) {
      const Pose& p = traj.at(f).pose;
      const Pose t = truth.object_to_camera(id, f);
      const PoseDelta d = pose_delta(p, t);
      rot.push_back(d.rotation_rad * 180.0 / M_PI);
      trans.push_back(d.translation_m);
      add.push_back(add_distance(*block, p, t));
    }
    all_rot.insert(all_rot.end(), rot.begin(), rot.end());
    all_trans.insert(all_trans.end(), trans.begin(), trans.end());
    all_add.insert(all_add.end(), add.begin(), add.end());
    out.blocks.push_back(summarize(id, rot, trans, add));
  }
  out.aggregate = summarize("all", all_rot, all_trans, all_add);
  return out;
}

Metrics evaluate(const Trajectories& predicted, const Trajectories& reference, const Scene& scene) {
  Metrics out;
  std::vector<double> all_rot, all_trans, all_add;
  for (const auto& [id, traj] : predicted) {
    const Block* block = scene.find(id);
    if (!block) throw Error(ErrorCode::InvalidArgument, "trajectory for unknown block '" + id + "'");
    auto ref = reference.find(id);
    std::vector<double> rot, trans, add;
    for (int f = traj.first_frame; f < traj.end_frame(); ++f) {
      if (ref == reference.end() || !ref->second.covers(f)) continue;
      const Pose& p = traj.at(f).pose;
      const Pose& t = ref->second.at(f).pose;
      const PoseDelta d = pose_delta(p, t);
      rot.push_back(d.rotation_rad * 180.0 / M_PI);
      trans.push_back(d.translation_m);
      add.push_back(add_distance(*block, p, t));
    }
    all_rot.insert(all_rot.end(), rot.begin(), rot.end());
    all_trans.insert(all_trans.end(), trans.begin(), trans.end());
    all_add.insert(all_add.end(), add.begin(), add.end());
    out.blocks.push_back(summarize(id, rot, trans, add));
  }
  out.aggregate = summarize("all", all_rot, all_trans, all_add);
  return out;
}

Trajectories truth_trajectories(const GroundTruth& truth) {
  Trajectories out;
  for (const Block& b : truth.scene.blocks) {
    TrackedTrajectory t;
    t.block_id = b.id;
    for (int f = 0; f < truth.frame_count(); ++f) t.entries.push_back({truth.object_to_camera(b.id, f), Provenance::observed()});
    out.emplace(b.id, std::move(t));
  }
  return out;
}

}  // namespace blockflow
