#include "blockflow/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace blockflow {

// ---------------------------------------------------------------------------
// estimators

LogEstimator::LogEstimator(const ObservationLog& log) {
  for (const Observation& obs : log.observations) {
    if (obs.frame_index < 0) throw Error(ErrorCode::InvalidArgument, "negative frame index in log");
    index_[{obs.frame_index, obs.block_id}] = obs;
    frames_ = std::max(frames_, obs.frame_index + 1);
  }
}

Observation LogEstimator::estimate(int frame, const std::string& block_id, const std::optional<Pose>&) const {
  auto it = index_.find({frame, block_id});
  if (it != index_.end()) return it->second;
  Observation missing;
  missing.frame_index = frame;
  missing.block_id = block_id;
  return missing;
}

bool is_occluded(const OcclusionSchedule& schedule, const std::string& block_id, int frame) {
  return std::any_of(schedule.begin(), schedule.end(), [&](const OcclusionInterval& o) {
    return o.block_id == block_id && frame >= o.first && frame <= o.last;
  });
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::string_view tag) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : tag) {
    h ^= c;
    h *= 1099511628211ull;
  }
  auto splitmix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  };
  return splitmix(splitmix(splitmix(seed) ^ a) ^ h);
}

SyntheticEstimator::SyntheticEstimator(GroundTruth truth, NoiseModel noise, OcclusionSchedule occlusions,
                                       std::uint64_t seed, CameraIntrinsics intrinsics)
    : truth_(std::move(truth)), noise_(noise), occlusions_(std::move(occlusions)), seed_(seed), intrinsics_(intrinsics) {
  if (!(noise_.prior_coupling >= 0.0 && noise_.prior_coupling < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "prior coupling must lie in [0, 1)");
  }
  if (noise_.sigma_rot_rad < 0.0 || noise_.sigma_trans_m < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "noise magnitudes must be non-negative");
  }
}

Observation SyntheticEstimator::estimate(int frame, const std::string& block_id, const std::optional<Pose>& prior) const {
  Observation obs;
  obs.frame_index = frame;
  obs.block_id = block_id;
  if (is_occluded(occlusions_, block_id, frame)) return obs;

  const Pose truth = truth_.object_to_camera(block_id, frame);
  double scale = 1.0;
  if (prior) {
    const PoseDelta d = pose_delta(*prior, truth);
    if (d.rotation_rad <= noise_.prior_threshold.rotation_rad && d.translation_m <= noise_.prior_threshold.translation_m) {
      scale = 1.0 - noise_.prior_coupling;
    }
  }
  const double rot = noise_.sigma_rot_rad * scale;
  const double trans = noise_.sigma_trans_m * scale;

  std::mt19937_64 rng(mix_seed(seed_, static_cast<std::uint64_t>(frame), block_id));
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec3 axis(normal(rng), normal(rng), normal(rng));
  while (axis.norm() < 1e-12) axis = Vec3(normal(rng), normal(rng), normal(rng));
  const Vec3 shift(normal(rng), normal(rng), normal(rng));

  Rotation r = truth.rotation();
  if (rot > 0.0) r = Rotation::from_axis_angle(axis, rot) * r;
  Vec3 t = truth.translation();
  if (trans > 0.0) t += trans * shift;

  obs.pose = Pose(r, t, truth.frame());
  obs.visible = true;
  obs.confidence = 1.0 / (1.0 + rot * 180.0 / M_PI / 10.0 + trans / 0.01);
  const Block* block = truth_.scene.find(block_id);
  const double radius = block ? 0.5 * block->diameter() : 0.0;
  if (t.z() > radius && t.z() > kMinDepth) obs.bbox = sphere_bbox(t, radius, intrinsics_);
  return obs;
}

// ---------------------------------------------------------------------------
// config

std::string_view to_string(CameraMode m) { return m == CameraMode::Fixed ? "fixed_camera" : "moving_camera"; }

CameraMode camera_mode_from_string(std::string_view s) {
  if (s == "fixed_camera" || s == "fixed") return CameraMode::Fixed;
  if (s == "moving_camera" || s == "moving") return CameraMode::Moving;
  throw Error(ErrorCode::ConfigError, "unknown camera mode '" + std::string(s) + "'");
}

std::string_view to_string(AnchorRule r) {
  switch (r) {
    case AnchorRule::NearestAtOcclusionStart: return "nearest_at_occlusion_start";
    case AnchorRule::FixedId: return "fixed_id";
    case AnchorRule::HighestConfidence: return "highest_confidence";
  }
  return "nearest_at_occlusion_start";
}

AnchorRule anchor_rule_from_string(std::string_view s) {
  if (s == "nearest_at_occlusion_start" || s == "nearest") return AnchorRule::NearestAtOcclusionStart;
  if (s == "fixed_id") return AnchorRule::FixedId;
  if (s == "highest_confidence") return AnchorRule::HighestConfidence;
  throw Error(ErrorCode::ConfigError, "unknown anchor rule '" + std::string(s) + "'");
}

void TrackerConfig::validate() const {
  if (refinement_passes < 1 || refinement_passes > kMaxPasses) {
    throw Error(ErrorCode::ConfigError, "refinement passes must be in [1, " + std::to_string(kMaxPasses) + "]");
  }
  if (window < 0) throw Error(ErrorCode::ConfigError, "window must be >= 0");
  if (anchor_rule == AnchorRule::FixedId && anchor_id.empty()) {
    throw Error(ErrorCode::ConfigError, "fixed_id anchor rule needs an anchor id");
  }
}

// ---------------------------------------------------------------------------
// anchor inference

std::string select_anchor(const std::vector<AnchorCandidate>& candidates, AnchorRule rule, const std::string& fixed_id) {
  if (candidates.empty()) throw Error(ErrorCode::EmptyCandidates, "no anchor candidates");
  switch (rule) {
    case AnchorRule::FixedId: {
      auto it = std::find_if(candidates.begin(), candidates.end(), [&](const auto& c) { return c.id == fixed_id; });
      if (it == candidates.end()) throw Error(ErrorCode::NoVisibleAnchor, "fixed anchor '" + fixed_id + "' is not visible");
      return it->id;
    }
    case AnchorRule::NearestAtOcclusionStart:
      return std::min_element(candidates.begin(), candidates.end(),
                              [](const auto& a, const auto& b) { return std::tie(a.distance, a.id) < std::tie(b.distance, b.id); })
          ->id;
    case AnchorRule::HighestConfidence:
      return std::min_element(candidates.begin(), candidates.end(),
                              [](const auto& a, const auto& b) {
                                return std::make_tuple(-a.confidence, a.id) < std::make_tuple(-b.confidence, b.id);
                              })
          ->id;
  }
  return candidates.front().id;
}

FrameTable::FrameTable(int frame_count, std::vector<std::string> ids) : frames(frame_count), block_ids(std::move(ids)) {
  for (const auto& id : block_ids) {
    entries[id].assign(static_cast<std::size_t>(frames), std::nullopt);
    visible[id].assign(static_cast<std::size_t>(frames), false);
    confidence[id].assign(static_cast<std::size_t>(frames), 0.0);
  }
}

void infer_occluded_at(FrameTable& table, int frame, const TrackerConfig& config) {
  const auto f = static_cast<std::size_t>(frame);
  for (const auto& target : table.block_ids) {
    if (table.visible[target][f] || table.entries[target][f]) continue;
    const auto& vis = table.visible[target];
    int start = -1;
    for (int s = frame - 1; s >= 0; --s) {
      if (vis[static_cast<std::size_t>(s)]) {
        start = s;
        break;
      }
    }
    if (start < 0) continue;  // not tracked yet
    const auto s = static_cast<std::size_t>(start);
    const Pose& target_at_0 = table.entries[target][s]->pose;

    std::vector<AnchorCandidate> candidates;
    for (const auto& id : table.block_ids) {
      if (id == target || !table.visible[id][f] || !table.visible[id][s]) continue;
      const double dist = (table.entries[id][s]->pose.translation() - target_at_0.translation()).norm();
      candidates.push_back({id, dist, table.confidence[id][f]});
    }
    if (candidates.empty()) {
      throw Error(ErrorCode::NoVisibleAnchor,
                  "frame " + std::to_string(frame) + ": no visible anchor for '" + target + "'");
    }
    const std::string anchor = select_anchor(candidates, config.anchor_rule, config.anchor_id);
    const Pose inferred = anchor_transfer(table.entries[anchor][s]->pose, table.entries[anchor][f]->pose, target_at_0);
    table.entries[target][f] = TrackedEntry{inferred, Provenance::anchor_inferred(anchor)};
  }
}

void infer_occluded_moving(FrameTable& table, const TrackerConfig& config) {
  for (int f = 0; f < table.frames; ++f) infer_occluded_at(table, f, config);
}

Trajectories to_trajectories(const FrameTable& table, bool allow_untracked) {
  Trajectories out;
  for (const auto& id : table.block_ids) {
    const auto& column = table.entries.at(id);
    auto first = std::find_if(column.begin(), column.end(), [](const auto& e) { return e.has_value(); });
    if (first == column.end()) {
      if (allow_untracked) continue;
      throw Error(ErrorCode::NoObservationsEver, "block '" + id + "' is never observed");
    }
    TrackedTrajectory traj;
    traj.block_id = id;
    traj.first_frame = static_cast<int>(first - column.begin());
    for (auto it = first; it != column.end() && it->has_value(); ++it) traj.entries.push_back(**it);
    out.emplace(id, std::move(traj));
  }
  return out;
}

// ---------------------------------------------------------------------------
// passes

Trajectories run_pass(const EstimatorPort& estimator, const Scene& scene, const TrackerConfig& config,
                      const Trajectories& priors, int pass, int frame_limit) {
  config.validate();
  if (scene.blocks.empty()) throw Error(ErrorCode::InvalidArgument, "scene has no blocks");
  int frames = estimator.frame_count();
  if (frame_limit >= 0) frames = std::min(frames, frame_limit);
  if (frames <= 0) throw Error(ErrorCode::InvalidArgument, "no frames to track");

  std::vector<std::string> ids;
  for (const Block& b : scene.blocks) ids.push_back(b.id);
  FrameTable table(frames, ids);

  for (int frame = 0; frame < frames; ++frame) {
    const auto f = static_cast<std::size_t>(frame);
    for (const auto& id : ids) {
      std::optional<Pose> prior;
      auto pit = priors.find(id);
      if (pass > 1 && pit != priors.end() && pit->second.covers(frame)) {
        prior = pit->second.at(frame).pose;
      } else if (frame > 0 && table.entries[id][f - 1]) {
        prior = table.entries[id][f - 1]->pose;
      }
      Observation obs = estimator.estimate(frame, id, prior);
      if (!obs.visible) continue;
      obs.validate();
      table.visible[id][f] = true;
      table.confidence[id][f] = obs.confidence.value_or(0.0);
      const Provenance prov = (pass > 1 && prior) ? Provenance::prior_refined(pass) : Provenance::observed();
      table.entries[id][f] = TrackedEntry{*obs.pose, prov};
    }

    if (config.mode == CameraMode::Fixed) {
      for (const auto& id : ids) {
        auto& column = table.entries[id];
        if (!column[f] && frame > 0 && column[f - 1]) column[f] = TrackedEntry{column[f - 1]->pose, Provenance::held_last()};
      }
    } else {
      infer_occluded_at(table, frame, config);
    }
  }
  return to_trajectories(table, frames < estimator.frame_count());
}

RefinementResult refine_multi_pass(const EstimatorPort& estimator, const Scene& scene, const TrackerConfig& config,
                                   const GroundTruth* truth) {
  config.validate();
  RefinementResult result;
  Trajectories priors;
  for (int pass = 1; pass <= config.refinement_passes; ++pass) {
    const bool last = pass == config.refinement_passes;
    const int limit = (!last && config.window > 0) ? config.window : -1;
    Trajectories current = run_pass(estimator, scene, config, priors, pass, limit);
    if (truth) result.pass_metrics.push_back({pass, evaluate(current, *truth)});
    priors = std::move(current);
  }
  result.trajectories = std::move(priors);
  return result;
}

std::string pass_metrics_csv(const std::vector<PassMetrics>& metrics) {
  std::ostringstream out;
  out.precision(17);
  out << "pass,block,mean_rot_err_deg,mean_trans_err_m\n";
  for (const PassMetrics& pm : metrics) {
    for (const BlockMetrics& b : pm.metrics.blocks) {
      out << pm.pass << ',' << b.block_id << ',' << b.mean_rot_deg << ',' << b.mean_trans_m << '\n';
    }
    out << pm.pass << ",all," << pm.metrics.aggregate.mean_rot_deg << ',' << pm.metrics.aggregate.mean_trans_m << '\n';
  }
  return out.str();
}

}  // namespace blockflow
