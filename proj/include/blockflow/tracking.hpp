#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "blockflow/ground_truth.hpp"
#include "blockflow/scene.hpp"

namespace blockflow {

/// Anything that turns (frame, block, optional prior) into an observation:
/// a replayed log, a synthetic estimator, or a wrapper around a real one.
/// Implementations must be deterministic for identical inputs.
class EstimatorPort {
public:
  virtual ~EstimatorPort() = default;
  virtual int frame_count() const = 0;
  virtual Observation estimate(int frame, const std::string& block_id, const std::optional<Pose>& prior) const = 0;
};

/// Replays a recorded observation log; priors are ignored.
class LogEstimator final : public EstimatorPort {
public:
  explicit LogEstimator(const ObservationLog& log);
  int frame_count() const override { return frames_; }
  Observation estimate(int frame, const std::string& block_id, const std::optional<Pose>& prior) const override;

private:
  std::map<std::pair<int, std::string>, Observation> index_;
  int frames_ = 0;
};

struct PriorThreshold {
  double rotation_rad = 10.0 * M_PI / 180.0;
  double translation_m = 0.05;
};

struct NoiseModel {
  double sigma_rot_rad = 0.0;    // exact geodesic size of the rotation perturbation
  double sigma_trans_m = 0.0;    // per-axis std of isotropic translation noise
  double prior_coupling = 0.0;   // β in [0, 1)
  PriorThreshold prior_threshold;
};

/// Inclusive frame interval during which a block is not visible.
struct OcclusionInterval {
  std::string block_id;
  int first = 0;
  int last = 0;
};

using OcclusionSchedule = std::vector<OcclusionInterval>;

bool is_occluded(const OcclusionSchedule& schedule, const std::string& block_id, int frame);

/// Ground-truth pose perturbed by a rotation of exactly sigma_rot about a
/// uniformly random axis and isotropic Gaussian translation noise. A prior
/// within the threshold of the truth scales both noise terms by (1 - β).
/// Noise directions depend only on (seed, frame, block).
class SyntheticEstimator final : public EstimatorPort {
public:
  SyntheticEstimator(GroundTruth truth, NoiseModel noise, OcclusionSchedule occlusions, std::uint64_t seed,
                     CameraIntrinsics intrinsics = {});

  int frame_count() const override { return truth_.frame_count(); }
  Observation estimate(int frame, const std::string& block_id, const std::optional<Pose>& prior) const override;

  const GroundTruth& truth() const { return truth_; }

private:
  GroundTruth truth_;
  NoiseModel noise_;
  OcclusionSchedule occlusions_;
  std::uint64_t seed_;
  CameraIntrinsics intrinsics_;
};

/// Deterministic 64-bit seed for (base seed, frame, block).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::string_view tag);

enum class CameraMode { Fixed, Moving };
enum class AnchorRule { NearestAtOcclusionStart, FixedId, HighestConfidence };

std::string_view to_string(CameraMode m);
CameraMode camera_mode_from_string(std::string_view s);
std::string_view to_string(AnchorRule r);
AnchorRule anchor_rule_from_string(std::string_view s);

struct TrackerConfig {
  static constexpr int kMaxPasses = 10;

  CameraMode mode = CameraMode::Fixed;
  int refinement_passes = 2;
  AnchorRule anchor_rule = AnchorRule::NearestAtOcclusionStart;
  std::string anchor_id;  // FixedId only
  PriorThreshold prior_threshold;
  /// Frames covered by every pass except the last; 0 means the full sequence.
  int window = 0;

  void validate() const;
};

struct AnchorCandidate {
  std::string id;
  double distance = 0.0;    // to the target at the occlusion-start frame
  double confidence = 0.0;  // at the frame being inferred
};

/// Picks the anchor used to infer an occluded target. Ties go to the
/// lexicographically smaller id.
std::string select_anchor(const std::vector<AnchorCandidate>& candidates, AnchorRule rule,
                          const std::string& fixed_id = {});

/// Per-frame working state of a tracking pass.
struct FrameTable {
  int frames = 0;
  std::vector<std::string> block_ids;
  std::map<std::string, std::vector<std::optional<TrackedEntry>>> entries;
  std::map<std::string, std::vector<bool>> visible;
  std::map<std::string, std::vector<double>> confidence;

  FrameTable() = default;
  FrameTable(int frames, std::vector<std::string> ids);
};

/// Fills occluded entries of `frame` by anchor transfer. The reference frame
/// for a target is its last visible frame before the gap; the anchor must be
/// visible both there and at `frame`. Throws NoVisibleAnchor.
void infer_occluded_at(FrameTable& table, int frame, const TrackerConfig& config);
/// infer_occluded_at over every frame.
void infer_occluded_moving(FrameTable& table, const TrackerConfig& config);

/// Throws NoObservationsEver for a block without any entry unless
/// `allow_untracked`, in which case the block is left out.
Trajectories to_trajectories(const FrameTable& table, bool allow_untracked = false);

/// One tracking pass. `pass` is 1-based; priors for pass 1 come from the
/// pass's own previous frame, later passes use `priors` (the previous
/// pass's output) at the same frame.
Trajectories run_pass(const EstimatorPort& estimator, const Scene& scene, const TrackerConfig& config,
                      const Trajectories& priors = {}, int pass = 1, int frame_limit = -1);

struct PassMetrics {
  int pass = 0;
  Metrics metrics;
};

struct RefinementResult {
  Trajectories trajectories;
  std::vector<PassMetrics> pass_metrics;  // empty without ground truth
};

/// Runs config.refinement_passes passes, threading each pass's output as the
/// next pass's priors.
RefinementResult refine_multi_pass(const EstimatorPort& estimator, const Scene& scene, const TrackerConfig& config,
                                   const GroundTruth* truth = nullptr);

/// CSV: pass,block,mean_rot_err_deg,mean_trans_err_m
std::string pass_metrics_csv(const std::vector<PassMetrics>& metrics);

}  // namespace blockflow
