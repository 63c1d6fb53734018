#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blockflow/ground_truth.hpp"
#include "blockflow/tracking.hpp"

namespace blockflow {

enum class Layout { Row, Stack, Random };

std::string_view to_string(Layout layout);
Layout layout_from_string(std::string_view s);

/// Non-overlapping blocks resting on the z = 0 table plane (row, random) or
/// stacked on each other (stack). The first three blocks are blue, red and
/// yellow.
Scene generate_scene(int n_blocks, Layout layout, std::uint64_t seed, const Vec3& half_extents = kDefaultHalfExtents);

/// One observation per (frame, block), estimated without priors.
ObservationLog generate_observations(const EstimatorPort& estimator, const Scene& scene);
ObservationLog generate_observations(const GroundTruth& truth, const NoiseModel& noise, const OcclusionSchedule& occlusions,
                                     std::uint64_t seed, const CameraIntrinsics& k = {});

/// Occlusion schedule from geometry: a block is hidden in a frame when the
/// segment from the camera center to its center passes through another block.
OcclusionSchedule occlusion_from_geometry(const GroundTruth& truth);

/// How the anchor's rotation perturbation axis is drawn.
enum class AxisModel {
  /// Uniform over directions perpendicular to the anchor–target lever arm;
  /// every trial then moves the target by exactly the chord 2·d·sin(σ/2).
  PerpendicularToLever,
  /// Uniform over the sphere; the mean error is π/4 of the chord.
  UniformSphere,
};

struct AmplificationRow {
  double distance_m = 0.0;
  double sigma_rot_rad = 0.0;
  int trials = 0;
  double mean_error_m = 0.0;
  double std_error_m = 0.0;
  double predicted_m = 0.0;  // 2·d·sin(σ/2)
};

struct AmplificationReport {
  std::vector<AmplificationRow> rows;
};

/// For each distance: a static anchor and target d apart, random camera
/// poses at two instants, the anchor's second rotation perturbed by σ, and
/// the target inferred by anchor transfer. Records the target position error.
AmplificationReport amplification_study(const std::vector<double>& distances_m, double sigma_rot_rad, int trials,
                                        std::uint64_t seed, AxisModel axis_model = AxisModel::PerpendicularToLever);

/// CSV: distance_m,sigma_rot_rad,trials,mean_error_m,std_error_m,predicted_m
std::string amplification_csv(const AmplificationReport& report);

/// Least-squares slope of y against x.
double linear_fit_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Uniformly distributed rotation.
Rotation random_rotation(std::uint64_t seed);

}  // namespace blockflow
