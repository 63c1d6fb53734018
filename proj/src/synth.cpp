#include "blockflow/synth.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace blockflow {

std::string_view to_string(Layout layout) {
  switch (layout) {
    case Layout::Row: return "row";
    case Layout::Stack: return "stack";
    case Layout::Random: return "random";
  }
  return "row";
}

Layout layout_from_string(std::string_view s) {
  if (s == "row") return Layout::Row;
  if (s == "stack") return Layout::Stack;
  if (s == "random") return Layout::Random;
  throw Error(ErrorCode::ConfigError, "unknown layout '" + std::string(s) + "'");
}

namespace {

Block make_block(int index, const Vec3& half_extents) {
  static const std::array<std::pair<const char*, ColorTag>, 3> kNamed{
      {{"blue", ColorTag::Blue}, {"red", ColorTag::Red}, {"yellow", ColorTag::Yellow}}};
  if (index < 3) return {kNamed[static_cast<std::size_t>(index)].first, half_extents, kNamed[static_cast<std::size_t>(index)].second};
  return {"block" + std::to_string(index), half_extents, ColorTag::Other};
}

Pose world_pose(const std::string& id, const Vec3& t, double yaw = 0.0) {
  return Pose(yaw == 0.0 ? Rotation() : Rotation::rot_z(yaw), t, {id, kWorldFrame});
}

}  // namespace

Scene generate_scene(int n_blocks, Layout layout, std::uint64_t seed, const Vec3& half_extents) {
  if (n_blocks < 1) throw Error(ErrorCode::InvalidArgument, "need at least one block");
  if (!(half_extents.array() > 0.0).all()) throw Error(ErrorCode::InvalidArgument, "half extents must be positive");
  Scene scene;
  const double hz = half_extents.z();
  switch (layout) {
    case Layout::Row: {
      const double spacing = 2.0 * half_extents.x() + 0.01;
      const double x0 = -0.5 * spacing * (n_blocks - 1);
      for (int i = 0; i < n_blocks; ++i) {
        Block b = make_block(i, half_extents);
        scene.world_poses.emplace(b.id, world_pose(b.id, {x0 + spacing * i, 0.0, hz}));
        scene.blocks.push_back(std::move(b));
      }
      break;
    }
    case Layout::Stack: {
      for (int i = 0; i < n_blocks; ++i) {
        Block b = make_block(i, half_extents);
        scene.world_poses.emplace(b.id, world_pose(b.id, {0.0, 0.0, (2 * i + 1) * hz}));
        scene.blocks.push_back(std::move(b));
      }
      break;
    }
    case Layout::Random: {
      std::mt19937_64 rng(mix_seed(seed, 0, "generate_scene"));
      std::uniform_real_distribution<double> pos(-0.15, 0.15);
      std::uniform_real_distribution<double> yaw(-M_PI, M_PI);
      constexpr int kMaxTries = 1000;
      for (int i = 0; i < n_blocks; ++i) {
        Block b = make_block(i, half_extents);
        bool placed = false;
        for (int attempt = 0; attempt < kMaxTries && !placed; ++attempt) {
          const Vec3 t = i == 0 ? Vec3(0.0, 0.0, hz) : Vec3(pos(rng), pos(rng), hz);
          const Pose p = world_pose(b.id, t, yaw(rng));
          placed = std::none_of(scene.blocks.begin(), scene.blocks.end(), [&](const Block& other) {
            return boxes_overlap(b.half_extents, p, other.half_extents, scene.world_poses.at(other.id));
          });
          if (placed) scene.world_poses.emplace(b.id, p);
        }
        if (!placed) {
          throw Error(ErrorCode::PlacementFailure, "could not place block " + std::to_string(i) + " after " +
                                                       std::to_string(kMaxTries) + " attempts");
        }
        scene.blocks.push_back(std::move(b));
      }
      break;
    }
  }
  return scene;
}

ObservationLog generate_observations(const EstimatorPort& estimator, const Scene& scene) {
  ObservationLog log;
  log.scene = scene;
  for (int f = 0; f < estimator.frame_count(); ++f) {
    for (const Block& b : scene.blocks) log.observations.push_back(estimator.estimate(f, b.id, std::nullopt));
  }
  return log;
}

ObservationLog generate_observations(const GroundTruth& truth, const NoiseModel& noise, const OcclusionSchedule& occlusions,
                                     std::uint64_t seed, const CameraIntrinsics& k) {
  SyntheticEstimator estimator(truth, noise, occlusions, seed, k);
  return generate_observations(estimator, truth.scene);
}

namespace {

// Slab test of the segment [from, to] against an oriented box, excluding
// grazing contact.
bool segment_hits_box(const Vec3& from, const Vec3& to, const Vec3& half, const Pose& box_to_world) {
  const Rotation inv = box_to_world.rotation().inverse();
  const Vec3 a = inv.rotate(from - box_to_world.translation());
  const Vec3 b = inv.rotate(to - box_to_world.translation());
  const Vec3 d = b - a;
  double t0 = 0.0, t1 = 1.0;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d(i)) < 1e-15) {
      if (std::abs(a(i)) >= half(i)) return false;
      continue;
    }
    double ta = (-half(i) - a(i)) / d(i);
    double tb = (half(i) - a(i)) / d(i);
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 >= t1) return false;
  }
  return true;
}

}  // namespace

OcclusionSchedule occlusion_from_geometry(const GroundTruth& truth) {
  OcclusionSchedule schedule;
  for (const Block& target : truth.scene.blocks) {
    int open = -1;
    for (int f = 0; f <= truth.frame_count(); ++f) {
      bool hidden = false;
      if (f < truth.frame_count()) {
        const Pose cam_to_world = inverse(truth.camera.world_to_camera[static_cast<std::size_t>(f)]);
        const Vec3 eye = cam_to_world.translation();
        const Vec3 center = truth.world_pose(target.id, f).translation();
        for (const Block& other : truth.scene.blocks) {
          if (other.id == target.id) continue;
          if (segment_hits_box(eye, center, other.half_extents, truth.world_pose(other.id, f))) {
            hidden = true;
            break;
          }
        }
      }
      if (hidden && open < 0) open = f;
      if (!hidden && open >= 0) {
        schedule.push_back({target.id, open, f - 1});
        open = -1;
      }
    }
  }
  return schedule;
}

Rotation random_rotation(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Quaterniond q;
  do {
    q = Eigen::Quaterniond(normal(rng), normal(rng), normal(rng), normal(rng));
  } while (q.norm() < 1e-9);
  return Rotation::from_quaternion(q.normalized());
}

AmplificationReport amplification_study(const std::vector<double>& distances_m, double sigma_rot_rad, int trials,
                                        std::uint64_t seed, AxisModel axis_model) {
  if (trials < 100) throw Error(ErrorCode::InvalidArgument, "amplification study needs at least 100 trials per row");
  if (sigma_rot_rad < 0.0) throw Error(ErrorCode::InvalidArgument, "sigma must be non-negative");
  AmplificationReport report;
  for (std::size_t row = 0; row < distances_m.size(); ++row) {
    const double d = distances_m[row];
    if (!(d > 0.0)) throw Error(ErrorCode::InvalidArgument, "distances must be positive");
    std::vector<double> errors;
    errors.reserve(static_cast<std::size_t>(trials));
    for (int trial = 0; trial < trials; ++trial) {
      // Independent per-trial stream, so rows can be run in any order.
      std::mt19937_64 rng(mix_seed(seed, (static_cast<std::uint64_t>(row) << 32) | static_cast<std::uint64_t>(trial),
                                   "amplification"));
      std::normal_distribution<double> normal(0.0, 1.0);
      auto gaussian3 = [&] { return Vec3(normal(rng), normal(rng), normal(rng)); };

      const Vec3 anchor_pos = 0.1 * gaussian3();
      const Vec3 lever_dir = gaussian3().normalized();
      const Pose anchor_world(random_rotation(rng()), anchor_pos, {"anchor", kWorldFrame});
      const Pose target_world(random_rotation(rng()), anchor_pos + d * lever_dir, {"target", kWorldFrame});
      const Pose cam0(random_rotation(rng()), gaussian3(), {kWorldFrame, kCameraFrame});
      const Pose cami(random_rotation(rng()), gaussian3(), {kWorldFrame, kCameraFrame});

      const Pose anchor_0 = compose(cam0, anchor_world);
      const Pose anchor_i_true = compose(cami, anchor_world);
      const Pose target_0 = compose(cam0, target_world);
      const Pose target_i_true = compose(cami, target_world);

      Vec3 axis = gaussian3();
      if (axis_model == AxisModel::PerpendicularToLever) {
        const Vec3 lever = (target_i_true.translation() - anchor_i_true.translation()).normalized();
        axis -= axis.dot(lever) * lever;
      }
      Pose anchor_i = anchor_i_true;
      if (sigma_rot_rad > 0.0) {
        anchor_i = Pose(Rotation::from_axis_angle(axis, sigma_rot_rad) * anchor_i_true.rotation(),
                        anchor_i_true.translation(), anchor_i_true.frame());
      }
      const Pose inferred = anchor_transfer(anchor_0, anchor_i, target_0);
      errors.push_back((inferred.translation() - target_i_true.translation()).norm());
    }
    double sum = 0.0;
    for (double e : errors) sum += e;
    const double mean = sum / trials;
    double var = 0.0;
    for (double e : errors) var += (e - mean) * (e - mean);
    report.rows.push_back({d, sigma_rot_rad, trials, mean, std::sqrt(var / std::max(1, trials - 1)),
                           2.0 * d * std::sin(0.5 * sigma_rot_rad)});
  }
  return report;
}

std::string amplification_csv(const AmplificationReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "distance_m,sigma_rot_rad,trials,mean_error_m,std_error_m,predicted_m\n";
  for (const auto& r : report.rows) {
    out << r.distance_m << ',' << r.sigma_rot_rad << ',' << r.trials << ',' << r.mean_error_m << ',' << r.std_error_m
        << ',' << r.predicted_m << '\n';
  }
  return out.str();
}

double linear_fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorCode::InvalidArgument, "slope needs two or more paired samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw Error(ErrorCode::InvalidArgument, "x values are all equal");
  return sxy / sxx;
}

}  // namespace blockflow
