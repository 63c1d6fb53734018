#include <doctest.h>

#include "blockflow/synth.hpp"
#include "support.hpp"

using namespace blockflow;

namespace {

constexpr double kDeg = M_PI / 180.0;

GroundTruth truth_for(const Scene& scene, int frames, double span_deg) {
  OrbitParams p;
  p.start_angle = -M_PI / 2;
  p.angular_span = span_deg * kDeg;
  p.frames = frames;
  return static_ground_truth(scene, span_deg == 0 ? fixed_trajectory(p) : orbit_trajectory(p));
}

Trajectories single_entry(const std::string& id, const Pose& pose) {
  TrackedTrajectory t;
  t.block_id = id;
  t.entries.push_back({pose, Provenance::observed()});
  return {{id, t}};
}

// ADD computed from an explicit list of the eight corners.
double add_oracle(const Vec3& h, const Pose& a, const Pose& b) {
  double sum = 0.0;
  for (double sx : {-1.0, 1.0}) {
    for (double sy : {-1.0, 1.0}) {
      for (double sz : {-1.0, 1.0}) {
        const Eigen::Vector4d c(sx * h.x(), sy * h.y(), sz * h.z(), 1.0);
        sum += ((testing::homogeneous(a) * c) - (testing::homogeneous(b) * c)).head<3>().norm();
      }
    }
  }
  return sum / 8.0;
}

}  // namespace

TEST_CASE("generated scenes") {
  const Scene one = generate_scene(1, Layout::Row, 0);
  REQUIRE(one.blocks.size() == 1);
  CHECK(one.blocks[0].id == "blue");
  const Vec3 t = one.world_poses.at("blue").translation();
  CHECK(t.head<2>().norm() == 0.0);
  CHECK(t.z() == kDefaultHalfExtents.z());

  const Scene row = generate_scene(6, Layout::Row, 0);
  CHECK(validate_scene(row).empty());
  CHECK(row.blocks[1].color == ColorTag::Red);
  CHECK(row.blocks[2].color == ColorTag::Yellow);
  CHECK(row.blocks[5].color == ColorTag::Other);
  for (std::size_t i = 1; i < row.blocks.size(); ++i) {
    const double gap = row.world_poses.at(row.blocks[i].id).translation().x() -
                       row.world_poses.at(row.blocks[i - 1].id).translation().x();
    CHECK(gap > 2 * kDefaultHalfExtents.x());
  }

  const Scene stack = generate_scene(3, Layout::Stack, 0);
  CHECK(validate_scene(stack).empty());
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(stack.world_poses.at(stack.blocks[static_cast<std::size_t>(i)].id).translation().z() -
                   (2 * i + 1) * kDefaultHalfExtents.z()) < 1e-15);
  }

  CHECK_THROWS_AS(generate_scene(0, Layout::Row, 0), Error);
  CHECK_THROWS_AS(layout_from_string("spiral"), Error);
  CHECK(layout_from_string(to_string(Layout::Stack)) == Layout::Stack);
}

TEST_CASE("property: random layouts are valid and reproducible") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scene a = generate_scene(5, Layout::Random, seed);
    CHECK(validate_scene(a).empty());
    const Scene b = generate_scene(5, Layout::Random, seed);
    for (const Block& blk : a.blocks) CHECK(a.world_poses.at(blk.id) == b.world_poses.at(blk.id));
  }
  try {
    generate_scene(400, Layout::Random, 1);
    FAIL("crowded table should not fit");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PlacementFailure);
  }
}

TEST_CASE("observations") {
  const GroundTruth truth = truth_for(default_scene(), 12, 60);
  SUBCASE("noiseless observations equal the truth") {
    const ObservationLog log = generate_observations(truth, {}, {}, 3);
    CHECK(log.observations.size() == 36);
    for (const Observation& o : log.observations) {
      REQUIRE(o.visible);
      const PoseDelta d = pose_delta(*o.pose, truth.object_to_camera(o.block_id, o.frame_index));
      CHECK(d.rotation_rad < 1e-12);
      CHECK(d.translation_m == 0.0);
    }
  }
  SUBCASE("occluded observations carry no pose") {
    const ObservationLog log = generate_observations(truth, {}, {{"red", 2, 4}}, 3);
    for (const Observation& o : log.observations) {
      const bool hidden = o.block_id == "red" && o.frame_index >= 2 && o.frame_index <= 4;
      CHECK(o.visible == !hidden);
      CHECK(o.pose.has_value() == !hidden);
    }
  }
}

TEST_CASE("observation noise statistics") {
  const GroundTruth truth = truth_for(default_scene(), 3334, 0);
  NoiseModel n;
  n.sigma_rot_rad = 5 * kDeg;
  n.sigma_trans_m = 0.01;
  const ObservationLog log = generate_observations(truth, n, {}, 99);
  REQUIRE(log.observations.size() >= 10000);
  double sq = 0.0;
  int count = 0;
  Vec3 mean_axis_sum = Vec3::Zero();
  for (const Observation& o : log.observations) {
    const Pose t = truth.object_to_camera(o.block_id, o.frame_index);
    const double angle = rotation_angle_between(o.pose->rotation(), t.rotation());
    CHECK(std::abs(angle - 5 * kDeg) < 1e-9);
    const Vec3 dt = o.pose->translation() - t.translation();
    sq += dt.squaredNorm();
    mean_axis_sum += dt;
    count += 3;
  }
  const double sigma = std::sqrt(sq / count);
  CHECK(std::abs(sigma - 0.01) / 0.01 < 0.10);
  CHECK((mean_axis_sum / (count / 3)).norm() < 0.001);
}

TEST_CASE("evaluation metrics") {
  const Scene scene = default_scene();
  const GroundTruth truth = truth_for(scene, 1, 0);
  const Pose t = truth.object_to_camera("blue", 0);

  const Metrics zero = evaluate(truth_trajectories(truth), truth);
  CHECK(zero.aggregate.mean_rot_deg == 0.0);
  CHECK(zero.aggregate.mean_trans_m == 0.0);
  CHECK(zero.aggregate.mean_add_m == 0.0);
  CHECK(zero.aggregate.samples == 3);

  const Pose spun(t.rotation() * Rotation::rot_z(10 * kDeg), t.translation(), t.frame());
  const Metrics rot = evaluate(single_entry("blue", spun), truth);
  CHECK(rot.aggregate.mean_rot_deg == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(rot.aggregate.mean_trans_m < 1e-15);
  CHECK(std::abs(rot.aggregate.mean_add_m - add_oracle(kDefaultHalfExtents, spun, t)) < 1e-12);
  // A z-rotation moves every corner by 2·r·sin(θ/2), r the corner's xy radius.
  const double r = kDefaultHalfExtents.head<2>().norm();
  CHECK(std::abs(rot.aggregate.mean_add_m - 2 * r * std::sin(5 * kDeg)) < 1e-12);

  const Pose shifted(t.rotation(), t.translation() + Vec3(0.05, 0, 0), t.frame());
  const Metrics trans = evaluate(single_entry("blue", shifted), truth);
  CHECK(trans.aggregate.mean_trans_m == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(trans.aggregate.mean_add_m == doctest::Approx(0.05).epsilon(1e-12));

  TrackedTrajectory too_long;
  too_long.block_id = "blue";
  too_long.entries = {{t, Provenance::observed()}, {t, Provenance::observed()}};
  CHECK_THROWS_AS(evaluate({{"blue", too_long}}, truth), Error);
}

TEST_CASE("property: ADD is bounded below by the center error") {
  testing::Rng rng(51);
  const Block b{"b", kDefaultHalfExtents, ColorTag::Blue};
  for (int i = 0; i < 1000; ++i) {
    const Pose p = testing::pose(rng, "b", "camera", 0.3);
    const Pose q = testing::pose(rng, "b", "camera", 0.3);
    const double add = add_distance(b, p, q);
    CHECK(add >= (p.translation() - q.translation()).norm() - 1e-12);
    CHECK(std::abs(add - add_oracle(b.half_extents, p, q)) < 1e-12);
  }
}

TEST_CASE("geometric occlusion") {
  Scene scene;
  scene.blocks = {{"front", kDefaultHalfExtents, ColorTag::Blue}, {"back", kDefaultHalfExtents, ColorTag::Red}};
  scene.world_poses.emplace("front", Pose(Rotation{}, Vec3(0, -0.1, 0.0075), {"front", kWorldFrame}));
  scene.world_poses.emplace("back", Pose(Rotation{}, Vec3(0, 0.1, 0.0075), {"back", kWorldFrame}));
  OrbitParams p;
  p.start_angle = -M_PI / 2;
  p.height = 0.0075;
  p.frames = 3;
  const OcclusionSchedule occ = occlusion_from_geometry(static_ground_truth(scene, fixed_trajectory(p)));
  REQUIRE(occ.size() == 1);
  CHECK(occ[0].block_id == "back");
  CHECK(occ[0].first == 0);
  CHECK(occ[0].last == 2);
}

TEST_CASE("amplification study") {
  SUBCASE("zero noise gives zero error") {
    const AmplificationReport r = amplification_study({0.1, 1.0}, 0.0, 100, 1);
    for (const auto& row : r.rows) CHECK(row.mean_error_m < 1e-12);
  }
  SUBCASE("two metres at one degree") {
    const AmplificationReport r = amplification_study({2.0}, 1 * kDeg, 500, 1);
    CHECK(r.rows[0].predicted_m == doctest::Approx(0.034905).epsilon(1e-4));
    CHECK(std::abs(r.rows[0].mean_error_m - r.rows[0].predicted_m) / r.rows[0].predicted_m < 0.10);
  }
  SUBCASE("error scales linearly with distance") {
    const std::vector<double> d{0.1, 0.2, 0.4};
    for (AxisModel model : {AxisModel::PerpendicularToLever, AxisModel::UniformSphere}) {
      const AmplificationReport r = amplification_study(d, 1 * kDeg, 1000, 7, model);
      CHECK(std::abs(r.rows[2].mean_error_m / r.rows[0].mean_error_m - 4.0) / 4.0 < 0.15);
      std::vector<double> y;
      for (const auto& row : r.rows) y.push_back(row.mean_error_m);
      const double expected = model == AxisModel::PerpendicularToLever ? 2 * std::sin(0.5 * kDeg)
                                                                       : M_PI / 4 * 2 * std::sin(0.5 * kDeg);
      CHECK(std::abs(linear_fit_slope(d, y) - expected) / expected < 0.15);
    }
  }
  SUBCASE("deterministic and order independent") {
    const AmplificationReport a = amplification_study({0.1, 0.3}, 2 * kDeg, 200, 5);
    const AmplificationReport b = amplification_study({0.1, 0.3}, 2 * kDeg, 200, 5);
    CHECK(amplification_csv(a) == amplification_csv(b));
    const AmplificationReport first = amplification_study({0.1}, 2 * kDeg, 200, 5);
    CHECK(first.rows[0].mean_error_m == a.rows[0].mean_error_m);
  }
  SUBCASE("arguments") {
    CHECK_THROWS_AS(amplification_study({0.1}, kDeg, 99, 1), Error);
    CHECK_THROWS_AS(amplification_study({-0.1}, kDeg, 100, 1), Error);
    CHECK_THROWS_AS(linear_fit_slope({1, 1}, {2, 3}), Error);
    CHECK(linear_fit_slope({0, 1, 2}, {1, 3, 5}) == doctest::Approx(2.0));
  }
}
