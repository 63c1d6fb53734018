#include <doctest.h>

#include "blockflow/camera.hpp"
#include "blockflow/json_io.hpp"
#include "support.hpp"

using namespace blockflow;

namespace {

const CameraIntrinsics k{};

BoundingBox square_box(double cx, double cy, double side) {
  return {cx - side / 2, cy - side / 2, cx + side / 2, cy + side / 2};
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("projection examples") {
  for (double z : {0.1, 1.0, 7.5}) {
    const Vec2 p = project_camera_point({0, 0, z}, k);
    CHECK(p.x() == 320.0);
    CHECK(p.y() == 240.0);
  }
  const Vec2 p = project_camera_point({1, 0, 5}, k);
  CHECK(p.x() == doctest::Approx(500.0 * 1.0 / 5.0 + 320.0).epsilon(1e-15));
  CHECK(p.y() == 240.0);
  CHECK(code_of([] { project_camera_point({1, 1, 0}, k); }) == ErrorCode::BehindCamera);
  CHECK(code_of([] { project_camera_point({1, 1, -2}, k); }) == ErrorCode::BehindCamera);
}

TEST_CASE("project_point applies the extrinsic first") {
  const Pose world_to_camera(Rotation{}, Vec3(0, 0, 5), {"world", "camera"});
  const Vec2 p = project_point({1, 0, 0}, world_to_camera, k);
  CHECK(p.x() == doctest::Approx(420.0));
}

TEST_CASE("property: back projection inverts projection") {
  testing::Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p(testing::uniform(rng, -2, 2), testing::uniform(rng, -2, 2), testing::uniform(rng, 0.2, 10));
    const Vec3 ray = back_project(project_camera_point(p, k), k);
    CHECK((ray * p.z() - p).norm() < 1e-9);
  }
  const Vec3 axis = back_project({k.cx, k.cy}, k);
  CHECK(axis == Vec3(0, 0, 1));
}

TEST_CASE("intrinsics validation and JSON") {
  CHECK_NOTHROW(k.validate());
  CameraIntrinsics bad = k;
  bad.fx = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = k;
  bad.cx = 700;
  CHECK_THROWS_AS(bad.validate(), Error);
  const CameraIntrinsics back = intrinsics_from_json(json::parse(R"({"fx":600,"fy":610,"cx":300,"cy":200,"width":640,"height":400})"));
  CHECK(back.fx == 600);
  CHECK(back.fy == 610);
  CHECK(back.height == 400);
  CHECK(to_json(back).at("cy") == 200.0);
}

TEST_CASE("sphere silhouette box") {
  const BoundingBox box = sphere_bbox({0, 0, 5}, 0.5, k);
  const double expected = 500.0 * std::tan(std::asin(0.1));
  CHECK(std::abs((box.max_x - 320.0) - expected) < 1e-9);
  CHECK(std::abs((320.0 - box.min_x) - expected) < 1e-9);
  CHECK(expected == doctest::Approx(50.25).epsilon(1e-3));

  SUBCASE("surface sampling oracle") {
    testing::Rng rng(12);
    for (const Vec3& c : {Vec3(0, 0, 5), Vec3(1.2, -0.7, 4), Vec3(-2, 1, 6)}) {
      const double r = 0.5;
      const BoundingBox exact = sphere_bbox(c, r, k);
      double min_x = 1e9, max_x = -1e9, min_y = 1e9, max_y = -1e9;
      for (int i = 0; i < 100000; ++i) {
        const Vec2 px = project_camera_point(c + r * testing::unit_vec(rng), k);
        min_x = std::min(min_x, px.x());
        max_x = std::max(max_x, px.x());
        min_y = std::min(min_y, px.y());
        max_y = std::max(max_y, px.y());
      }
      // Samples never leave the silhouette and come within a small fraction
      // of a pixel of its edges.
      CHECK(min_x >= exact.min_x - 1e-9);
      CHECK(max_x <= exact.max_x + 1e-9);
      CHECK(min_y >= exact.min_y - 1e-9);
      CHECK(max_y <= exact.max_y + 1e-9);
      CHECK(min_x - exact.min_x < 0.25);
      CHECK(exact.max_x - max_x < 0.25);
      CHECK(min_y - exact.min_y < 0.25);
      CHECK(exact.max_y - max_y < 0.25);
    }
  }
  SUBCASE("vanishing radius collapses onto the projected center") {
    const Vec3 c(0.4, -0.3, 3.0);
    const BoundingBox tiny = sphere_bbox(c, 0.0, k);
    const Vec2 p = project_camera_point(c, k);
    CHECK(std::abs(tiny.min_x - p.x()) < 1e-9);
    CHECK(std::abs(tiny.max_x - p.x()) < 1e-9);
    CHECK(std::abs(tiny.min_y - p.y()) < 1e-9);
    CHECK(std::abs(tiny.max_y - p.y()) < 1e-9);
  }
  CHECK(code_of([] { sphere_bbox({0, 0, 1}, 1.0, k); }) == ErrorCode::SphereIntersectsImagePlane);
}

TEST_CASE("property: silhouette area shrinks with depth") {
  testing::Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    const Vec3 dir = Vec3(testing::uniform(rng, -0.3, 0.3), testing::uniform(rng, -0.3, 0.3), 1.0).normalized();
    const double r = testing::uniform(rng, 0.01, 0.2);
    double prev = std::numeric_limits<double>::infinity();
    for (double d = 3 * r / dir.z() + 0.01; d < 40 * r; d *= 1.3) {
      const BoundingBox b = sphere_bbox(dir * d, r, k);
      const double area = b.width() * b.height();
      CHECK(area < prev);
      prev = area;
    }
  }
}

TEST_CASE("depth from box examples") {
  bool near = true;
  const double d = depth_from_bbox(square_box(320, 240, 100), 1.0, k, &near);
  CHECK(std::abs(d - 5.0) / 5.0 < 0.02);
  CHECK_FALSE(near);
  CHECK(depth_from_bbox_small_angle(square_box(320, 240, 100), 1.0, k) == doctest::Approx(5.0));

  const double close = depth_from_bbox(square_box(320, 240, 500), 1.0, k, &near);
  CHECK(near);
  CHECK(depth_from_bbox_small_angle(square_box(320, 240, 500), 1.0, k) == doctest::Approx(1.0));
  // The exact inversion of a 500 px box is 0.5 / sin(atan(0.5)).
  CHECK(close == doctest::Approx(0.5 / std::sin(std::atan(0.5))).epsilon(1e-12));

  const double d1 = depth_from_bbox(square_box(320, 240, 80), 0.5, k);
  const double d2 = depth_from_bbox(square_box(320, 240, 80), 1.0, k);
  CHECK(d2 == doctest::Approx(2.0 * d1).epsilon(1e-12));
  CHECK(depth_from_bbox_small_angle(square_box(320, 240, 80), 1.0, k) ==
        doctest::Approx(2.0 * depth_from_bbox_small_angle(square_box(320, 240, 80), 0.5, k)));
  CHECK_THROWS_AS(depth_from_bbox(BoundingBox{10, 10, 10, 20}, 1.0, k), Error);
}

TEST_CASE("box size rules") {
  const BoundingBox b{0, 0, 100, 25};
  CHECK(depth_from_bbox_small_angle(b, 1.0, k, BoxSizeRule::MaxSide) == doctest::Approx(5.0));
  CHECK(depth_from_bbox_small_angle(b, 1.0, k, BoxSizeRule::MinSide) == doctest::Approx(20.0));
  CHECK(depth_from_bbox_small_angle(b, 1.0, k, BoxSizeRule::GeometricMean) == doctest::Approx(10.0));
}

TEST_CASE("property: depth recovered from synthesized boxes") {
  testing::Rng rng(14);
  for (int i = 0; i < 2000; ++i) {
    const double r = testing::uniform(rng, 0.01, 0.1);
    const double depth = testing::uniform(rng, 3 * r, 10 * r);
    // Direction inside the frustum with the sphere fully in front of the camera.
    Vec3 dir;
    do dir = Vec3(testing::uniform(rng, -0.5, 0.5), testing::uniform(rng, -0.4, 0.4), 1.0).normalized();
    while (dir.z() * depth <= r * 1.01);
    const Vec3 c = dir * depth;
    const double got = depth_from_bbox(sphere_bbox(c, r, k), 2 * r, k);
    CHECK(std::abs(got - depth) / depth < (depth >= 5 * r ? 0.02 : 0.05));
  }
}

TEST_CASE("pose from detection") {
  const Rotation view = Rotation::rot_y(0.3);
  const Pose centered = pose_from_detection(square_box(320, 240, 100), view, 1.0, k);
  CHECK(std::abs(centered.translation().x()) < 1e-12);
  CHECK(std::abs(centered.translation().y()) < 1e-12);
  CHECK(std::abs(centered.translation().z() - 5.0) / 5.0 < 0.02);
  CHECK(centered.rotation() == view);
  CHECK(centered.source() == "object");
  CHECK(centered.target() == "camera");

  const Pose shifted = pose_from_detection(square_box(420, 240, 100), Rotation{}, 1.0, k);
  // Ray through the box center scaled to depth 5: (100/500·5, 0, 5).
  CHECK((shifted.translation() - Vec3(1.0, 0.0, 5.0)).norm() / 5.0 < 0.02);

  testing::Rng rng(15);
  for (int i = 0; i < 500; ++i) {
    const double r = 0.04;
    const Vec3 c(testing::uniform(rng, -0.2, 0.2), testing::uniform(rng, -0.15, 0.15), testing::uniform(rng, 0.3, 1.5));
    const Pose p = pose_from_detection(sphere_bbox(c, r, k), Rotation{}, 2 * r, k);
    CHECK((p.translation() - c).norm() < 0.02 * c.norm());
  }
}
