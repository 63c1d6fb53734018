#include <doctest.h>

#include "blockflow/json_io.hpp"
#include "blockflow/se3.hpp"
#include "support.hpp"

using namespace blockflow;

namespace {

Pose rz(double deg, const Vec3& t, const std::string& src = "a", const std::string& dst = "b") {
  return Pose(Rotation::rot_z(deg * M_PI / 180.0), t, {src, dst});
}

void check_pose_near(const Pose& a, const Pose& b, double tol) {
  CHECK(testing::max_abs_diff(testing::homogeneous(a), testing::homogeneous(b)) < tol);
}

}  // namespace

TEST_CASE("compose with identity returns the pose") {
  testing::Rng rng(1);
  const Pose p = testing::pose(rng, "obj", "cam");
  const Pose out = compose(Pose::identity("cam"), p);
  CHECK(out == p);
  CHECK(compose(p, Pose::identity("obj")) == p);
}

TEST_CASE("compose quarter turns matches the homogeneous product") {
  const Pose a = rz(90, {1, 0, 0}, "b", "c");
  const Pose b = rz(90, {0, 0, 0}, "a", "b");
  const Pose got = compose(a, b);
  // Hand product: Rz(90)·Rz(90) = Rz(180); t = Rz(90)·0 + (1,0,0).
  Mat3 r180;
  r180 << -1, 0, 0, 0, -1, 0, 0, 0, 1;
  CHECK(testing::max_abs_diff(testing::homogeneous(got), testing::homogeneous(r180, Vec3(1, 0, 0))) < 1e-15);
  CHECK(testing::max_abs_diff(testing::homogeneous(got), testing::homogeneous(a) * testing::homogeneous(b)) < 1e-15);
  CHECK(got.source() == "a");
  CHECK(got.target() == "c");
}

TEST_CASE("compose rejects mismatched frames") {
  const Pose a = rz(10, {0, 0, 0}, "x", "y");
  const Pose b = rz(10, {0, 0, 0}, "p", "q");
  CHECK_THROWS_AS(compose(a, b), Error);
  try {
    compose(a, b);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FrameMismatch);
  }
}

TEST_CASE("inverse examples") {
  CHECK(inverse(Pose::identity("w")) == Pose::identity("w"));
  const Pose inv = inverse(rz(90, {1, 2, 3}));
  // Homogeneous-matrix inversion oracle.
  const Mat4 oracle = testing::homogeneous(rz(90, {1, 2, 3})).inverse();
  CHECK(testing::max_abs_diff(testing::homogeneous(inv), oracle) < 1e-15);
  check_pose_near(inv, rz(-90, {-2, 1, -3}), 1e-15);
  CHECK(inv.source() == "b");
  CHECK(inv.target() == "a");
}

TEST_CASE("property: compose with inverse is identity and inverse is an involution") {
  testing::Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const Pose p = testing::pose(rng, "s", "t", 5.0);
    const Mat4 id = Mat4::Identity();
    CHECK(testing::max_abs_diff(testing::homogeneous(compose(p, inverse(p))), id) < 1e-12);
    CHECK(testing::max_abs_diff(testing::homogeneous(compose(inverse(p), p)), id) < 1e-12);
    check_pose_near(inverse(inverse(p)), p, 1e-12);
  }
}

TEST_CASE("property: compose agrees with homogeneous matrix products") {
  testing::Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const Pose a = testing::pose(rng, "b", "c", 3.0);
    const Pose b = testing::pose(rng, "a", "b", 3.0);
    CHECK(testing::max_abs_diff(testing::homogeneous(compose(a, b)), testing::homogeneous(a) * testing::homogeneous(b)) <
          1e-12);
  }
}

TEST_CASE("anchor transfer") {
  testing::Rng rng(4);
  SUBCASE("static camera leaves the target unchanged") {
    const Pose a0 = testing::pose(rng, "A", "cam");
    const Pose b0 = testing::pose(rng, "B", "cam");
    check_pose_near(anchor_transfer(a0, a0, b0), b0, 1e-12);
  }
  SUBCASE("pure translation of the anchor translates the target") {
    const Vec3 delta(0.3, -0.2, 0.1);
    const Pose a0(Rotation{}, Vec3(1, 2, 3), {"A", "cam"});
    const Pose ai(Rotation{}, Vec3(1, 2, 3) + delta, {"A", "cam"});
    const Pose b0(Rotation{}, Vec3(-1, 0, 4), {"B", "cam"});
    const Pose bi = anchor_transfer(a0, ai, b0);
    CHECK((bi.translation() - (b0.translation() + delta)).norm() < 1e-15);
    CHECK(bi.rotation() == Rotation{});
  }
  SUBCASE("property: random rigid scenes are reconstructed exactly") {
    for (int i = 0; i < 1000; ++i) {
      const Pose c0 = testing::pose(rng, "world", "cam", 2.0);
      const Pose ci = testing::pose(rng, "world", "cam", 2.0);
      const Pose wa = testing::pose(rng, "A", "world", 0.5);
      const Pose wb = testing::pose(rng, "B", "world", 0.5);
      const Pose got = anchor_transfer(compose(c0, wa), compose(ci, wa), compose(c0, wb));
      check_pose_near(got, compose(ci, wb), 1e-12);
      CHECK(got.source() == "B");
      CHECK(got.target() == "cam");
    }
  }
  SUBCASE("frame checks") {
    const Pose a0 = testing::pose(rng, "A", "cam");
    const Pose b0 = testing::pose(rng, "B", "other");
    CHECK_THROWS_AS(anchor_transfer(a0, a0, b0), Error);
    CHECK_THROWS_AS(anchor_transfer(a0, testing::pose(rng, "C", "cam"), testing::pose(rng, "B", "cam")), Error);
  }
}

TEST_CASE("rotation angle examples") {
  testing::Rng rng(5);
  const Rotation r = testing::rotation(rng);
  CHECK(rotation_angle_between(r, r) < 1e-15);
  CHECK(rotation_angle_between(Rotation{}, Rotation::rot_x(M_PI)) == doctest::Approx(M_PI).epsilon(1e-15));
  const double got = rotation_angle_between(Rotation::rot_z(30 * M_PI / 180), Rotation::rot_z(75 * M_PI / 180));
  CHECK(std::abs(got - 45.0 * M_PI / 180.0) < 1e-12);
}

TEST_CASE("rotation angle is accurate near 0 and pi") {
  for (double eps : {1e-9, 1e-7, 1e-5}) {
    CHECK(std::abs(rotation_angle_between(Rotation{}, Rotation::rot_y(eps)) - eps) < 1e-15);
    CHECK(std::abs(rotation_angle_between(Rotation{}, Rotation::rot_y(M_PI - eps)) - (M_PI - eps)) < 1e-12);
  }
}

TEST_CASE("property: rotation angle is a metric") {
  testing::Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    const Rotation a = testing::rotation(rng), b = testing::rotation(rng), c = testing::rotation(rng);
    const double ab = rotation_angle_between(a, b);
    CHECK(ab == rotation_angle_between(b, a));
    CHECK(ab > 0.0);
    CHECK(ab <= M_PI);
    CHECK(rotation_angle_between(a, c) <= ab + rotation_angle_between(b, c) + 1e-9);
  }
}

TEST_CASE("property: quaternion to matrix round trip") {
  testing::Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Rotation r = testing::rotation(rng);
    CHECK(rotation_angle_between(r, Rotation::from_matrix(r.matrix())) < 1e-9);
    CHECK(rotation_angle_between(r, Rotation::from_row_major(r.row_major())) < 1e-9);
  }
}

TEST_CASE("rotation repair tolerance") {
  const double off = 1.0 + 5e-7;
  CHECK_NOTHROW(Rotation::from_quaternion(off, 0, 0, 0));
  CHECK(Rotation::from_quaternion(off, 0, 0, 0).quaternion().norm() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(Rotation::from_quaternion(1.001, 0, 0, 0), Error);
  Mat3 skew = Mat3::Identity();
  skew(0, 1) = 1e-3;
  CHECK_THROWS_AS(Rotation::from_matrix(skew), Error);
  Mat3 mirror = Mat3::Identity();
  mirror(2, 2) = -1;
  CHECK_THROWS_AS(Rotation::from_matrix(mirror), Error);
}

TEST_CASE("q and -q are the same rotation") {
  CHECK(Rotation::from_quaternion(0.5, 0.5, 0.5, 0.5) == Rotation::from_quaternion(-0.5, -0.5, -0.5, -0.5));
}

TEST_CASE("pose JSON round trip") {
  testing::Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const Pose p = testing::pose(rng, "blue", "world");
    const json j = to_json(p);
    CHECK(j.at("q").size() == 4);
    CHECK(j.at("t").size() == 3);
    CHECK(j.at("src") == "blue");
    CHECK(j.at("dst") == "world");
    const Pose back = pose_from_json(json::parse(j.dump()));
    check_pose_near(back, p, 1e-15);
  }
  CHECK_THROWS_AS(pose_from_json(json{{"q", {2, 0, 0, 0}}, {"t", {0, 0, 0}}, {"src", "a"}, {"dst", "b"}}), Error);
  CHECK_THROWS_AS(pose_from_json(json{{"q", {1, 0, 0}}}), Error);
}
