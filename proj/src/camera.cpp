#include "blockflow/camera.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace blockflow {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "image size must be positive");
  if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
    throw Error(ErrorCode::InvalidArgument, "principal point outside the image");
  }
}

Vec2 project_camera_point(const Vec3& p_cam, const CameraIntrinsics& k) {
  if (!(p_cam.z() > kMinDepth)) {
    throw Error(ErrorCode::BehindCamera, "point at camera depth " + std::to_string(p_cam.z()));
  }
  return {k.fx * p_cam.x() / p_cam.z() + k.cx, k.fy * p_cam.y() / p_cam.z() + k.cy};
}

Vec2 project_point(const Vec3& p_world, const Pose& world_to_camera, const CameraIntrinsics& k) {
  return project_camera_point(world_to_camera.apply(p_world), k);
}

Vec3 back_project(const Vec2& px, const CameraIntrinsics& k) {
  return {(px.x() - k.cx) / k.fx, (px.y() - k.cy) / k.fy, 1.0};
}

namespace {

// Normalized image coordinates a with tangent plane {x = a·z}. The plane is
// tangent to the sphere when (c_t - a·c_z)² = r²(1 + a²); the two roots are
// the silhouette's extent along that axis.
std::pair<double, double> tangent_extent(double ct, double cz, double r) {
  const double denom = cz * cz - r * r;
  const double disc = r * std::sqrt(ct * ct + cz * cz - r * r);
  return {(ct * cz - disc) / denom, (ct * cz + disc) / denom};
}

}  // namespace

BoundingBox sphere_bbox(const Vec3& center_cam, double radius, const CameraIntrinsics& k) {
  if (radius < 0.0) throw Error(ErrorCode::InvalidArgument, "negative sphere radius");
  if (!(center_cam.z() > radius) || !(center_cam.z() > kMinDepth)) {
    throw Error(ErrorCode::SphereIntersectsImagePlane,
                "sphere center depth " + std::to_string(center_cam.z()) + " <= radius " + std::to_string(radius));
  }
  const auto [ax0, ax1] = tangent_extent(center_cam.x(), center_cam.z(), radius);
  const auto [ay0, ay1] = tangent_extent(center_cam.y(), center_cam.z(), radius);
  return {k.fx * ax0 + k.cx, k.fy * ay0 + k.cy, k.fx * ax1 + k.cx, k.fy * ay1 + k.cy};
}

Vec3 sphere_center_from_bbox(const BoundingBox& box, double sphere_diameter, const CameraIntrinsics& k) {
  if (box.empty()) throw Error(ErrorCode::EmptyBox, "bounding box has no area");
  if (!(sphere_diameter > 0.0)) throw Error(ErrorCode::InvalidArgument, "sphere diameter must be positive");
  const double r = 0.5 * sphere_diameter;

  // Each edge gives n·c = ±r for the unit normal n of its tangent plane,
  // signed so the sphere lies inside the box.
  Eigen::Matrix<double, 4, 3> a;
  Eigen::Vector4d b;
  const double u0 = (box.min_x - k.cx) / k.fx;
  const double u1 = (box.max_x - k.cx) / k.fx;
  const double v0 = (box.min_y - k.cy) / k.fy;
  const double v1 = (box.max_y - k.cy) / k.fy;
  auto row = [&](int i, const Vec3& normal, double side) {
    const Vec3 n = normal.normalized();
    a.row(i) = n.transpose();
    b(i) = side * r;
  };
  row(0, {1.0, 0.0, -u0}, 1.0);
  row(1, {1.0, 0.0, -u1}, -1.0);
  row(2, {0.0, 1.0, -v0}, 1.0);
  row(3, {0.0, 1.0, -v1}, -1.0);
  const Vec3 c = a.colPivHouseholderQr().solve(b);
  if (!(c.z() > kMinDepth)) throw Error(ErrorCode::EmptyBox, "box does not correspond to a sphere in front of the camera");
  return c;
}

double depth_from_bbox(const BoundingBox& box, double sphere_diameter, const CameraIntrinsics& k, bool* near_field) {
  const double depth = sphere_center_from_bbox(box, sphere_diameter, k).norm();
  if (near_field) *near_field = depth < 2.5 * sphere_diameter;
  return depth;
}

double depth_from_bbox_small_angle(const BoundingBox& box, double sphere_diameter, const CameraIntrinsics& k,
                                   BoxSizeRule rule) {
  if (box.empty()) throw Error(ErrorCode::EmptyBox, "bounding box has no area");
  if (!(sphere_diameter > 0.0)) throw Error(ErrorCode::InvalidArgument, "sphere diameter must be positive");
  double side = 0.0;
  switch (rule) {
    case BoxSizeRule::MaxSide: side = std::max(box.width(), box.height()); break;
    case BoxSizeRule::MinSide: side = std::min(box.width(), box.height()); break;
    case BoxSizeRule::GeometricMean: side = std::sqrt(box.width() * box.height()); break;
  }
  return k.mean_focal() * sphere_diameter / side;
}

Pose pose_from_detection(const BoundingBox& box, const Rotation& viewpoint_rotation, double sphere_diameter,
                         const CameraIntrinsics& k, const std::string& object_frame, const std::string& camera_frame) {
  return Pose(viewpoint_rotation, sphere_center_from_bbox(box, sphere_diameter, k), {object_frame, camera_frame});
}

}  // namespace blockflow
