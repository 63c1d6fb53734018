#pragma once

#include "blockflow/se3.hpp"

namespace blockflow {

struct CameraIntrinsics {
  double fx = 500.0;
  double fy = 500.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  /// Throws InvalidArgument when fx, fy <= 0 or the principal point lies
  /// outside the image.
  void validate() const;
  double mean_focal() const { return 0.5 * (fx + fy); }
};

struct BoundingBox {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  Vec2 center() const { return {0.5 * (min_x + max_x), 0.5 * (min_y + max_y)}; }
  bool empty() const { return !(max_x > min_x) || !(max_y > min_y); }
};

/// Minimum camera-frame depth accepted by projections.
inline constexpr double kMinDepth = 1e-6;

Vec2 project_camera_point(const Vec3& p_cam, const CameraIntrinsics& k);
Vec2 project_point(const Vec3& p_world, const Pose& world_to_camera, const CameraIntrinsics& k);
/// Unit-less ray (x/z, y/z, 1) through pixel (u, v).
Vec3 back_project(const Vec2& px, const CameraIntrinsics& k);

/// Exact pixel bounding box of a sphere's perspective silhouette. Each box
/// edge is the trace of a plane through the optical center tangent to the
/// sphere.
BoundingBox sphere_bbox(const Vec3& center_cam, double radius, const CameraIntrinsics& k);

/// Camera-frame center of a sphere of known diameter whose silhouette box is
/// `box`, recovered from the four tangent planes by least squares. Exact for
/// boxes produced by sphere_bbox.
Vec3 sphere_center_from_bbox(const BoundingBox& box, double sphere_diameter, const CameraIntrinsics& k);

/// Distance from the optical center to the sphere center. Uses the exact
/// tangent-plane inversion; in the small-angle limit this is f̄·d/s.
/// Sets `near_field` when the object is closer than 2.5 diameters, where
/// the small-angle form is off by more than 2%.
double depth_from_bbox(const BoundingBox& box, double sphere_diameter, const CameraIntrinsics& k,
                       bool* near_field = nullptr);

enum class BoxSizeRule { MaxSide, MinSide, GeometricMean };

/// Small-angle pinhole ratio depth = f̄ · d / s, with s picked by `rule`.
double depth_from_bbox_small_angle(const BoundingBox& box, double sphere_diameter, const CameraIntrinsics& k,
                                   BoxSizeRule rule = BoxSizeRule::MaxSide);

/// Initial object→camera pose from a detection: rotation from the viewpoint
/// match, translation from the recovered sphere center.
Pose pose_from_detection(const BoundingBox& box, const Rotation& viewpoint_rotation, double sphere_diameter,
                         const CameraIntrinsics& k, const std::string& object_frame = "object",
                         const std::string& camera_frame = "camera");

}  // namespace blockflow
