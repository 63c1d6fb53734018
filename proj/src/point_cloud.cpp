#include <cmath>

#include "blockflow/point_cloud.hpp"

namespace blockflow {

PointCloud crop(const PointCloud& cloud, const AxisBox& box) {
  if (!(box.min.array() < box.max.array()).all()) {
    throw Error(ErrorCode::InvalidArgument, "crop box min must be below max on every axis");
  }
  PointCloud out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    if ((p.array() >= box.min.array()).all() && (p.array() <= box.max.array()).all()) {
      out.points.push_back(p);
      if (cloud.has_colors()) out.colors.push_back(cloud.colors[i]);
    }
  }
  if (out.points.empty()) throw Error(ErrorCode::EmptyCloud, "no points inside the crop box");
  return out;
}

std::pair<PointCloud, NormalizationParams> normalize(const PointCloud& cloud) {
  if (cloud.points.empty()) throw Error(ErrorCode::EmptyCloud, "cannot normalize an empty cloud");
  Vec3 lo = cloud.points.front();
  Vec3 hi = lo;
  for (const Vec3& p : cloud.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  NormalizationParams params;
  params.center = 0.5 * (lo + hi);
  double radius = 0.0;
  for (const Vec3& p : cloud.points) radius = std::max(radius, (p - params.center).norm());
  if (!(radius > 0.0)) throw Error(ErrorCode::DegenerateCloud, "all points coincide");
  params.radius = radius;
  params.scale = 1.0 / radius;

  PointCloud out;
  out.colors = cloud.colors;
  out.points.reserve(cloud.size());
  // Divide rather than multiply by scale: keeps the farthest point at norm 1
  // to the last ulp.
  for (const Vec3& p : cloud.points) out.points.push_back((p - params.center) / radius);
  return {std::move(out), params};
}

Rotation object_frame_from_axes(const Vec3& x_dir, const Vec3& z_dir) {
  const double nx = x_dir.norm();
  const double nz = z_dir.norm();
  if (!(nx > 0.0) || !(nz > 0.0)) throw Error(ErrorCode::DegenerateAxes, "axis directions must be nonzero");
  const Vec3 x = x_dir / nx;
  const double cos_angle = x.dot(z_dir / nz);
  static const double kLimit = std::cos(5.0 * M_PI / 180.0);
  if (std::abs(cos_angle) >= kLimit) {
    throw Error(ErrorCode::DegenerateAxes, "x and z directions are within 5 degrees of parallel");
  }
  const Vec3 z = (z_dir / nz - cos_angle * x).normalized();
  const Vec3 y = z.cross(x);
  Mat3 m;
  m.col(0) = x;
  m.col(1) = y;
  m.col(2) = z;
  return Rotation::from_matrix(m);
}

}  // namespace blockflow
