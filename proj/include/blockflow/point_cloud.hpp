#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "blockflow/se3.hpp"

namespace blockflow {

using Rgb = std::array<std::uint8_t, 3>;

struct PointCloud {
  std::vector<Vec3> points;
  /// Empty, or one color per point.
  std::vector<Rgb> colors;

  std::size_t size() const { return points.size(); }
  bool has_colors() const { return !colors.empty(); }
};

struct AxisBox {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
};

struct NormalizationParams {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  double scale = 1.0;  // 1 / radius
};

enum class PlyEncoding { Ascii, BinaryLittleEndian };

/// Reads the vertex element of an ASCII or binary little-endian PLY file.
/// Properties x, y, z are required; red, green, blue are picked up when all
/// three are present. Other properties and elements are skipped.
PointCloud load_cloud(const std::filesystem::path& path);
PointCloud parse_ply(const std::string& bytes);

void save_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                PlyEncoding encoding = PlyEncoding::BinaryLittleEndian);
std::string serialize_ply(const PointCloud& cloud, PlyEncoding encoding);

/// Points inside or on the boundary of `box`, order preserved.
PointCloud crop(const PointCloud& cloud, const AxisBox& box);

/// Maps the cloud into the unit sphere: center is the midpoint of the
/// axis-aligned bounds, radius the largest distance from that center.
std::pair<PointCloud, NormalizationParams> normalize(const PointCloud& cloud);

/// Right-handed object frame from hand-picked x and z directions; z is
/// Gram–Schmidt orthogonalized against x. Columns of the result are the
/// object axes expressed in cloud coordinates.
Rotation object_frame_from_axes(const Vec3& x_dir, const Vec3& z_dir);

}  // namespace blockflow
