#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "blockflow/camera.hpp"
#include "blockflow/point_cloud.hpp"
#include "blockflow/scene.hpp"
#include "blockflow/wind.hpp"

// Software rendering of wireframes and wind overlays into 8-bit RGB images.
// Pixel (u, v) is centered on the continuous image coordinate (u, v) produced
// by the projection functions.

namespace blockflow {

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // RGB, row-major

  static Image blank(int width, int height, Rgb fill = {0, 0, 0});
  /// Throws InvalidArgument outside the image.
  Rgb at(int x, int y) const;
  /// Writes outside the image are ignored.
  void set(int x, int y, Rgb c);
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  friend bool operator==(const Image&, const Image&) = default;
};

Rgb color_for(ColorTag tag);

/// One box to draw, already expressed in the camera frame.
struct WireBox {
  Vec3 half_extents;
  Pose object_to_camera;
  Rgb color{255, 255, 255};
  bool dashed = false;
};

/// Boxes of a scene's world poses seen through world_to_camera.
std::vector<WireBox> wire_boxes(const Scene& scene, const Pose& world_to_camera);
/// Boxes of the trajectories that cover `frame`; anchor-inferred entries are
/// dashed.
std::vector<WireBox> wire_boxes(const Scene& scene, const Trajectories& trajectories, int frame);

/// Draws the 12 edges of every box. Edges are clipped at a near plane in
/// front of the camera and at the image border; nothing else can fail.
Image render_wireframe(const std::vector<WireBox>& boxes, const CameraIntrinsics& k, Image base);

/// Integer midpoint line between two pixels; dashed lines draw 6 pixels on,
/// 4 off.
void draw_line(Image& img, int x0, int y0, int x1, int y1, Rgb color, bool dashed = false);

/// Five-stop speed color map over t in [0, 1]: navy, blue, green, yellow, red.
Rgb speed_color(double t);

/// Fills every fluid cell's world quad on the slice plane with its speed
/// color (0 to the field's max speed) blended by alpha. Cells with a corner
/// closer than the near plane are skipped; solid cells are never drawn.
Image render_wind_overlay(const WindField& field, const GridSpec& spec, const Pose& world_to_camera,
                          const CameraIntrinsics& k, Image base, double alpha);

/// Top-down speed map, `scale` pixels per cell, row 0 of the image at the
/// grid's top (largest y). Solid cells are dark gray.
Image render_wind_map(const WindField& field, int scale = 4);

/// P6 encoding: "P6\n<w> <h>\n255\n" followed by raw RGB bytes.
std::string encode_ppm(const Image& img);
Image decode_ppm(const std::string& bytes);
void write_image(const Image& img, const std::filesystem::path& path);
Image read_image(const std::filesystem::path& path);

/// frame_00042.ppm
std::string frame_filename(int index);

}  // namespace blockflow
