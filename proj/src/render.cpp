#include "blockflow/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "blockflow/json_io.hpp"

namespace blockflow {

namespace {

// Geometry closer than this to the camera plane is clipped.
constexpr double kNearPlane = 1e-3;
// Sub-pixel precision of the polygon rasterizer.
constexpr double kSubpixel = 256.0;

}  // namespace

Image Image::blank(int width, int height, Rgb fill) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  Image img;
  img.width = width;
  img.height = height;
  img.pixels.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
    img.pixels[i] = fill[0];
    img.pixels[i + 1] = fill[1];
    img.pixels[i + 2] = fill[2];
  }
  return img;
}

Rgb Image::at(int x, int y) const {
  if (!contains(x, y)) throw Error(ErrorCode::InvalidArgument, "pixel outside the image");
  const std::size_t i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
  return {pixels[i], pixels[i + 1], pixels[i + 2]};
}

void Image::set(int x, int y, Rgb c) {
  if (!contains(x, y)) return;
  const std::size_t i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
  pixels[i] = c[0];
  pixels[i + 1] = c[1];
  pixels[i + 2] = c[2];
}

Rgb color_for(ColorTag tag) {
  switch (tag) {
    case ColorTag::Blue: return {40, 90, 230};
    case ColorTag::Red: return {220, 40, 40};
    case ColorTag::Yellow: return {235, 200, 30};
    case ColorTag::Other: return {200, 200, 200};
  }
  return {200, 200, 200};
}

std::vector<WireBox> wire_boxes(const Scene& scene, const Pose& world_to_camera) {
  std::vector<WireBox> out;
  for (const Block& b : scene.blocks) {
    auto it = scene.world_poses.find(b.id);
    if (it == scene.world_poses.end()) continue;
    out.push_back({b.half_extents, compose(world_to_camera, it->second), color_for(b.color), false});
  }
  return out;
}

std::vector<WireBox> wire_boxes(const Scene& scene, const Trajectories& trajectories, int frame) {
  std::vector<WireBox> out;
  for (const Block& b : scene.blocks) {
    auto it = trajectories.find(b.id);
    if (it == trajectories.end() || !it->second.covers(frame)) continue;
    const TrackedEntry& e = it->second.at(frame);
    out.push_back({b.half_extents, e.pose, color_for(b.color), e.provenance.kind == ProvenanceKind::AnchorInferred});
  }
  return out;
}

void draw_line(Image& img, int x0, int y0, int x1, int y1, Rgb color, bool dashed) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (int step = 0;; ++step) {
    if ((!dashed || step % 10 < 6) && img.contains(x0, y0)) img.set(x0, y0, color);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

namespace {

// Liang-Barsky clip of a 2D segment to [lo, hi] on both axes.
bool clip_segment(Vec2& a, Vec2& b, const Vec2& lo, const Vec2& hi) {
  const Vec2 d = b - a;
  double t0 = 0.0, t1 = 1.0;
  const double p[4] = {-d.x(), d.x(), -d.y(), d.y()};
  const double q[4] = {a.x() - lo.x(), hi.x() - a.x(), a.y() - lo.y(), hi.y() - a.y()};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double t = q[i] / p[i];
    if (p[i] < 0.0) t0 = std::max(t0, t);
    else t1 = std::min(t1, t);
    if (t0 > t1) return false;
  }
  const Vec2 a0 = a;
  a = a0 + t0 * d;
  b = a0 + t1 * d;
  return true;
}

void draw_edge(Image& img, Vec3 a, Vec3 b, const CameraIntrinsics& k, Rgb color, bool dashed) {
  if (a.z() < kNearPlane && b.z() < kNearPlane) return;
  if (a.z() < kNearPlane) a = a + (kNearPlane - a.z()) / (b.z() - a.z()) * (b - a);
  if (b.z() < kNearPlane) b = b + (kNearPlane - b.z()) / (a.z() - b.z()) * (a - b);
  Vec2 pa = project_camera_point(a, k);
  Vec2 pb = project_camera_point(b, k);
  if (!clip_segment(pa, pb, {-0.5, -0.5}, {img.width - 0.5, img.height - 0.5})) return;
  draw_line(img, static_cast<int>(std::lround(pa.x())), static_cast<int>(std::lround(pa.y())),
            static_cast<int>(std::lround(pb.x())), static_cast<int>(std::lround(pb.y())), color, dashed);
}

}  // namespace

Image render_wireframe(const std::vector<WireBox>& boxes, const CameraIntrinsics& k, Image base) {
  k.validate();
  // Corner index bits: x = bit 0, y = bit 1, z = bit 2.
  static constexpr std::array<std::array<int, 2>, 12> kEdges{
      {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {0, 2}, {1, 3}, {4, 6}, {5, 7}, {0, 4}, {1, 5}, {2, 6}, {3, 7}}};
  for (const WireBox& box : boxes) {
    std::array<Vec3, 8> corners;
    for (int c = 0; c < 8; ++c) {
      const Vec3 local((c & 1 ? 1 : -1) * box.half_extents.x(), (c & 2 ? 1 : -1) * box.half_extents.y(),
                       (c & 4 ? 1 : -1) * box.half_extents.z());
      corners[static_cast<std::size_t>(c)] = box.object_to_camera.apply(local);
    }
    for (const auto& e : kEdges) {
      draw_edge(base, corners[static_cast<std::size_t>(e[0])], corners[static_cast<std::size_t>(e[1])], k, box.color,
                box.dashed);
    }
  }
  return base;
}

Rgb speed_color(double t) {
  static constexpr std::array<std::array<double, 3>, 5> kStops{
      {{0, 0, 130}, {0, 120, 255}, {0, 200, 120}, {255, 210, 0}, {220, 30, 30}}};
  if (!(t > 0.0)) t = 0.0;
  if (t > 1.0) t = 1.0;
  const double x = t * 4.0;
  const int i = std::min(static_cast<int>(x), 3);
  const double f = x - i;
  Rgb out;
  for (int c = 0; c < 3; ++c) {
    const double v = kStops[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] * (1.0 - f) +
                     kStops[static_cast<std::size_t>(i + 1)][static_cast<std::size_t>(c)] * f;
    out[static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(std::lround(v));
  }
  return out;
}

namespace {

struct FixedPoint {
  std::int64_t x, y;
};

// Signed double area of (a, b, p); exact in 64-bit integers.
std::int64_t edge(const FixedPoint& a, const FixedPoint& b, const FixedPoint& p) {
  return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
}

// For positive winding the interior lies left of each directed edge (y
// down), so a top edge runs +x and a left edge runs -y. A shared edge
// appears reversed in the neighbouring quad, so exactly one side owns it.
bool is_top_left(const FixedPoint& a, const FixedPoint& b) {
  return (a.y == b.y && b.x > a.x) || (b.y < a.y);
}

// Fills pixels whose centers lie inside the convex quad. Shared edges
// between neighbouring quads are owned by exactly one of them.
template <typename Fn>
void fill_convex_quad(std::array<FixedPoint, 4> v, int width, int height, Fn&& shade) {
  std::int64_t area = 0;
  for (int i = 0; i < 4; ++i) {
    const FixedPoint& a = v[static_cast<std::size_t>(i)];
    const FixedPoint& b = v[static_cast<std::size_t>((i + 1) % 4)];
    area += a.x * b.y - b.x * a.y;
  }
  if (area == 0) return;
  if (area < 0) std::swap(v[1], v[3]);

  std::int64_t min_x = v[0].x, max_x = v[0].x, min_y = v[0].y, max_y = v[0].y;
  for (const auto& p : v) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const auto sp = static_cast<std::int64_t>(kSubpixel);
  const int x0 = static_cast<int>(std::max<std::int64_t>(0, (min_x + sp - 1) / sp - 1));
  const int x1 = static_cast<int>(std::min<std::int64_t>(width - 1, max_x / sp + 1));
  const int y0 = static_cast<int>(std::max<std::int64_t>(0, (min_y + sp - 1) / sp - 1));
  const int y1 = static_cast<int>(std::min<std::int64_t>(height - 1, max_y / sp + 1));

  std::array<bool, 4> top_left;
  for (int i = 0; i < 4; ++i) top_left[static_cast<std::size_t>(i)] = is_top_left(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>((i + 1) % 4)]);

  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const FixedPoint p{static_cast<std::int64_t>(x) * sp, static_cast<std::int64_t>(y) * sp};
      bool inside = true;
      for (int i = 0; i < 4 && inside; ++i) {
        const std::int64_t e = edge(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>((i + 1) % 4)], p);
        inside = e > 0 || (e == 0 && top_left[static_cast<std::size_t>(i)]);
      }
      if (inside) shade(x, y);
    }
  }
}

}  // namespace

Image render_wind_overlay(const WindField& field, const GridSpec& spec, const Pose& world_to_camera,
                          const CameraIntrinsics& k, Image base, double alpha) {
  k.validate();
  if (field.nx != spec.nx || field.ny != spec.ny) throw Error(ErrorCode::InvalidArgument, "field does not match the grid");
  alpha = std::clamp(alpha, 0.0, 1.0);
  if (alpha == 0.0) return base;

  double max_speed = 0.0;
  for (std::size_t c = 0; c < spec.cells(); ++c) {
    if (!field.solid[c]) max_speed = std::max(max_speed, std::hypot(field.ux[c], field.uy[c]));
  }

  // Camera-frame grid nodes, shared by neighbouring cells so their edges
  // snap to identical fixed-point vertices.
  const int nodes_x = spec.nx + 1;
  std::vector<Vec3> cam(static_cast<std::size_t>(nodes_x) * static_cast<std::size_t>(spec.ny + 1));
  std::vector<FixedPoint> px(cam.size());
  const double limit = 1e6;  // keeps fixed-point coordinates far from overflow
  for (int j = 0; j <= spec.ny; ++j) {
    for (int i = 0; i <= spec.nx; ++i) {
      const std::size_t n = static_cast<std::size_t>(j) * static_cast<std::size_t>(nodes_x) + static_cast<std::size_t>(i);
      cam[n] = world_to_camera.apply(Vec3(spec.origin_x + i * spec.dx, spec.origin_y + j * spec.dx, spec.slice_height));
      if (cam[n].z() >= kNearPlane) {
        const Vec2 p = project_camera_point(cam[n], k);
        px[n] = {std::llround(std::clamp(p.x(), -limit, limit) * kSubpixel), std::llround(std::clamp(p.y(), -limit, limit) * kSubpixel)};
      }
    }
  }

  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      const std::size_t c = spec.index(i, j);
      if (field.solid[c]) continue;
      const std::array<std::size_t, 4> ids{
          static_cast<std::size_t>(j) * static_cast<std::size_t>(nodes_x) + static_cast<std::size_t>(i),
          static_cast<std::size_t>(j) * static_cast<std::size_t>(nodes_x) + static_cast<std::size_t>(i + 1),
          static_cast<std::size_t>(j + 1) * static_cast<std::size_t>(nodes_x) + static_cast<std::size_t>(i + 1),
          static_cast<std::size_t>(j + 1) * static_cast<std::size_t>(nodes_x) + static_cast<std::size_t>(i)};
      if (std::any_of(ids.begin(), ids.end(), [&](std::size_t n) { return cam[n].z() < kNearPlane; })) continue;
      const double speed = std::hypot(field.ux[c], field.uy[c]);
      const Rgb color = speed_color(max_speed > 0.0 ? speed / max_speed : 0.0);
      fill_convex_quad({px[ids[0]], px[ids[1]], px[ids[2]], px[ids[3]]}, base.width, base.height, [&](int x, int y) {
        const Rgb under = base.at(x, y);
        Rgb out;
        for (std::size_t ch = 0; ch < 3; ++ch) {
          out[ch] = static_cast<std::uint8_t>(std::lround((1.0 - alpha) * under[ch] + alpha * color[ch]));
        }
        base.set(x, y, out);
      });
    }
  }
  return base;
}

Image render_wind_map(const WindField& field, int scale) {
  if (scale < 1) throw Error(ErrorCode::InvalidArgument, "scale must be positive");
  Image img = Image::blank(field.nx * scale, field.ny * scale);
  double max_speed = 0.0;
  for (std::size_t c = 0; c < field.ux.size(); ++c) {
    if (!field.solid[c]) max_speed = std::max(max_speed, std::hypot(field.ux[c], field.uy[c]));
  }
  for (int j = 0; j < field.ny; ++j) {
    for (int i = 0; i < field.nx; ++i) {
      const std::size_t c = static_cast<std::size_t>(j) * static_cast<std::size_t>(field.nx) + static_cast<std::size_t>(i);
      const Rgb color = field.solid[c] ? Rgb{60, 60, 60}
                                       : speed_color(max_speed > 0.0 ? std::hypot(field.ux[c], field.uy[c]) / max_speed : 0.0);
      const int y0 = (field.ny - 1 - j) * scale;
      for (int y = y0; y < y0 + scale; ++y) {
        for (int x = i * scale; x < (i + 1) * scale; ++x) img.set(x, y, color);
      }
    }
  }
  return img;
}

std::string encode_ppm(const Image& img) {
  if (img.width <= 0 || img.height <= 0 ||
      img.pixels.size() != static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height) * 3) {
    throw Error(ErrorCode::InvalidArgument, "image buffer does not match its dimensions");
  }
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  return out;
}

Image decode_ppm(const std::string& bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&] {
    skip_space();
    std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw Error(ErrorCode::ParseError, "PPM: expected a number at byte " + std::to_string(start));
    return std::stoi(bytes.substr(start, pos - start));
  };
  if (bytes.compare(0, 2, "P6") != 0) throw Error(ErrorCode::ParseError, "PPM: not a P6 file");
  pos = 2;
  Image img;
  img.width = read_int();
  img.height = read_int();
  const int maxval = read_int();
  if (maxval != 255) throw Error(ErrorCode::ParseError, "PPM: only 8-bit images are supported");
  if (img.width <= 0 || img.height <= 0) throw Error(ErrorCode::ParseError, "PPM: bad dimensions");
  ++pos;  // single whitespace byte before the raster
  const std::size_t n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height) * 3;
  if (bytes.size() < pos + n) throw Error(ErrorCode::ParseError, "PPM: truncated raster");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return img;
}

void write_image(const Image& img, const std::filesystem::path& path) { write_text_file(path, encode_ppm(img)); }

Image read_image(const std::filesystem::path& path) { return decode_ppm(read_text_file(path)); }

std::string frame_filename(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%05d.ppm", index);
  return buf;
}

}  // namespace blockflow
