#pragma once

#include <cmath>
#include <random>

#include "blockflow/se3.hpp"

// Hand-rolled generators for property tests. Every generator draws from a
// caller-owned engine so a failing case is reproducible from its seed.

namespace testing {

using blockflow::Mat3;
using blockflow::Mat4;
using blockflow::Pose;
using blockflow::Rotation;
using blockflow::Vec3;

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline Vec3 uniform_vec(Rng& rng, double lo, double hi) { return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)}; }

inline Vec3 unit_vec(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  do v = Vec3(n(rng), n(rng), n(rng));
  while (v.norm() < 1e-6);
  return v.normalized();
}

// Uniform rotation from a normalized Gaussian 4-vector.
inline Rotation rotation(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  double w, x, y, z, s;
  do {
    w = n(rng), x = n(rng), y = n(rng), z = n(rng);
    s = std::sqrt(w * w + x * x + y * y + z * z);
  } while (s < 1e-6);
  return Rotation::from_quaternion(w / s, x / s, y / s, z / s);
}

inline Pose pose(Rng& rng, const std::string& src, const std::string& dst, double extent = 1.0) {
  return Pose(rotation(rng), uniform_vec(rng, -extent, extent), {src, dst});
}

// 4x4 homogeneous matrix built directly from the rotation matrix; used as an
// oracle independent of the library's composition code.
inline Mat4 homogeneous(const Mat3& r, const Vec3& t) {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = r;
  m.topRightCorner<3, 1>() = t;
  return m;
}

inline Mat4 homogeneous(const Pose& p) { return homogeneous(p.rotation().matrix(), p.translation()); }

inline double max_abs_diff(const Mat4& a, const Mat4& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace testing
