#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <string>

#include "blockflow/error.hpp"

namespace blockflow {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Element of SO(3), stored as a unit quaternion.
///
/// Inputs that are off the manifold by at most kRepairTolerance are
/// re-normalized; anything further off raises InvalidRotation. q and -q are
/// the same rotation and compare equal.
class Rotation {
public:
  static constexpr double kRepairTolerance = 1e-6;

  Rotation() : q_(Eigen::Quaterniond::Identity()) {}

  static Rotation identity() { return {}; }
  /// (w, x, y, z), must be unit within kRepairTolerance.
  static Rotation from_quaternion(double w, double x, double y, double z);
  static Rotation from_quaternion(const Eigen::Quaterniond& q);
  /// Must satisfy RᵀR = I and det R = +1 within kRepairTolerance.
  static Rotation from_matrix(const Mat3& m);
  /// Row-major 3x3.
  static Rotation from_row_major(const std::array<double, 9>& m);
  static Rotation from_axis_angle(const Vec3& axis, double angle_rad);

  static Rotation rot_x(double angle_rad) { return from_axis_angle(Vec3::UnitX(), angle_rad); }
  static Rotation rot_y(double angle_rad) { return from_axis_angle(Vec3::UnitY(), angle_rad); }
  static Rotation rot_z(double angle_rad) { return from_axis_angle(Vec3::UnitZ(), angle_rad); }

  const Eigen::Quaterniond& quaternion() const { return q_; }
  /// Quaternion as (w, x, y, z).
  std::array<double, 4> wxyz() const { return {q_.w(), q_.x(), q_.y(), q_.z()}; }
  Mat3 matrix() const { return q_.toRotationMatrix(); }
  std::array<double, 9> row_major() const;

  Rotation inverse() const { return Rotation(q_.conjugate()); }
  Vec3 rotate(const Vec3& v) const { return q_ * v; }

  friend Rotation operator*(const Rotation& a, const Rotation& b);
  friend bool operator==(const Rotation& a, const Rotation& b);

private:
  explicit Rotation(const Eigen::Quaterniond& q);
  Eigen::Quaterniond q_;
};

/// Geodesic angle between two rotations in [0, π].
double rotation_angle_between(const Rotation& a, const Rotation& b);

/// Source and target coordinate frames of a transform; e.g. {"blue", "camera"}
/// maps points expressed in the blue block frame into the camera frame.
struct FrameTag {
  std::string source;
  std::string target;

  friend bool operator==(const FrameTag&, const FrameTag&) = default;
};

/// Rigid transform x_target = R·x_source + t.
class Pose {
public:
  Pose() = default;
  Pose(Rotation rotation, Vec3 translation, FrameTag frame)
      : rotation_(std::move(rotation)), translation_(std::move(translation)), frame_(std::move(frame)) {}

  static Pose identity(const std::string& frame) { return Pose({}, Vec3::Zero(), {frame, frame}); }

  const Rotation& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  const FrameTag& frame() const { return frame_; }
  const std::string& source() const { return frame_.source; }
  const std::string& target() const { return frame_.target; }

  Vec3 apply(const Vec3& p) const { return rotation_.rotate(p) + translation_; }
  Mat4 homogeneous() const;

  /// Same transform relabelled; use when the frame names change meaning
  /// (e.g. "camera" at different time steps), never to hide a mismatch.
  Pose with_frame(FrameTag frame) const { return Pose(rotation_, translation_, std::move(frame)); }

  friend bool operator==(const Pose& a, const Pose& b) {
    return a.frame_ == b.frame_ && a.rotation_ == b.rotation_ && a.translation_ == b.translation_;
  }

private:
  Rotation rotation_;
  Vec3 translation_ = Vec3::Zero();
  FrameTag frame_;
};

/// a ∘ b: applies b first, then a. Requires a.source == b.target.
Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);

/// Pose of a static target at frame i inferred from a static anchor seen at
/// reference frame 0 and at frame i:
///   T_target(i) = T_anchor(i) · T_anchor(0)⁻¹ · T_target(0)
/// The rotation part is R_anchor(i) · R_anchor(0)ᵀ · R_target(0).
Pose anchor_transfer(const Pose& anchor_at_0, const Pose& anchor_at_i, const Pose& target_at_0);

/// Rotation angle (radians) and translation distance between two poses.
struct PoseDelta {
  double rotation_rad = 0.0;
  double translation_m = 0.0;
};
PoseDelta pose_delta(const Pose& a, const Pose& b);

}  // namespace blockflow
