#include "blockflow/se3.hpp"

#include <algorithm>
#include <cmath>

namespace blockflow {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FrameMismatch: return "FrameMismatch";
    case ErrorCode::InvalidRotation: return "InvalidRotation";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::SphereIntersectsImagePlane: return "SphereIntersectsImagePlane";
    case ErrorCode::EmptyBox: return "EmptyBox";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::DegenerateCloud: return "DegenerateCloud";
    case ErrorCode::DegenerateAxes: return "DegenerateAxes";
    case ErrorCode::NoObservationsEver: return "NoObservationsEver";
    case ErrorCode::NoVisibleAnchor: return "NoVisibleAnchor";
    case ErrorCode::EmptyCandidates: return "EmptyCandidates";
    case ErrorCode::PlacementFailure: return "PlacementFailure";
    case ErrorCode::FullyBlocked: return "FullyBlocked";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Rotation::Rotation(const Eigen::Quaterniond& q) : q_(q.normalized()) {}

Rotation Rotation::from_quaternion(double w, double x, double y, double z) {
  return from_quaternion(Eigen::Quaterniond(w, x, y, z));
}

Rotation Rotation::from_quaternion(const Eigen::Quaterniond& q) {
  const double n = q.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > kRepairTolerance) {
    throw Error(ErrorCode::InvalidRotation, "quaternion norm " + std::to_string(n) + " is not 1");
  }
  return Rotation(q);
}

Rotation Rotation::from_matrix(const Mat3& m) {
  if (!m.allFinite()) throw Error(ErrorCode::InvalidRotation, "non-finite matrix");
  const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  const double det = m.determinant();
  if (ortho > kRepairTolerance || std::abs(det - 1.0) > kRepairTolerance) {
    throw Error(ErrorCode::InvalidRotation, "matrix is not a proper rotation (|RᵀR-I|=" + std::to_string(ortho) +
                                                ", det=" + std::to_string(det) + ")");
  }
  // Project onto SO(3) before conversion so small drift does not leak into q.
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  return Rotation(Eigen::Quaterniond(r));
}

Rotation Rotation::from_row_major(const std::array<double, 9>& m) {
  Mat3 r;
  r << m[0], m[1], m[2], m[3], m[4], m[5], m[6], m[7], m[8];
  return from_matrix(r);
}

Rotation Rotation::from_axis_angle(const Vec3& axis, double angle_rad) {
  const double n = axis.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw Error(ErrorCode::InvalidArgument, "rotation axis must be nonzero");
  return Rotation(Eigen::Quaterniond(Eigen::AngleAxisd(angle_rad, axis / n)));
}

std::array<double, 9> Rotation::row_major() const {
  const Mat3 m = matrix();
  return {m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1), m(1, 2), m(2, 0), m(2, 1), m(2, 2)};
}

Rotation operator*(const Rotation& a, const Rotation& b) { return Rotation(a.q_ * b.q_); }

bool operator==(const Rotation& a, const Rotation& b) {
  const auto& p = a.q_;
  const auto& q = b.q_;
  const bool same = p.w() == q.w() && p.x() == q.x() && p.y() == q.y() && p.z() == q.z();
  const bool negated = p.w() == -q.w() && p.x() == -q.x() && p.y() == -q.y() && p.z() == -q.z();
  return same || negated;
}

double rotation_angle_between(const Rotation& a, const Rotation& b) {
  // Half-angle form 2·atan2(|v|, |w|) of the relative quaternion; unlike
  // arccos((tr-1)/2) it stays well conditioned near 0 and π.
  const Eigen::Quaterniond rel = a.quaternion().conjugate() * b.quaternion();
  const double v = rel.vec().norm();
  const double w = std::abs(rel.w());
  return std::clamp(2.0 * std::atan2(v, w), 0.0, M_PI);
}

Mat4 Pose::homogeneous() const {
  Mat4 h = Mat4::Identity();
  h.topLeftCorner<3, 3>() = rotation_.matrix();
  h.topRightCorner<3, 1>() = translation_;
  return h;
}

Pose compose(const Pose& a, const Pose& b) {
  if (a.source() != b.target()) {
    throw Error(ErrorCode::FrameMismatch, "cannot compose (" + a.source() + "->" + a.target() + ") after (" +
                                              b.source() + "->" + b.target() + ")");
  }
  return Pose(a.rotation() * b.rotation(), a.rotation().rotate(b.translation()) + a.translation(),
              {b.source(), a.target()});
}

Pose inverse(const Pose& p) {
  const Rotation rt = p.rotation().inverse();
  return Pose(rt, -rt.rotate(p.translation()), {p.target(), p.source()});
}

Pose anchor_transfer(const Pose& anchor_at_0, const Pose& anchor_at_i, const Pose& target_at_0) {
  if (anchor_at_0.frame() != anchor_at_i.frame()) {
    throw Error(ErrorCode::FrameMismatch, "anchor poses carry different frames");
  }
  if (target_at_0.target() != anchor_at_0.target()) {
    throw Error(ErrorCode::FrameMismatch, "anchor and target are expressed in different frames");
  }
  const Pose target_in_anchor = compose(inverse(anchor_at_0), target_at_0);
  return compose(anchor_at_i, target_in_anchor);
}

PoseDelta pose_delta(const Pose& a, const Pose& b) {
  return {rotation_angle_between(a.rotation(), b.rotation()), (a.translation() - b.translation()).norm()};
}

}  // namespace blockflow
