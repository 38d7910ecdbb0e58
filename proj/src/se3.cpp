#include "camtraj/se3.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace camtraj {

namespace {
constexpr double kDefectAccept = 1e-9;  // below this the matrix is used as-is
constexpr double kDefectReject = 1e-2;  // above this the matrix is rejected
}  // namespace

Rotation Rotation::from_matrix(const Mat3& m) {
  if (!m.allFinite()) throw geometry_error("rotation matrix has non-finite entries");
  const double defect = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (defect > kDefectReject || m.determinant() <= 0.0)
    throw geometry_error("matrix is too far from a proper rotation");
  if (defect <= kDefectAccept) return Rotation(m);

  // Re-orthonormalize: polar factor U V^T, with the usual sign fix so the
  // result stays a proper rotation.
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1.0;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return Rotation(r);
}

Rotation Rotation::from_quaternion(double w, double x, double y, double z) {
  const double norm = std::sqrt(w * w + x * x + y * y + z * z);
  if (!std::isfinite(norm) || norm < 1e-12)
    throw geometry_error("quaternion has (near-)zero norm");
  Eigen::Quaterniond q(w / norm, x / norm, y / norm, z / norm);
  return Rotation(q.toRotationMatrix());
}

Rotation Rotation::from_axis_angle(const Vec3& rotvec) {
  const double angle = rotvec.norm();
  if (angle == 0.0) return Rotation();
  return Rotation(Mat3(Eigen::AngleAxisd(angle, rotvec / angle).toRotationMatrix()));
}

Vec3 Rotation::axis_angle() const {
  const Eigen::AngleAxisd aa(m_);
  return aa.angle() * aa.axis();
}

Rotation rot_x(double angle) { return Rotation::from_axis_angle(Vec3(angle, 0, 0)); }
Rotation rot_y(double angle) { return Rotation::from_axis_angle(Vec3(0, angle, 0)); }
Rotation rot_z(double angle) { return Rotation::from_axis_angle(Vec3(0, 0, angle)); }

double geodesic_angle(const Rotation& a, const Rotation& b) {
  const Mat3& ma = a.matrix();
  const Mat3& mb = b.matrix();
  // Identical orientations give exactly zero; the trace formula would pick up
  // ~1e-8 of noise from acos near 1.
  if ((ma.array() == mb.array()).all()) return 0.0;
  const double t = (ma.transpose() * mb).trace();
  return std::acos(std::clamp((t - 1.0) / 2.0, -1.0, 1.0));
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = a.rotation * b.rotation;
  out.position = a.rotation * b.position + a.position;
  return out;
}

Pose inverse(const Pose& p) {
  Pose out;
  out.rotation = p.rotation.inverse();
  out.position = -(out.rotation * p.position);
  return out;
}

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy))
    throw geometry_error("focal lengths must be positive and finite");
  if (!std::isfinite(cx) || !std::isfinite(cy))
    throw geometry_error("principal point must be finite");
  if (width > 0 && !(cx >= 0.0 && cx <= width))
    throw geometry_error("principal point x outside image");
  if (height > 0 && !(cy >= 0.0 && cy <= height))
    throw geometry_error("principal point y outside image");
}

void Trajectory::validate() const {
  if (poses.empty()) throw geometry_error("trajectory has no poses");
  if (confidence.size() != poses.size())
    throw geometry_error("confidence count does not match pose count");
  for (double c : confidence) {
    if (!std::isfinite(c) || c < 0.0 || c > 1.0)
      throw geometry_error("confidence values must lie in [0, 1]");
  }
  if (!intrinsics.empty() && intrinsics.size() != poses.size())
    throw geometry_error("intrinsics count does not match pose count");
  for (const auto& k : intrinsics) {
    if (k) k->validate();
  }
  for (const Pose& p : poses) {
    if (!p.position.allFinite()) throw geometry_error("pose position is not finite");
  }
}

}  // namespace camtraj
