#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <optional>
#include <vector>

#include "camtraj/errors.hpp"

namespace camtraj {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Proper rotation (orthonormal, det +1). Storage is matrix-first; quaternions
// appear only at construction and serialization boundaries.
class Rotation {
public:
  Rotation() : m_(Mat3::Identity()) {}

  // Accepts a noisy matrix and projects it onto the nearest rotation when the
  // orthonormality defect (max |R^T R - I| entry) is above 1e-9. Inputs with a
  // defect above 1e-2, a non-positive determinant, or non-finite entries are
  // rejected.
  static Rotation from_matrix(const Mat3& m);

  // Normalizes the quaternion before conversion; a (near-)zero quaternion is
  // rejected.
  static Rotation from_quaternion(double w, double x, double y, double z);

  // Exponential map: rotvec = angle * unit axis.
  static Rotation from_axis_angle(const Vec3& rotvec);

  // Logarithm map, angle in [0, pi].
  Vec3 axis_angle() const;

  Eigen::Quaterniond quaternion() const { return Eigen::Quaterniond(m_); }
  const Mat3& matrix() const { return m_; }

  Rotation inverse() const { return Rotation(Mat3(m_.transpose())); }
  Rotation operator*(const Rotation& o) const { return Rotation(Mat3(m_ * o.m_)); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

private:
  explicit Rotation(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

// Axis rotations, mostly convenient for tests and synthetic data.
Rotation rot_x(double angle);
Rotation rot_y(double angle);
Rotation rot_z(double angle);

// Geodesic distance on SO(3): acos(clamp((tr(a^T b) - 1) / 2, -1, 1)).
// Exactly zero for identical matrices.
double geodesic_angle(const Rotation& a, const Rotation& b);

// Camera-to-world transform. position is the camera center in world
// coordinates.
struct Pose {
  Rotation rotation;
  Vec3 position = Vec3::Zero();
};

// Applies b then a: compose(a, b)(x) = a(b(x)).
Pose compose(const Pose& a, const Pose& b);

// inverse(p).rotation = p.rotation^T,
// inverse(p).position = -p.rotation^T * p.position.
Pose inverse(const Pose& p);

inline Pose operator*(const Pose& a, const Pose& b) { return compose(a, b); }

// Pinhole intrinsics in pixels. width/height of 0 means the image dimensions
// are unspecified (the trajectory text format does not carry them).
struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  void validate() const;
};

// Ordered camera path with per-frame confidence in [0, 1] and optional
// per-frame intrinsics (either absent entirely or one entry per frame).
struct Trajectory {
  std::vector<Pose> poses;
  std::vector<double> confidence;
  std::vector<std::optional<Intrinsics>> intrinsics;

  std::size_t size() const { return poses.size(); }
  void validate() const;
};

}  // namespace camtraj
