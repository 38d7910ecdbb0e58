#include "camtraj/align.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace camtraj {

namespace {
// Mean squared distance from the centroid below this counts as "static".
constexpr double kDegenerateVariance = 1e-18;

Mat3 kabsch_rotation(const Mat3& cov) {
  if (cov.cwiseAbs().maxCoeff() < 1e-300) return Mat3::Identity();
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 s = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s(2, 2) = -1.0;
  return svd.matrixU() * s * svd.matrixV().transpose();
}
}  // namespace

SimilarityTransform SimilarityTransform::inverse() const {
  SimilarityTransform inv;
  inv.scale = 1.0 / scale;
  inv.rotation = rotation.inverse();
  inv.translation = -(inv.scale * (inv.rotation * translation));
  return inv;
}

SimilarityTransform umeyama(std::span<const Vec3> src, std::span<const Vec3> dst) {
  if (src.size() != dst.size())
    throw geometry_error("point sets differ in size");
  const std::size_t n = src.size();
  if (n < 3) throw geometry_error("similarity fit needs at least 3 point pairs");

  Vec3 src_mean = Vec3::Zero(), dst_mean = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    src_mean += src[i];
    dst_mean += dst[i];
  }
  src_mean /= static_cast<double>(n);
  dst_mean /= static_cast<double>(n);

  double src_var = 0.0;
  Mat3 cov = Mat3::Zero();  // (1/n) sum (dst_i - dst_mean)(src_i - src_mean)^T
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 s = src[i] - src_mean;
    const Vec3 d = dst[i] - dst_mean;
    src_var += s.squaredNorm();
    cov += d * s.transpose();
  }
  src_var /= static_cast<double>(n);
  cov /= static_cast<double>(n);

  if (src_var <= kDegenerateVariance) {
    SimilarityTransform fallback;
    fallback.rotation = Rotation::from_matrix(kabsch_rotation(cov));
    fallback.translation = dst_mean - fallback.rotation * src_mean;
    throw degenerate_geometry_error(
        "source trajectory has (near-)zero spatial variance", fallback);
  }

  // Already-aligned inputs map to themselves; return the exact identity so a
  // self-comparison downstream stays exactly zero.
  bool identical = true;
  for (std::size_t i = 0; i < n && identical; ++i) {
    identical = (src[i].array() == dst[i].array()).all();
  }
  if (identical) return SimilarityTransform{};

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 s = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s(2, 2) = -1.0;

  SimilarityTransform out;
  out.rotation = Rotation::from_matrix(svd.matrixU() * s * svd.matrixV().transpose());
  out.scale = (svd.singularValues().asDiagonal() * s).trace() / src_var;
  if (!(out.scale > 0.0) || !std::isfinite(out.scale)) {
    // Happens when dst carries no spatial structure to set the scale.
    SimilarityTransform fallback;
    fallback.rotation = Rotation::from_matrix(kabsch_rotation(cov));
    fallback.translation = dst_mean - fallback.rotation * src_mean;
    throw degenerate_geometry_error("similarity scale is not identifiable", fallback);
  }
  out.translation = dst_mean - out.scale * (out.rotation * src_mean);
  return out;
}

Trajectory apply_similarity(const SimilarityTransform& sim, const Trajectory& traj) {
  Trajectory out = traj;
  for (Pose& p : out.poses) {
    p.rotation = sim.rotation * p.rotation;
    p.position = sim.apply(p.position);
  }
  return out;
}

AlignResult align(const Trajectory& gen, const Trajectory& ref) {
  gen.validate();
  ref.validate();
  if (gen.size() != ref.size())
    throw geometry_error("trajectories differ in length");

  std::vector<Vec3> src(gen.size()), dst(ref.size());
  for (std::size_t i = 0; i < gen.size(); ++i) {
    src[i] = gen.poses[i].position;
    dst[i] = ref.poses[i].position;
  }
  AlignResult result;
  result.transform = umeyama(src, dst);
  result.trajectory = apply_similarity(result.transform, gen);
  return result;
}

}  // namespace camtraj
