#pragma once

#include <span>
#include <utility>

#include "camtraj/se3.hpp"

namespace camtraj {

// Similarity transform x -> scale * (rotation * x) + translation.
struct SimilarityTransform {
  double scale = 1.0;
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
  SimilarityTransform inverse() const;
};

// Raised when the source geometry cannot pin down a similarity transform
// (static camera, or a target collapsed to a point). Carries a usable
// centroid-aligning fallback with unit scale so callers can keep going.
class degenerate_geometry_error : public geometry_error {
public:
  degenerate_geometry_error(const std::string& what, SimilarityTransform fallback)
      : geometry_error(what), fallback_(std::move(fallback)) {}
  const SimilarityTransform& fallback() const { return fallback_; }

private:
  SimilarityTransform fallback_;
};

// Least-squares similarity transform mapping src onto dst:
// minimizes sum_i |scale * R * src_i + t - dst_i|^2 over scale > 0, R, t.
// Closed form via the SVD of the cross-covariance, with the determinant sign
// correction, so the rotation stays proper even for reflective optima.
// Identical point sets short-circuit to the exact identity transform.
SimilarityTransform umeyama(std::span<const Vec3> src, std::span<const Vec3> dst);

// Applies sim to every pose: rotation' = sim.R * R, position' = sim(position).
// Confidences and intrinsics are carried over unchanged.
Trajectory apply_similarity(const SimilarityTransform& sim, const Trajectory& traj);

struct AlignResult {
  Trajectory trajectory;       // gen expressed in ref's frame
  SimilarityTransform transform;
};

// Aligns gen onto ref by the similarity transform fitted on camera centers
// (all frames, unweighted). Propagates umeyama errors.
AlignResult align(const Trajectory& gen, const Trajectory& ref);

}  // namespace camtraj
