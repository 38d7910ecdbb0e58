#pragma once

#include <optional>
#include <string>
#include <vector>

#include "camtraj/align.hpp"
#include "camtraj/se3.hpp"

namespace camtraj {

// How per-segment errors are measured. The first word names the translation
// error, the second the rotation error: "relative" compares segment
// end-to-start transforms, "absolute" averages per-frame errors of aligned
// poses over the segment. clip_level collapses the relative-relative errors
// of all segments into one whole-clip entry.
enum class RewardMode {
  relative_relative,
  relative_absolute,
  absolute_relative,
  clip_level,
};

struct RewardConfig {
  // Frames per segment; 0 picks max(1, (N - 1) / 8) from the clip length.
  int segment_length = 0;
  double lambda_t = 1.0;  // translation error weight
  double lambda_r = 1.0;  // rotation error weight
  // Segments whose mean per-frame confidence falls below this are masked out.
  double confidence_threshold = 0.1;
  RewardMode mode = RewardMode::relative_relative;

  void validate() const;
};

struct SegmentReward {
  int first_frame = 0;  // inclusive, 0-based
  int last_frame = 0;   // inclusive
  double translation_error = 0.0;  // e_t, clipped into [0, 1]
  double rotation_error = 0.0;     // e_R, radians in [0, pi]
  double score = 0.0;              // -(lambda_t * e_t + lambda_r * e_R)
  bool mask = true;  // true = reliable; masked-out segments carry no weight
};

struct SegmentRewardReport {
  std::vector<SegmentReward> segments;
  int segment_length = 0;   // effective L
  int dropped_frames = 0;   // trailing frames not covered by any segment
  bool degenerate_alignment = false;  // centroid fallback was used

  // Mean score over mask=true segments; empty when everything is masked.
  std::optional<double> mean_unmasked_score() const;
};

// Non-overlapping end-to-start transforms: K = floor((N - 1) / L) segments,
// segment k covering frames [k*L, k*L + L], each mapped to
// inverse(pose[k*L]) * pose[k*L + L].
std::vector<Pose> segment_relative_transforms(const Trajectory& traj, int segment_length);

// Translation/rotation error of one generated segment transform against the
// reference: e_t = min(|t(T_err)|, 1), e_R = geodesic angle, where
// T_err = inverse(ref_transform) * gen_transform.
struct SegmentErrors {
  double translation = 0.0;
  double rotation = 0.0;
};
SegmentErrors segment_errors(const Pose& gen_transform, const Pose& ref_transform);

// Full scoring pipeline: similarity-align gen onto ref, cut into segments,
// score each, and mask unreliable segments by gen's per-frame confidence.
// A degenerate alignment falls back to the centroid transform and is flagged
// instead of aborting.
SegmentRewardReport compute_reward(const Trajectory& gen, const Trajectory& ref,
                                   const RewardConfig& config);

std::string report_to_json(const SegmentRewardReport& report);
std::string report_to_text(const SegmentRewardReport& report);

RewardMode reward_mode_from_string(const std::string& name);
std::string to_string(RewardMode mode);

}  // namespace camtraj
