#include "camtraj/reward.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"

namespace camtraj {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int effective_segment_length(const RewardConfig& config, std::size_t frames) {
  if (config.segment_length > 0) return config.segment_length;
  return std::max(1, (static_cast<int>(frames) - 1) / 8);
}

double mean_confidence(const Trajectory& traj, int first, int last) {
  double sum = 0.0;
  for (int i = first; i <= last; ++i) sum += traj.confidence[i];
  return sum / static_cast<double>(last - first + 1);
}

}  // namespace

void RewardConfig::validate() const {
  if (segment_length < 0)
    throw config_error("segment length must be non-negative");
  if (!(lambda_t >= 0.0) || !(lambda_r >= 0.0) || !(lambda_t + lambda_r > 0.0))
    throw config_error("error weights must be non-negative and not both zero");
  if (!(confidence_threshold >= 0.0) || !(confidence_threshold <= 1.0))
    throw config_error("confidence threshold must lie in [0, 1]");
}

std::optional<double> SegmentRewardReport::mean_unmasked_score() const {
  double sum = 0.0;
  int count = 0;
  for (const SegmentReward& s : segments) {
    if (!s.mask) continue;
    sum += s.score;
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

std::vector<Pose> segment_relative_transforms(const Trajectory& traj,
                                              int segment_length) {
  traj.validate();
  if (segment_length < 1) throw config_error("segment length must be at least 1");
  const int n = static_cast<int>(traj.size());
  if (n < segment_length + 1)
    throw geometry_error("trajectory too short for one segment");
  const int k = (n - 1) / segment_length;
  std::vector<Pose> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i) {
    const int first = i * segment_length;
    out.push_back(compose(inverse(traj.poses[first]),
                          traj.poses[first + segment_length]));
  }
  return out;
}

SegmentErrors segment_errors(const Pose& gen_transform, const Pose& ref_transform) {
  const Pose err = compose(inverse(ref_transform), gen_transform);
  SegmentErrors e;
  e.translation = std::min(err.position.norm(), 1.0);
  // Same value as the angle of err.rotation, but routed through
  // geodesic_angle so identical transforms give exactly zero.
  e.rotation = geodesic_angle(ref_transform.rotation, gen_transform.rotation);
  return e;
}

SegmentRewardReport compute_reward(const Trajectory& gen, const Trajectory& ref,
                                   const RewardConfig& config) {
  config.validate();
  gen.validate();
  ref.validate();
  if (gen.size() != ref.size())
    throw geometry_error("trajectories differ in length");
  const int n = static_cast<int>(gen.size());
  const int length = effective_segment_length(config, gen.size());
  if (n < std::max(3, length + 1))
    throw geometry_error("trajectory too short to score");

  SegmentRewardReport report;
  report.segment_length = length;

  Trajectory aligned;
  try {
    aligned = align(gen, ref).trajectory;
  } catch (const degenerate_geometry_error& e) {
    aligned = apply_similarity(e.fallback(), gen);
    report.degenerate_alignment = true;
  }

  const auto gen_transforms = segment_relative_transforms(aligned, length);
  const auto ref_transforms = segment_relative_transforms(ref, length);
  const int k = static_cast<int>(gen_transforms.size());
  report.dropped_frames = n - (k * length + 1);

  std::vector<SegmentErrors> relative(k);
  for (int i = 0; i < k; ++i)
    relative[i] = segment_errors(gen_transforms[i], ref_transforms[i]);

  const auto score_of = [&](double e_t, double e_r) {
    return 0.0 - (config.lambda_t * e_t + config.lambda_r * e_r);
  };

  if (config.mode == RewardMode::clip_level) {
    // One whole-clip entry: the mean of the per-segment errors.
    double e_t = 0.0, e_r = 0.0;
    for (int i = 0; i < k; ++i) {
      e_t += relative[i].translation;
      e_r += relative[i].rotation;
    }
    e_t /= k;
    e_r /= k;
    SegmentReward clip;
    clip.first_frame = 0;
    clip.last_frame = k * length;
    clip.translation_error = e_t;
    clip.rotation_error = e_r;
    clip.score = score_of(e_t, e_r);
    clip.mask = mean_confidence(gen, 0, k * length) >= config.confidence_threshold;
    report.segments.push_back(clip);
    return report;
  }

  for (int i = 0; i < k; ++i) {
    const int first = i * length;
    const int last = first + length;
    SegmentReward seg;
    seg.first_frame = first;
    seg.last_frame = last;
    seg.translation_error = relative[i].translation;
    seg.rotation_error = relative[i].rotation;
    if (config.mode == RewardMode::absolute_relative) {
      // Per-frame position distances (clipped like the relative error),
      // averaged over the segment's frames.
      double sum = 0.0;
      for (int f = first; f <= last; ++f) {
        sum += std::min((aligned.poses[f].position - ref.poses[f].position).norm(), 1.0);
      }
      seg.translation_error = sum / (length + 1);
    } else if (config.mode == RewardMode::relative_absolute) {
      double sum = 0.0;
      for (int f = first; f <= last; ++f) {
        sum += geodesic_angle(aligned.poses[f].rotation, ref.poses[f].rotation);
      }
      seg.rotation_error = sum / (length + 1);
    }
    seg.score = score_of(seg.translation_error, seg.rotation_error);
    seg.mask = mean_confidence(gen, first, last) >= config.confidence_threshold;
    report.segments.push_back(seg);
  }
  return report;
}

std::string report_to_json(const SegmentRewardReport& report) {
  nlohmann::json j;
  j["segment_length"] = report.segment_length;
  j["dropped_frames"] = report.dropped_frames;
  j["degenerate_alignment"] = report.degenerate_alignment;
  j["segments"] = nlohmann::json::array();
  for (const SegmentReward& s : report.segments) {
    j["segments"].push_back({{"first_frame", s.first_frame},
                             {"last_frame", s.last_frame},
                             {"translation_error", s.translation_error},
                             {"rotation_error", s.rotation_error},
                             {"score", s.score},
                             {"mask", s.mask}});
  }
  const auto mean = report.mean_unmasked_score();
  if (mean)
    j["mean_unmasked_score"] = *mean;
  else
    j["mean_unmasked_score"] = nullptr;
  return j.dump(2);
}

std::string report_to_text(const SegmentRewardReport& report) {
  std::string out;
  out += "segment_length " + std::to_string(report.segment_length) + "\n";
  out += "dropped_frames " + std::to_string(report.dropped_frames) + "\n";
  out += "degenerate_alignment ";
  out += report.degenerate_alignment ? "1" : "0";
  out += "\n";
  for (std::size_t i = 0; i < report.segments.size(); ++i) {
    const SegmentReward& s = report.segments[i];
    out += "segment " + std::to_string(i) + " frames " +
           std::to_string(s.first_frame) + ".." + std::to_string(s.last_frame) +
           " e_t " + fmt(s.translation_error) + " e_R " + fmt(s.rotation_error) +
           " score " + fmt(s.score) + " mask " + (s.mask ? "1" : "0") + "\n";
  }
  const auto mean = report.mean_unmasked_score();
  out += "mean_unmasked_score ";
  out += mean ? fmt(*mean) : "n/a";
  out += "\n";
  return out;
}

RewardMode reward_mode_from_string(const std::string& name) {
  if (name == "relative-relative") return RewardMode::relative_relative;
  if (name == "relative-absolute") return RewardMode::relative_absolute;
  if (name == "absolute-relative") return RewardMode::absolute_relative;
  if (name == "clip-level") return RewardMode::clip_level;
  throw config_error("unknown reward mode: " + name);
}

std::string to_string(RewardMode mode) {
  switch (mode) {
    case RewardMode::relative_relative: return "relative-relative";
    case RewardMode::relative_absolute: return "relative-absolute";
    case RewardMode::absolute_relative: return "absolute-relative";
    case RewardMode::clip_level: return "clip-level";
  }
  throw config_error("unknown reward mode value");
}

}  // namespace camtraj
