#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "camtraj/confidence.hpp"
#include "camtraj/errors.hpp"
#include "camtraj/pluecker.hpp"
#include "camtraj/policy.hpp"
#include "camtraj/se3.hpp"

namespace camtraj {

// Text formats:
//   native: "frame fx fy cx cy qw qx qy qz tx ty tz conf" per line,
//           '#' starts a comment; all-zero intrinsics mean "none".
//   tum:    "timestamp tx ty tz qx qy qz qw" per line; confidence becomes 1
//           and no intrinsics are attached.
// Both require at least 2 frames and quaternion norms within 1e-3 of 1
// (normalized on ingestion).
enum class TrajectoryFormat { native, tum };

TrajectoryFormat trajectory_format_from_string(const std::string& name);

Trajectory parse_trajectory(const std::string& text, TrajectoryFormat format);
Trajectory load_trajectory(const std::filesystem::path& path, TrajectoryFormat format);

// Native text, 17 significant digits so parsing it back is lossless.
std::string serialize_trajectory(const Trajectory& traj);
void save_trajectory(const std::filesystem::path& path, const Trajectory& traj);

// Flat binary confidence maps: magic "CNF1", u32 frames/height/width,
// then frame-major row-major float32, little endian.
void save_confidence_maps(const std::filesystem::path& path,
                          const std::vector<ConfidenceMap>& maps);
std::vector<ConfidenceMap> load_confidence_maps(const std::filesystem::path& path);

// Flat binary ray maps: magic "PLK1", u32 frames/height/width, then
// float32 little endian in (frame, channel, row, col) order.
void save_pluecker_maps(const std::filesystem::path& path,
                        const std::vector<PlueckerMap>& maps);
std::vector<PlueckerMap> load_pluecker_maps(const std::filesystem::path& path);

// Policy checkpoint: magic "TPL1", u32 value count, then little-endian
// float64 values laid out as [state_dim, total_steps, sigma, weight_cond
// (row-major), weight_state, step_bias (row-major)].
void save_policy(const std::filesystem::path& path, const PolicyParams& params);
PolicyParams load_policy(const std::filesystem::path& path);

}  // namespace camtraj
