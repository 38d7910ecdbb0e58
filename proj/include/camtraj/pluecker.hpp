#pragma once

#include <vector>

#include "camtraj/se3.hpp"

namespace camtraj {

// Per-pixel ray map of one frame. 6 channels, channel-major layout
// (channel, row, col): channels 0-2 hold the moment m = o x d, channels 3-5
// the unit direction d. Every stored ray satisfies |d| = 1 and m . d = 0.
struct PlueckerMap {
  int frame_index = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;  // size 6 * height * width

  double& at(int channel, int row, int col) {
    return data[(static_cast<std::size_t>(channel) * height + row) * width + col];
  }
  double at(int channel, int row, int col) const {
    return data[(static_cast<std::size_t>(channel) * height + row) * width + col];
  }
  Vec3 moment(int row, int col) const {
    return Vec3(at(0, row, col), at(1, row, col), at(2, row, col));
  }
  Vec3 direction(int row, int col) const {
    return Vec3(at(3, row, col), at(4, row, col), at(5, row, col));
  }
};

// Ray map for one camera at the given resolution. Pixel (col u, row v)
// samples the pixel center (u + 0.5, v + 0.5); the ray direction is
// R * K^-1 (u + 0.5, v + 0.5, 1)^T normalized to unit length, the moment is
// taken about the camera center.
PlueckerMap pluecker_frame(const Intrinsics& intrinsics, const Pose& pose,
                           int height, int width);

// One map per frame; every frame must carry intrinsics.
std::vector<PlueckerMap> pluecker_trajectory(const Trajectory& traj, int height,
                                             int width);

}  // namespace camtraj
