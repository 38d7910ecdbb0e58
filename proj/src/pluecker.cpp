#include "camtraj/pluecker.hpp"

#include <string>

namespace camtraj {

PlueckerMap pluecker_frame(const Intrinsics& intrinsics, const Pose& pose,
                           int height, int width) {
  if (height < 1 || width < 1)
    throw config_error("ray map resolution must be at least 1x1");
  intrinsics.validate();

  PlueckerMap map;
  map.height = height;
  map.width = width;
  map.data.assign(static_cast<std::size_t>(6) * height * width, 0.0);

  const Mat3& r = pose.rotation.matrix();
  const Vec3& o = pose.position;
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const double x = (u + 0.5 - intrinsics.cx) / intrinsics.fx;
      const double y = (v + 0.5 - intrinsics.cy) / intrinsics.fy;
      Vec3 d = r * Vec3(x, y, 1.0);
      d /= d.norm();
      const Vec3 m = o.cross(d);
      map.at(0, v, u) = m.x();
      map.at(1, v, u) = m.y();
      map.at(2, v, u) = m.z();
      map.at(3, v, u) = d.x();
      map.at(4, v, u) = d.y();
      map.at(5, v, u) = d.z();
    }
  }
  return map;
}

std::vector<PlueckerMap> pluecker_trajectory(const Trajectory& traj, int height,
                                             int width) {
  traj.validate();
  std::vector<PlueckerMap> maps;
  maps.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj.intrinsics.empty() || !traj.intrinsics[i])
      throw geometry_error("frame " + std::to_string(i) + " has no intrinsics");
    maps.push_back(pluecker_frame(*traj.intrinsics[i], traj.poses[i], height, width));
    maps.back().frame_index = static_cast<int>(i);
  }
  return maps;
}

}  // namespace camtraj
