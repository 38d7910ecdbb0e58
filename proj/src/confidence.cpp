#include "camtraj/confidence.hpp"

#include <cmath>

namespace camtraj {

double aggregate_confidence(const ConfidenceMap& map) {
  if (map.height < 1 || map.width < 1 || map.values.empty())
    throw geometry_error("confidence map is empty");
  if (map.values.size() != static_cast<std::size_t>(map.height) * map.width)
    throw geometry_error("confidence map size does not match its dimensions");
  double sum = 0.0;
  for (double v : map.values) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw geometry_error("confidence values must lie in [0, 1]");
    sum += v;
  }
  return sum / static_cast<double>(map.values.size());
}

}  // namespace camtraj
