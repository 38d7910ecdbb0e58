#pragma once

#include <vector>

#include "camtraj/errors.hpp"

namespace camtraj {

// Per-pixel confidence of one frame, row-major, values in [0, 1].
struct ConfidenceMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;  // size height * width

  double at(int row, int col) const {
    return values[static_cast<std::size_t>(row) * width + col];
  }
};

// Mean pooling of a per-pixel map into one per-frame confidence scalar.
double aggregate_confidence(const ConfidenceMap& map);

}  // namespace camtraj
