#pragma once

#include <optional>
#include <string>
#include <vector>

#include "camtraj/confidence.hpp"
#include "camtraj/se3.hpp"

namespace camtraj {

// RMSE over frames of the position distance after similarity alignment of
// gen onto ref.
double translation_error(const Trajectory& gen, const Trajectory& ref);

// Mean per-frame geodesic angle in degrees after the same alignment.
double rotation_error(const Trajectory& gen, const Trajectory& ref);

// Fraction of pixels (over all frames) whose confidence is >= threshold;
// pixels exactly at the threshold count as consistent.
double geometric_consistency(const std::vector<ConfidenceMap>& maps,
                             double threshold);

struct ClipMetrics {
  std::string name;
  double translation_error = 0.0;
  double rotation_error = 0.0;  // degrees
  std::optional<double> geometric_consistency;
};

struct EvalReport {
  double translation_error = 0.0;  // mean over clips
  double rotation_error = 0.0;
  std::optional<double> geometric_consistency;
  std::vector<ClipMetrics> clips;
};

struct EvalInput {
  std::string name;
  const Trajectory* gen = nullptr;
  const Trajectory* ref = nullptr;
  const std::vector<ConfidenceMap>* confidence = nullptr;  // optional
};

// Per-clip metrics plus their means. The consistency aggregate averages the
// clips that provide confidence maps and is absent when none do.
EvalReport evaluate(const std::vector<EvalInput>& inputs,
                    double consistency_threshold);

std::string report_to_table(const EvalReport& report);
std::string report_to_json(const EvalReport& report);

}  // namespace camtraj
