#include "camtraj/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "camtraj/align.hpp"
#include "json.hpp"

namespace camtraj {

namespace {
constexpr double kRadToDeg = 180.0 / M_PI;
}

double translation_error(const Trajectory& gen, const Trajectory& ref) {
  const Trajectory aligned = align(gen, ref).trajectory;
  double sum = 0.0;
  for (std::size_t i = 0; i < aligned.size(); ++i)
    sum += (aligned.poses[i].position - ref.poses[i].position).squaredNorm();
  return std::sqrt(sum / static_cast<double>(aligned.size()));
}

double rotation_error(const Trajectory& gen, const Trajectory& ref) {
  const Trajectory aligned = align(gen, ref).trajectory;
  double sum = 0.0;
  for (std::size_t i = 0; i < aligned.size(); ++i)
    sum += geodesic_angle(aligned.poses[i].rotation, ref.poses[i].rotation);
  return kRadToDeg * sum / static_cast<double>(aligned.size());
}

double geometric_consistency(const std::vector<ConfidenceMap>& maps,
                             double threshold) {
  if (!(threshold >= 0.0) || !(threshold <= 1.0))
    throw config_error("consistency threshold must lie in [0, 1]");
  std::size_t total = 0;
  std::size_t good = 0;
  for (const ConfidenceMap& map : maps) {
    if (map.values.empty() ||
        map.values.size() != static_cast<std::size_t>(map.height) * map.width)
      throw geometry_error("confidence map is empty or inconsistently sized");
    for (double v : map.values) {
      if (!std::isfinite(v) || v < 0.0 || v > 1.0)
        throw geometry_error("confidence values must lie in [0, 1]");
      if (v >= threshold) ++good;
      ++total;
    }
  }
  if (total == 0) throw geometry_error("no confidence values to evaluate");
  return static_cast<double>(good) / static_cast<double>(total);
}

EvalReport evaluate(const std::vector<EvalInput>& inputs,
                    double consistency_threshold) {
  if (inputs.empty()) throw config_error("nothing to evaluate");
  EvalReport report;
  double con_sum = 0.0;
  int con_count = 0;
  for (const EvalInput& in : inputs) {
    if (!in.gen || !in.ref) throw config_error("evaluation input without trajectories");
    ClipMetrics clip;
    clip.name = in.name;
    clip.translation_error = translation_error(*in.gen, *in.ref);
    clip.rotation_error = rotation_error(*in.gen, *in.ref);
    if (in.confidence) {
      clip.geometric_consistency =
          geometric_consistency(*in.confidence, consistency_threshold);
      con_sum += *clip.geometric_consistency;
      ++con_count;
    }
    report.translation_error += clip.translation_error;
    report.rotation_error += clip.rotation_error;
    report.clips.push_back(std::move(clip));
  }
  report.translation_error /= static_cast<double>(report.clips.size());
  report.rotation_error /= static_cast<double>(report.clips.size());
  if (con_count > 0) report.geometric_consistency = con_sum / con_count;
  return report;
}

std::string report_to_table(const EvalReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %14s %14s %14s\n", "clip",
                "Trans. Err.", "Rot. Err.", "Geo. Con.");
  out += line;
  const auto row = [&](const std::string& name, double t, double r,
                       const std::optional<double>& c) {
    if (c) {
      std::snprintf(line, sizeof(line), "%-16s %14.6f %14.6f %14.6f\n",
                    name.c_str(), t, r, *c);
    } else {
      std::snprintf(line, sizeof(line), "%-16s %14.6f %14.6f %14s\n",
                    name.c_str(), t, r, "-");
    }
    out += line;
  };
  for (const ClipMetrics& clip : report.clips)
    row(clip.name, clip.translation_error, clip.rotation_error,
        clip.geometric_consistency);
  if (report.clips.size() > 1)
    row("mean", report.translation_error, report.rotation_error,
        report.geometric_consistency);
  return out;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["translation_error"] = report.translation_error;
  j["rotation_error"] = report.rotation_error;
  if (report.geometric_consistency)
    j["geometric_consistency"] = *report.geometric_consistency;
  else
    j["geometric_consistency"] = nullptr;
  j["clips"] = nlohmann::json::array();
  for (const ClipMetrics& clip : report.clips) {
    nlohmann::json c;
    c["name"] = clip.name;
    c["translation_error"] = clip.translation_error;
    c["rotation_error"] = clip.rotation_error;
    if (clip.geometric_consistency)
      c["geometric_consistency"] = *clip.geometric_consistency;
    else
      c["geometric_consistency"] = nullptr;
    j["clips"].push_back(c);
  }
  return j.dump(2);
}

}  // namespace camtraj
