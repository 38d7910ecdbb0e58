#include "camtraj/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace camtraj {

namespace {

// Mean unmasked score; nan when the rollout cannot be ranked.
double rollout_score(const Rollout& r) {
  if (r.failed) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  int count = 0;
  for (std::size_t k = 0; k < r.scores.size(); ++k) {
    if (k < r.mask.size() && r.mask[k]) {
      sum += r.scores[k];
      ++count;
    }
  }
  if (count == 0) return std::numeric_limits<double>::quiet_NaN();
  return sum / count;
}

}  // namespace

void GrpoConfig::validate() const {
  if (group_size < 1) throw config_error("group size must be at least 1");
  if (top_count < 0 || bottom_count < 0)
    throw config_error("selection counts must be non-negative");
  if (top_count + bottom_count < 1)
    throw config_error("at least one rollout must be selected");
  if (group_size < top_count + bottom_count)
    throw config_error("group size is smaller than the selection counts");
  if (!(clip_range > 0.0)) throw config_error("clip range must be positive");
  if (!(kl_weight >= 0.0)) throw config_error("kl weight must be non-negative");
  if (!(stability >= 0.0)) throw config_error("stability term must be non-negative");
  if (total_steps < 1) throw config_error("need at least one refinement step");
  if (sde_steps < 0 || sde_steps > total_steps)
    throw config_error("stochastic step count must lie in [0, total steps]");
  if (!(sde_noise_level >= 0.0) || !(sde_noise_level <= 1.0))
    throw config_error("sde noise level must lie in [0, 1]");
  if (sde_steps > 0 && !(sde_noise_level > 0.0))
    throw config_error("stochastic steps need a positive noise level");
}

RolloutGroup group_advantages(RolloutGroup group, double stability) {
  if (!(stability >= 0.0)) throw config_error("stability term must be non-negative");

  double sum = 0.0;
  std::size_t count = 0;
  for (const Rollout& r : group.rollouts) {
    if (r.failed) continue;
    for (std::size_t k = 0; k < r.scores.size(); ++k) {
      if (k < r.mask.size() && r.mask[k]) {
        sum += r.scores[k];
        ++count;
      }
    }
  }
  if (count == 0)
    throw geometry_error("group has no unmasked segment to normalize against");
  const double mean = sum / static_cast<double>(count);

  double var = 0.0;
  for (const Rollout& r : group.rollouts) {
    if (r.failed) continue;
    for (std::size_t k = 0; k < r.scores.size(); ++k) {
      if (k < r.mask.size() && r.mask[k]) {
        const double d = r.scores[k] - mean;
        var += d * d;
      }
    }
  }
  const double deviation = std::sqrt(var / static_cast<double>(count));

  for (Rollout& r : group.rollouts) {
    r.advantages.assign(r.scores.size(), std::numeric_limits<double>::quiet_NaN());
    if (r.failed) continue;
    for (std::size_t k = 0; k < r.scores.size(); ++k) {
      if (k < r.mask.size() && r.mask[k])
        r.advantages[k] = (r.scores[k] - mean) / (deviation + stability);
    }
  }
  return group;
}

RolloutGroup select_best_of_n(RolloutGroup group, int top_count, int bottom_count) {
  if (top_count < 0 || bottom_count < 0)
    throw config_error("selection counts must be non-negative");
  const int g = static_cast<int>(group.rollouts.size());
  if (g < top_count + bottom_count)
    throw config_error("group is smaller than the selection counts");

  std::vector<int> ranked;
  for (int i = 0; i < g; ++i) {
    group.rollouts[i].selected = false;
    if (!std::isnan(rollout_score(group.rollouts[i]))) ranked.push_back(i);
  }
  std::sort(ranked.begin(), ranked.end(), [&](int a, int b) {
    const double sa = rollout_score(group.rollouts[a]);
    const double sb = rollout_score(group.rollouts[b]);
    if (sa != sb) return sa > sb;
    return a < b;  // ties: lower index ranks higher
  });

  const int n = static_cast<int>(ranked.size());
  for (int i = 0; i < std::min(top_count, n); ++i)
    group.rollouts[ranked[i]].selected = true;
  for (int i = 0; i < std::min(bottom_count, n); ++i)
    group.rollouts[ranked[n - 1 - i]].selected = true;
  return group;
}

double clipped_term(double ratio, double advantage, double clip_range) {
  const double clipped = std::clamp(ratio, 1.0 - clip_range, 1.0 + clip_range);
  return std::min(ratio * advantage, clipped * advantage);
}

double gaussian_step_log_density(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& mean, double sigma) {
  if (!(sigma > 0.0)) throw config_error("step noise scale must be positive");
  if (x.size() != mean.size())
    throw config_error("sample and mean dimensions differ");
  const double d = static_cast<double>(x.size());
  constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)
  return -0.5 * d * kLog2Pi - d * std::log(sigma) -
         (x - mean).squaredNorm() / (2.0 * sigma * sigma);
}

double kl_gaussian(const Eigen::VectorXd& mean_a, const Eigen::VectorXd& mean_b,
                   double sigma) {
  if (!(sigma > 0.0)) throw config_error("step noise scale must be positive");
  if (mean_a.size() != mean_b.size())
    throw config_error("mean dimensions differ");
  return (mean_a - mean_b).squaredNorm() / (2.0 * sigma * sigma);
}

double grpo_objective(const RolloutGroup& group, const GrpoConfig& config) {
  config.validate();

  double clip_sum = 0.0;
  std::size_t clip_count = 0;
  double kl_sum = 0.0;
  std::size_t kl_count = 0;

  for (const Rollout& r : group.rollouts) {
    if (!r.selected || r.failed) continue;
    if (r.new_log_density.size() != r.old_log_density.size() ||
        r.kl.size() != r.old_log_density.size())
      throw config_error("rollout is missing step densities");
    if (r.advantages.size() != r.scores.size())
      throw config_error("rollout is missing advantages");
    for (std::size_t t = 0; t < r.old_log_density.size(); ++t) {
      if (!std::isfinite(r.old_log_density[t]) || !std::isfinite(r.new_log_density[t]))
        throw config_error("rollout is missing step densities");
      const double ratio = std::exp(r.new_log_density[t] - r.old_log_density[t]);
      for (std::size_t k = 0; k < r.scores.size(); ++k) {
        if (k < r.mask.size() && r.mask[k]) {
          clip_sum += clipped_term(ratio, r.advantages[k], config.clip_range);
          ++clip_count;
        }
      }
      kl_sum += r.kl[t];
      ++kl_count;
    }
  }

  const double clip_mean = clip_count ? clip_sum / static_cast<double>(clip_count) : 0.0;
  const double kl_mean = kl_count ? kl_sum / static_cast<double>(kl_count) : 0.0;
  return clip_mean - config.kl_weight * kl_mean;
}

}  // namespace camtraj
