#pragma once

#include <Eigen/Core>

#include <vector>

#include "camtraj/errors.hpp"

namespace camtraj {

struct GrpoConfig {
  int group_size = 16;      // rollouts per group
  int top_count = 4;        // best-of-N winners kept for the update
  int bottom_count = 4;     // worst rollouts kept as negative examples
  double clip_range = 0.2;  // ratio clip half-width
  double kl_weight = 1e-4;  // weight of the KL penalty against the reference
  double stability = 1e-8;  // added to the score deviation when normalizing
  int total_steps = 14;     // refinement steps per rollout
  int sde_steps = 3;        // leading steps sampled stochastically
  double sde_noise_level = 0.7;  // scale on the noise schedule of those steps

  void validate() const;
};

// One scored rollout. Per-step vectors cover the stochastic steps only
// (deterministic steps have no density). advantages mirror scores and are
// meaningful only where mask is true.
struct Rollout {
  std::vector<double> scores;        // per-segment reward
  std::vector<bool> mask;            // true = segment counts
  std::vector<double> old_log_density;  // behavior policy, per stochastic step
  std::vector<double> new_log_density;  // policy being optimized
  std::vector<double> kl;            // per-step KL(new || reference)
  std::vector<double> advantages;    // filled by group_advantages
  bool selected = false;             // filled by select_best_of_n
  bool failed = false;               // divergent rollout, never used
};

struct RolloutGroup {
  std::vector<Rollout> rollouts;
};

// Normalized advantages: (score - mean) / (deviation + stability), where mean
// and deviation (population) pool every unmasked segment score of every
// usable rollout in the group. Masked segments get no advantage.
RolloutGroup group_advantages(RolloutGroup group, double stability);

// Flags the top `top_count` and bottom `bottom_count` rollouts by mean
// unmasked score. Rollouts that failed or have no unmasked segment never
// rank. Ties break by rollout index, ascending.
RolloutGroup select_best_of_n(RolloutGroup group, int top_count, int bottom_count);

// min(ratio * advantage, clamp(ratio, 1 - clip, 1 + clip) * advantage).
double clipped_term(double ratio, double advantage, double clip_range);

// Log density of N(mean, sigma^2 I) at x.
double gaussian_step_log_density(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& mean, double sigma);

// KL between two isotropic Gaussians of equal sigma: |a - b|^2 / (2 sigma^2).
double kl_gaussian(const Eigen::VectorXd& mean_a, const Eigen::VectorXd& mean_b,
                   double sigma);

// Surrogate objective: the mean of clipped_term over (selected rollout,
// stochastic step, unmasked segment) triples, minus kl_weight times the mean
// per-step KL over selected rollouts. Either mean is 0 when it has no terms.
double grpo_objective(const RolloutGroup& group, const GrpoConfig& config);

}  // namespace camtraj
