#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "camtraj/grpo.hpp"
#include "camtraj/reward.hpp"
#include "camtraj/se3.hpp"

namespace camtraj {

// Flat twist parameterization of a trajectory: 6 values per frame transition,
// the axis-angle rotation followed by the translation of
// inverse(pose_i) * pose_{i+1}. A latent of length 6*(N-1) decodes to N poses.
struct TrajectoryLatent {
  Eigen::VectorXd values;

  Eigen::Index frames() const { return values.size() / 6 + 1; }
};

TrajectoryLatent encode(const Trajectory& traj);

// Integrates the increments starting at anchor. Confidences are set to 1 and
// no intrinsics are attached.
Trajectory decode(const TrajectoryLatent& latent, const Pose& anchor);

// Geometric schedule from sigma_max down to sigma_min. shift > 1 bends the
// decay exponent so more of it happens in the early steps.
Eigen::VectorXd noise_schedule(int total_steps, double sigma_max = 1.0,
                               double sigma_min = 0.05, double shift = 1.0);

// Linear per-step denoiser: mean(state, step) =
// weight_cond * condition + weight_state * state + step_bias[step].
// The train_* flags select which blocks gradient updates may touch.
struct PolicyParams {
  Eigen::MatrixXd weight_cond;   // D x D
  Eigen::MatrixXd weight_state;  // D x D
  Eigen::MatrixXd step_bias;     // D x total_steps, one column per step
  Eigen::VectorXd sigma;         // per-step noise scale
  bool train_cond = true;
  bool train_state = true;
  bool train_bias = true;

  int state_dim() const { return static_cast<int>(weight_cond.rows()); }
  int total_steps() const { return static_cast<int>(sigma.size()); }

  Eigen::VectorXd step_mean(const Eigen::VectorXd& condition,
                            const Eigen::VectorXd& state, int step) const;
  void validate() const;

  // Zero weights with the default noise schedule.
  static PolicyParams make(int state_dim, int total_steps, double sigma_max = 1.0,
                           double sigma_min = 0.05, double shift = 1.0);
};

struct RolloutResult {
  Trajectory trajectory;                  // empty when failed
  Eigen::VectorXd initial_state;
  std::vector<Eigen::VectorXd> means;     // one per executed step
  std::vector<Eigen::VectorXd> samples;   // state after each executed step
  std::vector<double> log_densities;      // stochastic steps only
  bool failed = false;
};

// Runs the refinement chain against one reference clip. The starting latent
// is one fixed standard-Gaussian draw shared by every rollout, so the seed
// influences only the stochastic steps; with sde_steps = 0 the rollout is the
// same for every seed. The first sde_steps steps sample
// N(mean, (sigma_t * sde_noise_level)^2 I) and record their log density,
// remaining steps take the mean. A non-finite state marks the rollout failed.
RolloutResult rollout(const PolicyParams& params, const Trajectory& reference,
                      const GrpoConfig& config, std::uint64_t seed);

// One sampled group with everything the update step needs. group holds the
// scored/normalized/selected view of the same rollouts, index-aligned.
struct CollectedGroup {
  Eigen::VectorXd condition;
  std::vector<RolloutResult> rollouts;
  std::vector<SegmentRewardReport> reports;  // empty report for failed rollouts
  RolloutGroup group;
};

// Rollouts + rewards + advantages + best-of-N selection for one reference.
// Throws geometry_error when no segment anywhere in the group is usable.
CollectedGroup collect_group(const PolicyParams& params, const Trajectory& reference,
                             const RewardConfig& reward_config,
                             const GrpoConfig& grpo_config, std::uint64_t seed);

struct ObjectiveBreakdown {
  double objective = 0.0;
  double clip_mean = 0.0;  // mean clipped surrogate term
  double kl_mean = 0.0;    // mean per-step KL against the reference policy
};

// Evaluates the surrogate at eval_params on the frozen collected data:
// step densities are recomputed at eval_params over the recorded states, the
// KL is taken against ref_params, and everything funnels into grpo_objective.
ObjectiveBreakdown surrogate_eval(const PolicyParams& eval_params,
                                  const PolicyParams& ref_params,
                                  const CollectedGroup& data,
                                  const GrpoConfig& config);

struct ParamGradient {
  Eigen::MatrixXd weight_cond;
  Eigen::MatrixXd weight_state;
  Eigen::MatrixXd step_bias;
};

// Analytic gradient of surrogate_eval's objective with respect to
// eval_params' weight blocks (the noise schedule is not trainable).
ParamGradient surrogate_gradient(const PolicyParams& eval_params,
                                 const PolicyParams& ref_params,
                                 const CollectedGroup& data,
                                 const GrpoConfig& config);

struct TrainOptions {
  int iterations = 500;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

struct IterationLog {
  int iteration = 0;
  double mean_reward = 0.0;             // mean over rollouts of mean unmasked score
  double mean_selected_advantage = 0.0;
  double objective = 0.0;               // surrogate at the pre-update params
  double mean_kl = 0.0;
  bool skipped = false;                 // group unusable, no update applied
};

std::string log_to_json(const IterationLog& log);

struct TrainResult {
  PolicyParams params;
  std::vector<IterationLog> logs;
};

// Plain gradient ascent: per iteration pick a reference, collect a group,
// take one step on the surrogate. The KL anchor stays frozen at the initial
// parameters. Fully deterministic for a fixed seed.
TrainResult train(const PolicyParams& initial, const std::vector<Trajectory>& dataset,
                  const RewardConfig& reward_config, const GrpoConfig& grpo_config,
                  const TrainOptions& options);

}  // namespace camtraj
