#include "camtraj/policy.hpp"

#include <cmath>
#include <limits>

#include "camtraj/random.hpp"
#include "json.hpp"

namespace camtraj {

namespace {

// Seed of the shared starting latent. Independent of the rollout seed so that
// fully deterministic rollouts (sde_steps = 0) do not vary with it.
constexpr std::uint64_t kInitialLatentSeed = 0x6c61746e74303137ull;

// d/dr of clipped_term at fixed advantage; at the clip boundaries the
// interior branch is used.
double clipped_term_slope(double ratio, double advantage, double clip_range) {
  if (advantage >= 0.0) return ratio <= 1.0 + clip_range ? advantage : 0.0;
  return ratio >= 1.0 - clip_range ? advantage : 0.0;
}

}  // namespace

TrajectoryLatent encode(const Trajectory& traj) {
  traj.validate();
  if (traj.size() < 2)
    throw geometry_error("need at least 2 poses to take increments");
  TrajectoryLatent latent;
  latent.values.resize(6 * (static_cast<Eigen::Index>(traj.size()) - 1));
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    const Pose rel = compose(inverse(traj.poses[i]), traj.poses[i + 1]);
    latent.values.segment<3>(6 * i) = rel.rotation.axis_angle();
    latent.values.segment<3>(6 * i + 3) = rel.position;
  }
  return latent;
}

Trajectory decode(const TrajectoryLatent& latent, const Pose& anchor) {
  if (latent.values.size() <= 0 || latent.values.size() % 6 != 0)
    throw config_error("latent size must be a positive multiple of 6");
  if (!latent.values.allFinite())
    throw geometry_error("latent has non-finite values");
  Trajectory traj;
  traj.poses.push_back(anchor);
  for (Eigen::Index i = 0; i < latent.values.size() / 6; ++i) {
    Pose step;
    step.rotation = Rotation::from_axis_angle(latent.values.segment<3>(6 * i));
    step.position = latent.values.segment<3>(6 * i + 3);
    traj.poses.push_back(compose(traj.poses.back(), step));
  }
  traj.confidence.assign(traj.poses.size(), 1.0);
  return traj;
}

Eigen::VectorXd noise_schedule(int total_steps, double sigma_max, double sigma_min,
                               double shift) {
  if (total_steps < 1) throw config_error("schedule needs at least one step");
  if (!(sigma_min > 0.0) || !(sigma_max >= sigma_min))
    throw config_error("noise scales must satisfy 0 < sigma_min <= sigma_max");
  if (!(shift > 0.0)) throw config_error("schedule shift must be positive");
  Eigen::VectorXd sigma(total_steps);
  for (int t = 0; t < total_steps; ++t) {
    const double progress =
        total_steps == 1 ? 1.0 : static_cast<double>(t) / (total_steps - 1);
    sigma[t] = sigma_max *
               std::pow(sigma_min / sigma_max, std::pow(progress, 1.0 / shift));
  }
  return sigma;
}

Eigen::VectorXd PolicyParams::step_mean(const Eigen::VectorXd& condition,
                                        const Eigen::VectorXd& state,
                                        int step) const {
  return weight_cond * condition + weight_state * state + step_bias.col(step);
}

void PolicyParams::validate() const {
  const int d = state_dim();
  const int t = total_steps();
  if (d < 1 || t < 1) throw config_error("policy has empty parameter blocks");
  if (weight_cond.rows() != d || weight_cond.cols() != d ||
      weight_state.rows() != d || weight_state.cols() != d ||
      step_bias.rows() != d || step_bias.cols() != t)
    throw config_error("policy parameter blocks have inconsistent shapes");
  for (int i = 0; i < t; ++i) {
    if (!(sigma[i] > 0.0)) throw config_error("noise schedule must be positive");
  }
}

PolicyParams PolicyParams::make(int state_dim, int total_steps, double sigma_max,
                                double sigma_min, double shift) {
  if (state_dim < 1) throw config_error("state dimension must be positive");
  PolicyParams p;
  p.weight_cond = Eigen::MatrixXd::Zero(state_dim, state_dim);
  p.weight_state = Eigen::MatrixXd::Zero(state_dim, state_dim);
  p.step_bias = Eigen::MatrixXd::Zero(state_dim, total_steps);
  p.sigma = noise_schedule(total_steps, sigma_max, sigma_min, shift);
  return p;
}

RolloutResult rollout(const PolicyParams& params, const Trajectory& reference,
                      const GrpoConfig& config, std::uint64_t seed) {
  config.validate();
  params.validate();
  if (params.total_steps() != config.total_steps)
    throw config_error("policy schedule length does not match total steps");
  const Eigen::VectorXd condition = encode(reference).values;
  if (condition.size() != params.state_dim())
    throw config_error("reference length does not match the policy dimension");

  RolloutResult result;
  result.initial_state = Rng(kInitialLatentSeed).normal_vector(condition.size());

  Rng rng(seed);
  Eigen::VectorXd state = result.initial_state;
  for (int t = 0; t < config.total_steps; ++t) {
    const Eigen::VectorXd mean = params.step_mean(condition, state, t);
    Eigen::VectorXd next;
    if (t < config.sde_steps) {
      const double sigma_eff = params.sigma[t] * config.sde_noise_level;
      next = mean + sigma_eff * rng.normal_vector(mean.size());
      if (!next.allFinite()) {
        result.failed = true;
        return result;
      }
      result.log_densities.push_back(gaussian_step_log_density(next, mean, sigma_eff));
    } else {
      next = mean;
      if (!next.allFinite()) {
        result.failed = true;
        return result;
      }
    }
    result.means.push_back(mean);
    result.samples.push_back(next);
    state = next;
  }
  TrajectoryLatent latent;
  latent.values = state;
  result.trajectory = decode(latent, reference.poses[0]);
  return result;
}

CollectedGroup collect_group(const PolicyParams& params, const Trajectory& reference,
                             const RewardConfig& reward_config,
                             const GrpoConfig& grpo_config, std::uint64_t seed) {
  grpo_config.validate();
  CollectedGroup data;
  data.condition = encode(reference).values;
  for (int g = 0; g < grpo_config.group_size; ++g) {
    RolloutResult rr = rollout(params, reference, grpo_config, derive_seed(seed, 1, g));
    Rollout entry;
    entry.failed = rr.failed;
    if (!rr.failed) {
      SegmentRewardReport report = compute_reward(rr.trajectory, reference, reward_config);
      entry.scores.reserve(report.segments.size());
      entry.mask.reserve(report.segments.size());
      for (const SegmentReward& s : report.segments) {
        entry.scores.push_back(s.score);
        entry.mask.push_back(s.mask);
      }
      entry.old_log_density = rr.log_densities;
      entry.new_log_density.assign(rr.log_densities.size(),
                                   std::numeric_limits<double>::quiet_NaN());
      entry.kl.assign(rr.log_densities.size(),
                      std::numeric_limits<double>::quiet_NaN());
      data.reports.push_back(std::move(report));
    } else {
      data.reports.emplace_back();
    }
    data.rollouts.push_back(std::move(rr));
    data.group.rollouts.push_back(std::move(entry));
  }
  data.group = group_advantages(std::move(data.group), grpo_config.stability);
  data.group = select_best_of_n(std::move(data.group), grpo_config.top_count,
                                grpo_config.bottom_count);
  return data;
}

ObjectiveBreakdown surrogate_eval(const PolicyParams& eval_params,
                                  const PolicyParams& ref_params,
                                  const CollectedGroup& data,
                                  const GrpoConfig& config) {
  RolloutGroup filled = data.group;
  double kl_sum = 0.0;
  std::size_t kl_count = 0;
  for (std::size_t g = 0; g < filled.rollouts.size(); ++g) {
    Rollout& r = filled.rollouts[g];
    if (!r.selected || r.failed) continue;
    const RolloutResult& rr = data.rollouts[g];
    for (int t = 0; t < config.sde_steps; ++t) {
      const Eigen::VectorXd& state = t == 0 ? rr.initial_state : rr.samples[t - 1];
      const double sigma_eff = eval_params.sigma[t] * config.sde_noise_level;
      const Eigen::VectorXd mean_new = eval_params.step_mean(data.condition, state, t);
      const Eigen::VectorXd mean_ref = ref_params.step_mean(data.condition, state, t);
      r.new_log_density[t] = gaussian_step_log_density(rr.samples[t], mean_new, sigma_eff);
      r.kl[t] = kl_gaussian(mean_new, mean_ref, sigma_eff);
      kl_sum += r.kl[t];
      ++kl_count;
    }
  }
  ObjectiveBreakdown out;
  out.objective = grpo_objective(filled, config);
  out.kl_mean = kl_count ? kl_sum / static_cast<double>(kl_count) : 0.0;
  out.clip_mean = out.objective + config.kl_weight * out.kl_mean;
  return out;
}

ParamGradient surrogate_gradient(const PolicyParams& eval_params,
                                 const PolicyParams& ref_params,
                                 const CollectedGroup& data,
                                 const GrpoConfig& config) {
  const int d = eval_params.state_dim();
  ParamGradient grad;
  grad.weight_cond = Eigen::MatrixXd::Zero(d, d);
  grad.weight_state = Eigen::MatrixXd::Zero(d, d);
  grad.step_bias = Eigen::MatrixXd::Zero(d, eval_params.total_steps());

  // Term counts fix the normalization of both means.
  std::size_t clip_count = 0;
  std::size_t kl_count = 0;
  for (const Rollout& r : data.group.rollouts) {
    if (!r.selected || r.failed) continue;
    std::size_t unmasked = 0;
    for (std::size_t k = 0; k < r.mask.size(); ++k)
      if (r.mask[k]) ++unmasked;
    clip_count += unmasked * static_cast<std::size_t>(config.sde_steps);
    kl_count += static_cast<std::size_t>(config.sde_steps);
  }
  if (kl_count == 0) return grad;

  for (std::size_t g = 0; g < data.group.rollouts.size(); ++g) {
    const Rollout& r = data.group.rollouts[g];
    if (!r.selected || r.failed) continue;
    const RolloutResult& rr = data.rollouts[g];
    for (int t = 0; t < config.sde_steps; ++t) {
      const Eigen::VectorXd& state = t == 0 ? rr.initial_state : rr.samples[t - 1];
      const double sigma_eff = eval_params.sigma[t] * config.sde_noise_level;
      const double inv_var = 1.0 / (sigma_eff * sigma_eff);
      const Eigen::VectorXd mean_new = eval_params.step_mean(data.condition, state, t);
      const double ratio =
          std::exp(gaussian_step_log_density(rr.samples[t], mean_new, sigma_eff) -
                   r.old_log_density[t]);

      double slope_sum = 0.0;
      for (std::size_t k = 0; k < r.scores.size(); ++k) {
        if (k < r.mask.size() && r.mask[k])
          slope_sum += clipped_term_slope(ratio, r.advantages[k], config.clip_range);
      }

      // d(objective)/d(mean): the clipped part differentiates through the
      // ratio, the KL part is quadratic in the mean offset.
      Eigen::VectorXd dmean = Eigen::VectorXd::Zero(d);
      if (clip_count > 0) {
        dmean += (slope_sum * ratio / static_cast<double>(clip_count)) * inv_var *
                 (rr.samples[t] - mean_new);
      }
      const Eigen::VectorXd mean_ref = ref_params.step_mean(data.condition, state, t);
      dmean -= (config.kl_weight / static_cast<double>(kl_count)) * inv_var *
               (mean_new - mean_ref);

      grad.weight_cond += dmean * data.condition.transpose();
      grad.weight_state += dmean * state.transpose();
      grad.step_bias.col(t) += dmean;
    }
  }
  return grad;
}

std::string log_to_json(const IterationLog& log) {
  nlohmann::json j;
  j["iteration"] = log.iteration;
  j["mean_reward"] = log.mean_reward;
  j["mean_selected_advantage"] = log.mean_selected_advantage;
  j["objective"] = log.objective;
  j["mean_kl"] = log.mean_kl;
  j["skipped"] = log.skipped;
  return j.dump();
}

TrainResult train(const PolicyParams& initial, const std::vector<Trajectory>& dataset,
                  const RewardConfig& reward_config, const GrpoConfig& grpo_config,
                  const TrainOptions& options) {
  if (dataset.empty()) throw config_error("training dataset is empty");
  grpo_config.validate();
  reward_config.validate();
  initial.validate();
  if (options.iterations < 0)
    throw config_error("iteration count must be non-negative");
  if (!(options.learning_rate >= 0.0) || !std::isfinite(options.learning_rate))
    throw config_error("learning rate must be finite and non-negative");
  for (const Trajectory& ref : dataset) {
    if (6 * (static_cast<int>(ref.size()) - 1) != initial.state_dim())
      throw config_error("dataset clip length does not match the policy dimension");
  }

  TrainResult result;
  result.params = initial;
  const PolicyParams anchor = initial;  // frozen KL reference

  for (int iter = 0; iter < options.iterations; ++iter) {
    const std::size_t ref_index =
        dataset.size() == 1
            ? 0
            : static_cast<std::size_t>(
                  Rng(derive_seed(options.seed, 2, iter)).next_u64() % dataset.size());

    IterationLog log;
    log.iteration = iter;
    CollectedGroup data;
    try {
      data = collect_group(result.params, dataset[ref_index], reward_config,
                           grpo_config, derive_seed(options.seed, 3, iter));
    } catch (const geometry_error&) {
      log.skipped = true;
      result.logs.push_back(log);
      continue;
    }

    double reward_sum = 0.0;
    int reward_count = 0;
    double adv_sum = 0.0;
    int adv_count = 0;
    for (std::size_t g = 0; g < data.group.rollouts.size(); ++g) {
      const Rollout& r = data.group.rollouts[g];
      if (r.failed) continue;
      const auto mean = data.reports[g].mean_unmasked_score();
      if (mean) {
        reward_sum += *mean;
        ++reward_count;
      }
      if (!r.selected) continue;
      for (std::size_t k = 0; k < r.scores.size(); ++k) {
        if (k < r.mask.size() && r.mask[k]) {
          adv_sum += r.advantages[k];
          ++adv_count;
        }
      }
    }
    log.mean_reward = reward_count ? reward_sum / reward_count : 0.0;
    log.mean_selected_advantage = adv_count ? adv_sum / adv_count : 0.0;

    const ObjectiveBreakdown eval =
        surrogate_eval(result.params, anchor, data, grpo_config);
    log.objective = eval.objective;
    log.mean_kl = eval.kl_mean;

    ParamGradient grad = surrogate_gradient(result.params, anchor, data, grpo_config);
    if (result.params.train_cond)
      result.params.weight_cond += options.learning_rate * grad.weight_cond;
    if (result.params.train_state)
      result.params.weight_state += options.learning_rate * grad.weight_state;
    if (result.params.train_bias)
      result.params.step_bias += options.learning_rate * grad.step_bias;

    result.logs.push_back(log);
  }
  return result;
}

}  // namespace camtraj
