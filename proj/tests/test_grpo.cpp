#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"

#include "camtraj/grpo.hpp"
#include "camtraj/random.hpp"

using camtraj::GrpoConfig;
using camtraj::Rollout;
using camtraj::RolloutGroup;

namespace {

Rollout make_rollout(std::vector<double> scores, std::vector<bool> mask) {
  Rollout r;
  r.scores = std::move(scores);
  r.mask = std::move(mask);
  return r;
}

RolloutGroup random_group(camtraj::Rng& rng, int rollouts, int segments) {
  RolloutGroup group;
  for (int i = 0; i < rollouts; ++i) {
    Rollout r;
    for (int k = 0; k < segments; ++k) {
      r.scores.push_back(-3.0 * rng.uniform());
      r.mask.push_back(rng.uniform() < 0.8);
    }
    r.failed = rng.uniform() < 0.15;
    group.rollouts.push_back(std::move(r));
  }
  return group;
}

}  // namespace

TEST_CASE("two-rollout advantages come out as +1 and -1") {
  RolloutGroup group;
  group.rollouts.push_back(make_rollout({-1.0}, {true}));
  group.rollouts.push_back(make_rollout({-3.0}, {true}));
  const auto out = camtraj::group_advantages(group, 0.0);
  CHECK(out.rollouts[0].advantages[0] == 1.0);
  CHECK(out.rollouts[1].advantages[0] == -1.0);
}

TEST_CASE("advantages match a brute-force pooled z-score") {
  camtraj::Rng rng(71);
  for (int trial = 0; trial < 30; ++trial) {
    auto group = random_group(rng, 8, 4);
    if (trial == 0)
      for (auto& r : group.rollouts) r.failed = false;

    double sum = 0.0;
    int count = 0;
    for (const auto& r : group.rollouts) {
      if (r.failed) continue;
      for (int k = 0; k < 4; ++k)
        if (r.mask[k]) {
          sum += r.scores[k];
          ++count;
        }
    }
    if (count == 0) continue;
    const double mean = sum / count;
    double var = 0.0;
    for (const auto& r : group.rollouts) {
      if (r.failed) continue;
      for (int k = 0; k < 4; ++k)
        if (r.mask[k]) var += (r.scores[k] - mean) * (r.scores[k] - mean);
    }
    const double dev = std::sqrt(var / count);

    const double stability = 1e-8;
    const auto out = camtraj::group_advantages(group, stability);
    for (std::size_t i = 0; i < out.rollouts.size(); ++i) {
      const auto& r = out.rollouts[i];
      REQUIRE(r.advantages.size() == r.scores.size());
      for (int k = 0; k < 4; ++k) {
        if (!r.failed && r.mask[k]) {
          const double expected = (r.scores[k] - mean) / (dev + stability);
          CHECK(r.advantages[k] == doctest::Approx(expected).epsilon(1e-12));
        } else {
          CHECK(std::isnan(r.advantages[k]));
        }
      }
    }
  }
}

TEST_CASE("integer score shifts leave advantages bit-identical") {
  camtraj::Rng rng(72);
  // 16 pooled segments: integer sums divided by a power of two stay exact, so
  // shifting by an integer commutes with the mean bit-for-bit.
  RolloutGroup group;
  for (int i = 0; i < 4; ++i) {
    Rollout r;
    for (int k = 0; k < 4; ++k) {
      r.scores.push_back(static_cast<double>(static_cast<int>(rng.uniform() * 17) - 8));
      r.mask.push_back(true);
    }
    group.rollouts.push_back(std::move(r));
  }
  const auto base = camtraj::group_advantages(group, 1e-8);
  for (double shift : {1.0, -5.0, 128.0, 4096.0}) {
    auto shifted = group;
    for (auto& r : shifted.rollouts)
      for (auto& s : r.scores) s += shift;
    const auto out = camtraj::group_advantages(shifted, 1e-8);
    for (std::size_t i = 0; i < out.rollouts.size(); ++i)
      for (std::size_t k = 0; k < 4; ++k)
        CHECK(out.rollouts[i].advantages[k] == base.rollouts[i].advantages[k]);
  }
}

TEST_CASE("advantage normalization needs at least one usable segment") {
  RolloutGroup all_masked;
  all_masked.rollouts.push_back(make_rollout({-1.0, -2.0}, {false, false}));
  CHECK_THROWS_AS(camtraj::group_advantages(all_masked, 1e-8),
                  camtraj::geometry_error);

  RolloutGroup all_failed;
  all_failed.rollouts.push_back(make_rollout({-1.0}, {true}));
  all_failed.rollouts[0].failed = true;
  CHECK_THROWS_AS(camtraj::group_advantages(all_failed, 1e-8),
                  camtraj::geometry_error);

  RolloutGroup ok;
  ok.rollouts.push_back(make_rollout({-1.0, -2.0}, {true, true}));
  CHECK_THROWS_AS(camtraj::group_advantages(ok, -1.0), camtraj::config_error);
}

TEST_CASE("best-of-n selection matches a sort oracle") {
  camtraj::Rng rng(73);
  for (int trial = 0; trial < 30; ++trial) {
    auto group = random_group(rng, 10, 3);
    const int top = 1 + static_cast<int>(rng.uniform() * 3);
    const int bottom = 1 + static_cast<int>(rng.uniform() * 3);

    std::vector<std::pair<double, int>> ranked;
    for (int i = 0; i < 10; ++i) {
      const auto& r = group.rollouts[i];
      if (r.failed) continue;
      double sum = 0.0;
      int count = 0;
      for (std::size_t k = 0; k < r.scores.size(); ++k)
        if (r.mask[k]) {
          sum += r.scores[k];
          ++count;
        }
      if (count) ranked.emplace_back(sum / count, i);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    std::vector<bool> expected(10, false);
    const int n = static_cast<int>(ranked.size());
    for (int i = 0; i < std::min(top, n); ++i) expected[ranked[i].second] = true;
    for (int i = 0; i < std::min(bottom, n); ++i)
      expected[ranked[n - 1 - i].second] = true;

    const auto out = camtraj::select_best_of_n(group, top, bottom);
    for (int i = 0; i < 10; ++i) CHECK(out.rollouts[i].selected == expected[i]);
  }
}

TEST_CASE("selection breaks ties by the lower rollout index") {
  RolloutGroup group;
  for (int i = 0; i < 4; ++i) group.rollouts.push_back(make_rollout({-2.0}, {true}));
  const auto out = camtraj::select_best_of_n(group, 1, 1);
  CHECK(out.rollouts[0].selected);   // top slot
  CHECK(!out.rollouts[1].selected);
  CHECK(!out.rollouts[2].selected);
  CHECK(out.rollouts[3].selected);   // bottom slot
}

TEST_CASE("unrankable rollouts are never selected") {
  RolloutGroup group;
  group.rollouts.push_back(make_rollout({-5.0}, {true}));
  group.rollouts.push_back(make_rollout({-1.0}, {false}));  // fully masked
  auto failed = make_rollout({-0.1}, {true});
  failed.failed = true;
  group.rollouts.push_back(failed);

  const auto out = camtraj::select_best_of_n(group, 2, 1);
  CHECK(out.rollouts[0].selected);
  CHECK(!out.rollouts[1].selected);
  CHECK(!out.rollouts[2].selected);

  CHECK_THROWS_AS(camtraj::select_best_of_n(out, 2, 2), camtraj::config_error);
}

TEST_CASE("clipped term agrees with the piecewise form") {
  const double clip = 0.2;
  for (double ratio : {0.0, 0.5, 0.8, 0.99, 1.0, 1.01, 1.2, 1.7, 4.0}) {
    for (double adv : {-2.0, -0.5, 0.0, 0.5, 2.0}) {
      // Pessimistic surrogate: gains are capped above, losses are not.
      const double expected = adv >= 0.0 ? adv * std::min(ratio, 1.0 + clip)
                                         : adv * std::max(ratio, 1.0 - clip);
      const double got = camtraj::clipped_term(ratio, adv, clip);
      CHECK(got == doctest::Approx(expected).epsilon(1e-15));
      CHECK(got <= ratio * adv + 1e-15);
    }
  }
}

TEST_CASE("step log density matches a per-component sum") {
  camtraj::Rng rng(74);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + static_cast<int>(rng.uniform() * 8);
    const Eigen::VectorXd x = rng.normal_vector(d);
    const Eigen::VectorXd mean = rng.normal_vector(d);
    const double sigma = 0.1 + rng.uniform();

    double expected = 0.0;
    for (int i = 0; i < d; ++i) {
      expected += -std::log(sigma * std::sqrt(2.0 * M_PI)) -
                  (x[i] - mean[i]) * (x[i] - mean[i]) / (2.0 * sigma * sigma);
    }
    CHECK(camtraj::gaussian_step_log_density(x, mean, sigma) ==
          doctest::Approx(expected).epsilon(1e-12));
  }

  const Eigen::VectorXd a = Eigen::VectorXd::Zero(3);
  const Eigen::VectorXd b = Eigen::VectorXd::Zero(4);
  CHECK_THROWS_AS(camtraj::gaussian_step_log_density(a, b, 1.0),
                  camtraj::config_error);
  CHECK_THROWS_AS(camtraj::gaussian_step_log_density(a, a, 0.0),
                  camtraj::config_error);
}

TEST_CASE("gaussian KL matches a Monte Carlo estimate") {
  camtraj::Rng rng(75);
  const int d = 3;
  const Eigen::VectorXd mean_a = rng.normal_vector(d);
  const Eigen::VectorXd mean_b = rng.normal_vector(d);
  const double sigma = 0.8;

  const int samples = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Eigen::VectorXd x = mean_a + sigma * rng.normal_vector(d);
    // log p(x) - log q(x) for equal-sigma isotropic Gaussians.
    const double lr = ((x - mean_b).squaredNorm() - (x - mean_a).squaredNorm()) /
                      (2.0 * sigma * sigma);
    sum += lr;
    sum_sq += lr * lr;
  }
  const double mc = sum / samples;
  const double se = std::sqrt((sum_sq / samples - mc * mc) / samples);
  const double exact = camtraj::kl_gaussian(mean_a, mean_b, sigma);
  CHECK(std::abs(exact - mc) < 4.0 * se + 1e-12);
  CHECK(camtraj::kl_gaussian(mean_a, mean_a, sigma) == 0.0);
}

TEST_CASE("objective equals the brute-force double loop") {
  camtraj::Rng rng(76);
  GrpoConfig config;
  config.group_size = 6;
  config.top_count = 2;
  config.bottom_count = 2;
  config.sde_steps = 3;
  config.total_steps = 5;

  for (int trial = 0; trial < 30; ++trial) {
    RolloutGroup group;
    for (int i = 0; i < 6; ++i) {
      Rollout r;
      for (int k = 0; k < 4; ++k) {
        r.scores.push_back(-2.0 * rng.uniform());
        r.mask.push_back(rng.uniform() < 0.8);
      }
      for (int t = 0; t < 3; ++t) {
        r.old_log_density.push_back(-10.0 * rng.uniform());
        r.new_log_density.push_back(r.old_log_density.back() + 0.3 * rng.normal());
        r.kl.push_back(rng.uniform());
      }
      r.failed = rng.uniform() < 0.1;
      group.rollouts.push_back(std::move(r));
    }
    bool any_usable = false;
    for (const auto& r : group.rollouts) {
      if (r.failed) continue;
      for (bool m : r.mask) any_usable = any_usable || m;
    }
    if (!any_usable) continue;
    group = camtraj::group_advantages(group, config.stability);
    group = camtraj::select_best_of_n(group, 2, 2);

    double clip_sum = 0.0, kl_sum = 0.0;
    int clip_count = 0, kl_count = 0;
    for (const auto& r : group.rollouts) {
      if (!r.selected || r.failed) continue;
      for (int t = 0; t < 3; ++t) {
        const double ratio = std::exp(r.new_log_density[t] - r.old_log_density[t]);
        for (int k = 0; k < 4; ++k) {
          if (!r.mask[k]) continue;
          const double adv = r.advantages[k];
          const double clipped =
              std::min(std::max(ratio, 1.0 - config.clip_range), 1.0 + config.clip_range);
          clip_sum += std::min(ratio * adv, clipped * adv);
          ++clip_count;
        }
        kl_sum += r.kl[t];
        ++kl_count;
      }
    }
    const double expected = (clip_count ? clip_sum / clip_count : 0.0) -
                            config.kl_weight * (kl_count ? kl_sum / kl_count : 0.0);
    CHECK(camtraj::grpo_objective(group, config) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("objective of an empty selection is zero") {
  GrpoConfig config;
  config.group_size = 2;
  config.top_count = 1;
  config.bottom_count = 1;

  RolloutGroup group;
  group.rollouts.push_back(make_rollout({-1.0}, {true}));
  group.rollouts.back().advantages = {0.5};
  CHECK(camtraj::grpo_objective(group, config) == 0.0);

  // No stochastic steps: all means are empty, objective collapses to zero.
  auto selected = make_rollout({-1.0}, {true});
  selected.advantages = {0.5};
  selected.selected = true;
  RolloutGroup ode_only;
  ode_only.rollouts.push_back(selected);
  GrpoConfig ode_config = config;
  ode_config.sde_steps = 0;
  CHECK(camtraj::grpo_objective(ode_only, ode_config) == 0.0);
}

TEST_CASE("objective rejects inconsistent rollout payloads") {
  GrpoConfig config;
  config.group_size = 1;
  config.top_count = 1;
  config.bottom_count = 0;

  Rollout r = make_rollout({-1.0}, {true});
  r.selected = true;
  r.old_log_density = {-1.0, -2.0};
  r.new_log_density = {-1.0};  // size mismatch
  r.kl = {0.1, 0.2};
  r.advantages = {0.5};
  RolloutGroup group;
  group.rollouts.push_back(r);
  CHECK_THROWS_AS(camtraj::grpo_objective(group, config), camtraj::config_error);

  group.rollouts[0].new_log_density = {-1.0, std::nan("")};
  CHECK_THROWS_AS(camtraj::grpo_objective(group, config), camtraj::config_error);

  group.rollouts[0].new_log_density = {-1.0, -2.0};
  group.rollouts[0].advantages = {};
  CHECK_THROWS_AS(camtraj::grpo_objective(group, config), camtraj::config_error);
}

TEST_CASE("config validation rejects each bad field") {
  GrpoConfig good;
  CHECK_NOTHROW(good.validate());

  auto expect_throw = [](GrpoConfig c) {
    CHECK_THROWS_AS(c.validate(), camtraj::config_error);
  };
  GrpoConfig c = good;
  c.group_size = 0; expect_throw(c);
  c = good; c.top_count = -1; expect_throw(c);
  c = good; c.top_count = 0; c.bottom_count = 0; expect_throw(c);
  c = good; c.group_size = 7; expect_throw(c);  // < top + bottom
  c = good; c.clip_range = 0.0; expect_throw(c);
  c = good; c.kl_weight = -1.0; expect_throw(c);
  c = good; c.stability = -1e-9; expect_throw(c);
  c = good; c.total_steps = 0; expect_throw(c);
  c = good; c.sde_steps = 15; expect_throw(c);
  c = good; c.sde_steps = -1; expect_throw(c);
  c = good; c.sde_noise_level = 1.5; expect_throw(c);
  c = good; c.sde_noise_level = 0.0; expect_throw(c);  // sde_steps > 0 needs noise
}
