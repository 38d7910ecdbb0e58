#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "camtraj/io.hpp"
#include "camtraj/metrics.hpp"
#include "camtraj/policy.hpp"
#include "camtraj/reward.hpp"

namespace fs = std::filesystem;

namespace {

struct RewardArgs {
  std::string gen_path, ref_path;
  std::string format = "native";
  std::string mode = "relative-relative";
  int segment_length = 0;
  double lambda_t = 1.0;
  double lambda_r = 1.0;
  double tau = 0.1;
  bool json = false;
};

struct EvalArgs {
  std::string gen_path, ref_path, conf_path;
  std::string format = "native";
  double tau = 0.1;
  bool json = false;
};

struct TrainArgs {
  std::string dataset_dir;
  std::string format = "native";
  std::string init_path, out_path = "policy.tpl1", log_path = "train_log.jsonl";
  std::string trainable = "all";
  std::string mode = "relative-relative";
  int group_size = 16, top = 4, bottom = 4;
  int total_steps = 14, sde_steps = 3;
  double sde_noise = 0.7, kl_weight = 1e-4, clip = 0.2, gamma = 1e-8;
  int segment_length = 0;
  double lambda_t = 1.0, lambda_r = 1.0, tau = 0.1;
  double sigma_max = 1.0, sigma_min = 0.05, shift = 1.0;
  int iters = 500;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct PlueckerArgs {
  std::string traj_path, out_path;
  std::string format = "native";
  int height = 0, width = 0;
};

int run_reward(const RewardArgs& args) {
  const auto format = camtraj::trajectory_format_from_string(args.format);
  const auto gen = camtraj::load_trajectory(args.gen_path, format);
  const auto ref = camtraj::load_trajectory(args.ref_path, format);
  camtraj::RewardConfig config;
  config.segment_length = args.segment_length;
  config.lambda_t = args.lambda_t;
  config.lambda_r = args.lambda_r;
  config.confidence_threshold = args.tau;
  config.mode = camtraj::reward_mode_from_string(args.mode);
  const auto report = camtraj::compute_reward(gen, ref, config);
  std::cout << (args.json ? camtraj::report_to_json(report) + "\n"
                          : camtraj::report_to_text(report));
  return 0;
}

int run_eval(const EvalArgs& args) {
  const auto format = camtraj::trajectory_format_from_string(args.format);
  const auto gen = camtraj::load_trajectory(args.gen_path, format);
  const auto ref = camtraj::load_trajectory(args.ref_path, format);
  std::vector<camtraj::ConfidenceMap> conf;
  camtraj::EvalInput input;
  input.name = fs::path(args.gen_path).stem().string();
  input.gen = &gen;
  input.ref = &ref;
  if (!args.conf_path.empty()) {
    conf = camtraj::load_confidence_maps(args.conf_path);
    input.confidence = &conf;
  }
  const auto report = camtraj::evaluate({input}, args.tau);
  std::cout << (args.json ? camtraj::report_to_json(report) + "\n"
                          : camtraj::report_to_table(report));
  return 0;
}

int run_train(const TrainArgs& args) {
  const auto format = camtraj::trajectory_format_from_string(args.format);
  if (!fs::is_directory(args.dataset_dir))
    throw camtraj::config_error("dataset directory not found: " + args.dataset_dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(args.dataset_dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<camtraj::Trajectory> dataset;
  for (const auto& file : files)
    dataset.push_back(camtraj::load_trajectory(file, format));
  if (dataset.empty()) throw camtraj::config_error("dataset directory is empty");

  camtraj::GrpoConfig grpo;
  grpo.group_size = args.group_size;
  grpo.top_count = args.top;
  grpo.bottom_count = args.bottom;
  grpo.clip_range = args.clip;
  grpo.kl_weight = args.kl_weight;
  grpo.stability = args.gamma;
  grpo.total_steps = args.total_steps;
  grpo.sde_steps = args.sde_steps;
  grpo.sde_noise_level = args.sde_noise;

  camtraj::RewardConfig reward;
  reward.segment_length = args.segment_length;
  reward.lambda_t = args.lambda_t;
  reward.lambda_r = args.lambda_r;
  reward.confidence_threshold = args.tau;
  reward.mode = camtraj::reward_mode_from_string(args.mode);

  const int state_dim = 6 * (static_cast<int>(dataset.front().size()) - 1);
  camtraj::PolicyParams params =
      args.init_path.empty()
          ? camtraj::PolicyParams::make(state_dim, args.total_steps, args.sigma_max,
                                        args.sigma_min, args.shift)
          : camtraj::load_policy(args.init_path);
  params.train_cond = params.train_state = params.train_bias = false;
  if (args.trainable == "all") {
    params.train_cond = params.train_state = params.train_bias = true;
  } else {
    std::string rest = args.trainable;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string part = rest.substr(0, comma);
      rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
      if (part == "condition") params.train_cond = true;
      else if (part == "state") params.train_state = true;
      else if (part == "bias") params.train_bias = true;
      else throw camtraj::config_error("unknown trainable block: " + part);
    }
  }

  camtraj::TrainOptions options;
  options.iterations = args.iters;
  options.learning_rate = args.lr;
  options.seed = args.seed;

  const auto result = camtraj::train(params, dataset, reward, grpo, options);

  std::ofstream log(args.log_path);
  if (!log) throw camtraj::parse_error("cannot open " + args.log_path + " for writing");
  for (const auto& entry : result.logs) log << camtraj::log_to_json(entry) << "\n";
  if (!log) throw camtraj::parse_error("failed writing " + args.log_path);
  log.close();

  camtraj::save_policy(args.out_path, result.params);

  char buf[128];
  if (!result.logs.empty() && !result.logs.front().skipped &&
      !result.logs.back().skipped) {
    std::snprintf(buf, sizeof(buf), "mean_reward first %.9g last %.9g\n",
                  result.logs.front().mean_reward, result.logs.back().mean_reward);
    std::cout << buf;
  }
  std::cout << "checkpoint " << args.out_path << "\n";
  std::cout << "log " << args.log_path << "\n";
  return 0;
}

int run_pluecker(const PlueckerArgs& args) {
  const auto format = camtraj::trajectory_format_from_string(args.format);
  const auto traj = camtraj::load_trajectory(args.traj_path, format);
  const auto maps = camtraj::pluecker_trajectory(traj, args.height, args.width);
  camtraj::save_pluecker_maps(args.out_path, maps);
  std::cout << "wrote " << maps.size() << " ray maps to " << args.out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"camera trajectory rewards, evaluation, and toy policy training"};
  app.require_subcommand(1);

  RewardArgs reward_args;
  auto* reward = app.add_subcommand("reward", "score a trajectory against a reference");
  reward->add_option("gen", reward_args.gen_path, "generated trajectory file")->required();
  reward->add_option("ref", reward_args.ref_path, "reference trajectory file")->required();
  reward->add_option("--format", reward_args.format, "trajectory format: native|tum");
  reward->add_option("--segment-length", reward_args.segment_length,
                     "frames per segment (0 = auto)");
  reward->add_option("--lambda-t", reward_args.lambda_t, "translation error weight");
  reward->add_option("--lambda-r", reward_args.lambda_r, "rotation error weight");
  reward->add_option("--tau", reward_args.tau, "confidence mask threshold");
  reward->add_option("--mode", reward_args.mode,
                     "relative-relative|relative-absolute|absolute-relative|clip-level");
  reward->add_flag("--json", reward_args.json, "emit JSON instead of text");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "pose accuracy metrics for a trajectory");
  eval->add_option("gen", eval_args.gen_path, "generated trajectory file")->required();
  eval->add_option("ref", eval_args.ref_path, "reference trajectory file")->required();
  eval->add_option("--conf", eval_args.conf_path, "confidence map file");
  eval->add_option("--format", eval_args.format, "trajectory format: native|tum");
  eval->add_option("--tau", eval_args.tau, "consistency threshold");
  eval->add_flag("--json", eval_args.json, "emit JSON instead of a table");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train-toy", "train the toy policy on a dataset");
  train->add_option("dataset", train_args.dataset_dir, "directory of reference clips")
      ->required();
  train->add_option("--format", train_args.format, "trajectory format: native|tum");
  train->add_option("--group-size", train_args.group_size, "rollouts per group");
  train->add_option("--top", train_args.top, "best rollouts kept");
  train->add_option("--bottom", train_args.bottom, "worst rollouts kept");
  train->add_option("--sde-steps", train_args.sde_steps, "stochastic steps");
  train->add_option("--total-steps", train_args.total_steps, "refinement steps");
  train->add_option("--kl-weight", train_args.kl_weight, "KL penalty weight");
  train->add_option("--clip", train_args.clip, "ratio clip half-width");
  train->add_option("--iters", train_args.iters, "training iterations");
  train->add_option("--seed", train_args.seed, "random seed");
  train->add_option("--lr", train_args.lr, "learning rate");
  train->add_option("--sde-noise", train_args.sde_noise, "noise level on SDE steps");
  train->add_option("--gamma", train_args.gamma, "advantage stability term");
  train->add_option("--segment-length", train_args.segment_length,
                    "frames per reward segment (0 = auto)");
  train->add_option("--mode", train_args.mode, "reward mode");
  train->add_option("--lambda-t", train_args.lambda_t, "translation error weight");
  train->add_option("--lambda-r", train_args.lambda_r, "rotation error weight");
  train->add_option("--tau", train_args.tau, "confidence mask threshold");
  train->add_option("--sigma-max", train_args.sigma_max, "first-step noise scale");
  train->add_option("--sigma-min", train_args.sigma_min, "last-step noise scale");
  train->add_option("--timestep-shift", train_args.shift,
                    "noise schedule shift exponent");
  train->add_option("--trainable", train_args.trainable,
                    "parameter blocks to update: all or a comma list of "
                    "condition,state,bias");
  train->add_option("--init", train_args.init_path, "initial checkpoint");
  train->add_option("--out", train_args.out_path, "output checkpoint path");
  train->add_option("--log", train_args.log_path, "output log path");

  PlueckerArgs pluecker_args;
  auto* pluecker = app.add_subcommand("pluecker", "export per-pixel ray maps");
  pluecker->add_option("traj", pluecker_args.traj_path, "trajectory file")->required();
  pluecker->add_option("out", pluecker_args.out_path, "output file")->required();
  pluecker->add_option("--format", pluecker_args.format, "trajectory format");
  pluecker->add_option("--height", pluecker_args.height, "map height in pixels")
      ->required();
  pluecker->add_option("--width", pluecker_args.width, "map width in pixels")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 4;
  }

  try {
    if (reward->parsed()) return run_reward(reward_args);
    if (eval->parsed()) return run_eval(eval_args);
    if (train->parsed()) return run_train(train_args);
    if (pluecker->parsed()) return run_pluecker(pluecker_args);
  } catch (const camtraj::parse_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const camtraj::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const camtraj::geometry_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
