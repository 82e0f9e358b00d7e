#include <filesystem>
#include <fstream>
#include <iostream>

#include "ptrack/eval.hpp"
#include "ptrack/tracker.hpp"

namespace ptrack {

namespace fs = std::filesystem;
using nlohmann::json;

void save_policy_checkpoint(const std::string& path, MlpActor& actor, Critic& critic,
                            long step, const json& hyper,
                            const std::string& config_hash) {
  std::vector<NamedParam> params = actor.named_params("policy");
  for (auto& [name, p] : critic.mlp.named_params("critic")) params.push_back({name, p});
  json h = hyper;
  json psizes = json::array(), csizes = json::array();
  psizes.push_back(actor.mlp().input_size());
  for (const auto& l : actor.mlp().layers()) psizes.push_back(l.W.value.rows());
  csizes.push_back(critic.mlp.input_size());
  for (const auto& l : critic.mlp.layers()) csizes.push_back(l.W.value.rows());
  h["policy_sizes"] = psizes;
  h["critic_sizes"] = csizes;
  save_checkpoint(path, "tracker", params, step, h, config_hash);
}

json load_policy_checkpoint(const std::string& path, MlpActor& actor, Critic& critic) {
  std::vector<NamedParam> params = actor.named_params("policy");
  for (auto& [name, p] : critic.mlp.named_params("critic")) params.push_back({name, p});
  CheckpointMeta meta = load_checkpoint(path, params);
  actor.head().clamp();
  return meta.hyper;
}

std::vector<int> checkpoint_layer_sizes(const std::string& path, const std::string& net) {
  const CheckpointMeta meta = peek_checkpoint(path);
  const std::string key = net + "_sizes";
  if (!meta.hyper.contains(key))
    throw CheckpointError("checkpoint: header of " + path + " lacks " + key);
  return meta.hyper.at(key).get<std::vector<int>>();
}

namespace {

std::vector<int> net_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes;
  sizes.push_back(in);
  for (int h : hidden) sizes.push_back(h);
  sizes.push_back(out);
  return sizes;
}

double evaluate_sr(const RobotModel& model, const MotionDataset& dataset,
                   const std::vector<int>& clip_pool, MlpActor& actor,
                   int episodes_per_clip, double max_episode_s) {
  MlpController controller(actor);
  std::vector<uint64_t> seeds;
  for (int i = 0; i < episodes_per_clip; ++i) seeds.push_back(1000 + i);
  EvalScenario scenario = EvalScenario::named("no_disturbance", clip_pool, seeds);
  scenario.max_episode_s = max_episode_s;
  return run_scenario(model, dataset, scenario, controller).sr;
}

}  // namespace

TrainResult train_tracker(const RobotModel& model, const MotionDataset& dataset,
                          const std::vector<int>& clip_pool, const TrainConfig& config) {
  config.ppo.validate();
  config.rewards.validate();
  if (clip_pool.empty()) throw ConfigError("train_tracker: empty clip pool");
  fs::create_directories(config.out_dir);

  const int obs_dim = observation_size(model);
  const int priv_dim = privileged_observation_size(model);
  const int goal_dim = TrackingGoal::flat_size(model);
  const int act_dim = model.num_joints();

  Rng rng(config.seed);
  MlpActor actor(net_sizes(obs_dim + goal_dim, config.policy_hidden, act_dim), rng);
  Critic critic(net_sizes(priv_dim + goal_dim, config.critic_hidden, 1), rng);

  std::vector<std::unique_ptr<TrackEnv>> envs;
  for (int e = 0; e < config.ppo.num_envs; ++e)
    envs.push_back(std::make_unique<TrackEnv>(model, dataset, clip_pool, config.env,
                                              config.rewards, rng.split()));

  const std::string curve_path =
      (fs::path(config.out_dir) / (config.tag + "_curve.csv")).string();
  std::ofstream curve(curve_path);
  curve << "iteration,env_steps,mean_reward,sr,policy_loss,value_loss,entropy,"
           "approx_kl,clip_fraction,divergences";
  for (const char* name : kRewardTermNames) curve << "," << name;
  curve << "\n";

  TrainResult result;
  MlpActor best_actor = actor;
  Critic best_critic = critic;
  double best_sr = -1.0;
  long steps = 0;
  int iter = 0;

  while (steps < config.budget_steps) {
    RolloutBatch batch = rollout(envs, actor, critic, config.ppo.horizon, config.ppo);
    steps += batch.size();
    PpoStats stats = ppo_update(actor, critic, batch, config.ppo, rng);
    ++iter;

    const bool last = steps >= config.budget_steps;
    double sr = -1.0;
    if (iter % config.eval_every == 0 || last || iter == 1) {
      sr = evaluate_sr(model, dataset, clip_pool, actor, config.eval_episodes_per_clip,
                       config.env.max_episode_s);
      if (sr > best_sr) {
        best_sr = sr;
        best_actor = actor;
        best_critic = critic;
      }
    }

    curve << iter << "," << steps << "," << batch.reward.mean() << ","
          << (sr >= 0.0 ? sr : -1.0) << "," << stats.policy_loss << ","
          << stats.value_loss << "," << stats.entropy << "," << stats.approx_kl << ","
          << stats.clip_fraction << "," << batch.divergences;
    for (double v : batch.mean_terms) curve << "," << v;
    curve << "\n";
    curve.flush();

    if (config.target_sr >= 0.0 && sr >= config.target_sr) break;
  }

  result.env_steps = steps;
  result.best_sr = best_sr;
  result.final_sr = best_sr;
  result.curve_csv = curve_path;
  result.checkpoint_path = (fs::path(config.out_dir) / (config.tag + ".ckpt")).string();

  json hyper;
  hyper["tag"] = config.tag;
  hyper["best_sr"] = best_sr;
  hyper["env_steps"] = steps;
  save_policy_checkpoint(result.checkpoint_path, best_actor, best_critic, steps, hyper);
  return result;
}

}  // namespace ptrack
