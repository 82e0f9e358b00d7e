#include "ptrack/config.hpp"

#include <fstream>
#include <set>

namespace ptrack {

using nlohmann::json;

RunConfig::RunConfig() {
  dataset.kinds = {{"stand", 8}, {"lean", 8}, {"squat", 8},
                   {"walk", 8},  {"hop", 8},  {"kick", 8}};
  dataset.k = 6;
  stage2.env = env;
  stage2.rewards = rewards;
  distill.env = env;
  distill.rewards = rewards;
}

void RunConfig::validate() const {
  rewards.validate();
  ppo.validate();
  stage2.ppo.validate();
  if (dataset.k < 1) throw ConfigError("config: dataset.k must be >= 1");
  if (env.sim_dt <= 0.0) throw ConfigError("config: env.sim_dt must be positive");
  if (env.decimation < 1) throw ConfigError("config: env.decimation must be >= 1");
  if (stage2.history < 1) throw ConfigError("config: stage2.history must be >= 1");
  if (stage2.rollout_horizon < 1)
    throw ConfigError("config: stage2.rollout_horizon must be >= 1");
  env.ranges.validate();
  stage2.env.ranges.validate();
}

namespace {

void expect_keys(const json& obj, const std::set<std::string>& allowed,
                 const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("config: unknown field '" +
                        (path.empty() ? it.key() : path + "." + it.key()) + "'");
}

template <typename T>
void get_to(const json& obj, const char* key, T& out, const std::string& path) {
  if (!obj.contains(key)) return;
  try {
    obj.at(key).get_to(out);
  } catch (const json::exception&) {
    throw ConfigError("config: field '" + path + "." + key + "' has the wrong type");
  }
}

void parse_range(const json& obj, const char* key, Range& r, const std::string& path) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != 2)
    throw ConfigError("config: field '" + path + "." + key + "' must be [lo, hi]");
  r.lo = v[0].get<double>();
  r.hi = v[1].get<double>();
  if (r.lo > r.hi)
    throw ConfigError("config: field '" + path + "." + key + "' has lo > hi");
}

void parse_ranges(const json& obj, DisturbanceRanges& r, const std::string& path) {
  expect_keys(obj,
              {"floor_friction", "max_terrain_height", "noise_scale", "noise_octaves",
               "noise_persistence", "noise_lacunarity", "push_interval",
               "push_magnitude", "dof_friction_scale", "armature_scale",
               "torso_com_shift", "torso_mass_delta", "default_pose_jitter"},
              path);
  parse_range(obj, "floor_friction", r.floor_friction, path);
  get_to(obj, "max_terrain_height", r.max_terrain_height, path);
  parse_range(obj, "noise_scale", r.noise_scale, path);
  parse_range(obj, "noise_octaves", r.noise_octaves, path);
  parse_range(obj, "noise_persistence", r.noise_persistence, path);
  parse_range(obj, "noise_lacunarity", r.noise_lacunarity, path);
  parse_range(obj, "push_interval", r.push_interval, path);
  parse_range(obj, "push_magnitude", r.push_magnitude, path);
  parse_range(obj, "dof_friction_scale", r.dof_friction_scale, path);
  parse_range(obj, "armature_scale", r.armature_scale, path);
  parse_range(obj, "torso_com_shift", r.torso_com_shift, path);
  parse_range(obj, "torso_mass_delta", r.torso_mass_delta, path);
  parse_range(obj, "default_pose_jitter", r.default_pose_jitter, path);
}

void parse_ppo(const json& obj, PPOHyper& p, const std::string& path) {
  expect_keys(obj,
              {"gamma", "lambda", "clip_eps", "epochs", "minibatch_size", "value_coeff",
               "entropy_coeff", "lr", "horizon", "num_envs", "max_grad_norm"},
              path);
  get_to(obj, "gamma", p.gamma, path);
  get_to(obj, "lambda", p.lam, path);
  get_to(obj, "clip_eps", p.clip_eps, path);
  get_to(obj, "epochs", p.epochs, path);
  get_to(obj, "minibatch_size", p.minibatch_size, path);
  get_to(obj, "value_coeff", p.value_coeff, path);
  get_to(obj, "entropy_coeff", p.entropy_coeff, path);
  get_to(obj, "lr", p.lr, path);
  get_to(obj, "horizon", p.horizon, path);
  get_to(obj, "num_envs", p.num_envs, path);
  get_to(obj, "max_grad_norm", p.max_grad_norm, path);
}

void parse_env(const json& obj, EnvParams& e, const std::string& path) {
  expect_keys(obj, {"sim_dt", "decimation", "max_episode_s", "ranges"}, path);
  get_to(obj, "sim_dt", e.sim_dt, path);
  get_to(obj, "decimation", e.decimation, path);
  get_to(obj, "max_episode_s", e.max_episode_s, path);
  if (obj.contains("ranges")) parse_ranges(obj.at("ranges"), e.ranges, path + ".ranges");
}

int term_index(const std::string& name, const std::string& path) {
  for (int t = 0; t < kNumRewardTerms; ++t)
    if (name == kRewardTermNames[t]) return t;
  throw ConfigError("config: unknown reward term '" + path + "." + name + "'");
}

}  // namespace

RunConfig parse_config_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: document must be a JSON object");
  RunConfig c;
  expect_keys(doc,
              {"version", "seed", "out_dir", "dataset", "rewards", "ppo", "env",
               "train", "distill", "stage2", "base_checkpoint", "eval"},
              "");
  get_to(doc, "version", c.version, "");
  if (c.version != 1) throw ConfigError("config: unsupported version");
  get_to(doc, "seed", c.seed, "");
  get_to(doc, "out_dir", c.out_dir, "");
  get_to(doc, "base_checkpoint", c.base_checkpoint, "");

  if (doc.contains("dataset")) {
    const json& d = doc.at("dataset");
    expect_keys(d, {"kinds", "k", "fps", "min_duration", "max_duration"}, "dataset");
    if (d.contains("kinds")) {
      c.dataset.kinds.clear();
      for (const json& ks : d.at("kinds")) {
        expect_keys(ks, {"kind", "count"}, "dataset.kinds");
        c.dataset.kinds.push_back(
            {ks.at("kind").get<std::string>(), ks.at("count").get<int>()});
      }
    }
    get_to(d, "k", c.dataset.k, "dataset");
    get_to(d, "fps", c.dataset.fps, "dataset");
    get_to(d, "min_duration", c.dataset.min_duration, "dataset");
    get_to(d, "max_duration", c.dataset.max_duration, "dataset");
  }

  if (doc.contains("rewards")) {
    const json& r = doc.at("rewards");
    expect_keys(r, {"weights", "sigmas"}, "rewards");
    if (r.contains("weights"))
      for (auto it = r.at("weights").begin(); it != r.at("weights").end(); ++it)
        c.rewards.weight[term_index(it.key(), "rewards.weights")] =
            it.value().get<double>();
    if (r.contains("sigmas"))
      for (auto it = r.at("sigmas").begin(); it != r.at("sigmas").end(); ++it)
        c.rewards.sigma[term_index(it.key(), "rewards.sigmas")] =
            it.value().get<double>();
  }

  if (doc.contains("ppo")) parse_ppo(doc.at("ppo"), c.ppo, "ppo");
  if (doc.contains("env")) parse_env(doc.at("env"), c.env, "env");

  if (doc.contains("train")) {
    const json& t = doc.at("train");
    expect_keys(t,
                {"budget_steps", "eval_every", "target_sr", "policy_hidden",
                 "critic_hidden"},
                "train");
    get_to(t, "budget_steps", c.train_budget, "train");
    get_to(t, "eval_every", c.train_eval_every, "train");
    get_to(t, "target_sr", c.train_target_sr, "train");
    get_to(t, "policy_hidden", c.policy_hidden, "train");
    get_to(t, "critic_hidden", c.critic_hidden, "train");
  }

  if (doc.contains("distill")) {
    const json& d = doc.at("distill");
    expect_keys(d,
                {"iterations", "states_per_iteration", "regress_epochs",
                 "minibatch_size", "lr", "rollout_envs"},
                "distill");
    get_to(d, "iterations", c.distill.iterations, "distill");
    get_to(d, "states_per_iteration", c.distill.states_per_iteration, "distill");
    get_to(d, "regress_epochs", c.distill.regress_epochs, "distill");
    get_to(d, "minibatch_size", c.distill.minibatch_size, "distill");
    get_to(d, "lr", c.distill.lr, "distill");
    get_to(d, "rollout_envs", c.distill.rollout_envs, "distill");
  }

  if (doc.contains("stage2")) {
    const json& s = doc.at("stage2");
    expect_keys(s,
                {"budget_steps", "history", "rollout_horizon", "e_dim",
                 "wm_minibatches", "wm_batch_windows", "wm_lr", "encoder_hidden",
                 "wm_hidden", "adapter_hidden", "replay_capacity", "use_world_model",
                 "eval_every", "eval_clips", "eval_seeds", "ppo", "ranges"},
                "stage2");
    get_to(s, "budget_steps", c.stage2.budget_steps, "stage2");
    get_to(s, "history", c.stage2.history, "stage2");
    get_to(s, "rollout_horizon", c.stage2.rollout_horizon, "stage2");
    get_to(s, "e_dim", c.stage2.e_dim, "stage2");
    get_to(s, "wm_minibatches", c.stage2.wm_minibatches, "stage2");
    get_to(s, "wm_batch_windows", c.stage2.wm_batch_windows, "stage2");
    get_to(s, "wm_lr", c.stage2.wm_lr, "stage2");
    get_to(s, "encoder_hidden", c.stage2.encoder_hidden, "stage2");
    get_to(s, "wm_hidden", c.stage2.wm_hidden, "stage2");
    get_to(s, "adapter_hidden", c.stage2.adapter_hidden, "stage2");
    get_to(s, "replay_capacity", c.stage2.replay_capacity, "stage2");
    get_to(s, "use_world_model", c.stage2.use_world_model, "stage2");
    get_to(s, "eval_every", c.stage2.eval_every, "stage2");
    get_to(s, "eval_clips", c.stage2.eval_clips, "stage2");
    get_to(s, "eval_seeds", c.stage2.eval_seeds, "stage2");
    if (s.contains("ppo")) parse_ppo(s.at("ppo"), c.stage2.ppo, "stage2.ppo");
    if (s.contains("ranges"))
      parse_ranges(s.at("ranges"), c.stage2.env.ranges, "stage2.ranges");
  }

  if (doc.contains("eval")) {
    const json& e = doc.at("eval");
    expect_keys(e, {"episodes_per_clip", "seeds"}, "eval");
    get_to(e, "episodes_per_clip", c.eval_episodes_per_clip, "eval");
    get_to(e, "seeds", c.eval_seeds, "eval");
  }

  // Propagate shared sections into the per-stage configs.
  c.stage2.rewards = c.rewards;
  c.stage2.env.sim_dt = c.env.sim_dt;
  c.stage2.env.decimation = c.env.decimation;
  c.stage2.env.max_episode_s = c.env.max_episode_s;
  c.distill.rewards = c.rewards;
  c.distill.env = c.env;
  c.distill.env.disturbances = false;
  c.distill.policy_hidden = c.policy_hidden;
  c.distill.seed = c.seed;
  c.stage2.seed = c.seed;

  c.validate();
  return c;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config: " + path + " is not valid JSON: " + e.what());
  }
  return parse_config_json(doc);
}

json config_to_json(const RunConfig& c) {
  json doc;
  doc["version"] = c.version;
  doc["seed"] = c.seed;
  doc["out_dir"] = c.out_dir;
  doc["base_checkpoint"] = c.base_checkpoint;

  json kinds = json::array();
  for (const auto& ks : c.dataset.kinds)
    kinds.push_back({{"kind", ks.kind}, {"count", ks.count}});
  doc["dataset"] = {{"kinds", kinds},
                    {"k", c.dataset.k},
                    {"fps", c.dataset.fps},
                    {"min_duration", c.dataset.min_duration},
                    {"max_duration", c.dataset.max_duration}};

  json weights, sigmas;
  for (int t = 0; t < kNumRewardTerms; ++t) {
    weights[kRewardTermNames[t]] = c.rewards.weight[t];
    sigmas[kRewardTermNames[t]] = c.rewards.sigma[t];
  }
  doc["rewards"] = {{"weights", weights}, {"sigmas", sigmas}};

  auto ppo_json = [](const PPOHyper& p) {
    return json{{"gamma", p.gamma},
                {"lambda", p.lam},
                {"clip_eps", p.clip_eps},
                {"epochs", p.epochs},
                {"minibatch_size", p.minibatch_size},
                {"value_coeff", p.value_coeff},
                {"entropy_coeff", p.entropy_coeff},
                {"lr", p.lr},
                {"horizon", p.horizon},
                {"num_envs", p.num_envs},
                {"max_grad_norm", p.max_grad_norm}};
  };
  doc["ppo"] = ppo_json(c.ppo);

  auto ranges_json = [](const DisturbanceRanges& r) {
    auto arr = [](const Range& range) { return json::array({range.lo, range.hi}); };
    return json{{"floor_friction", arr(r.floor_friction)},
                {"max_terrain_height", r.max_terrain_height},
                {"noise_scale", arr(r.noise_scale)},
                {"noise_octaves", arr(r.noise_octaves)},
                {"noise_persistence", arr(r.noise_persistence)},
                {"noise_lacunarity", arr(r.noise_lacunarity)},
                {"push_interval", arr(r.push_interval)},
                {"push_magnitude", arr(r.push_magnitude)},
                {"dof_friction_scale", arr(r.dof_friction_scale)},
                {"armature_scale", arr(r.armature_scale)},
                {"torso_com_shift", arr(r.torso_com_shift)},
                {"torso_mass_delta", arr(r.torso_mass_delta)},
                {"default_pose_jitter", arr(r.default_pose_jitter)}};
  };
  doc["env"] = {{"sim_dt", c.env.sim_dt},
                {"decimation", c.env.decimation},
                {"max_episode_s", c.env.max_episode_s},
                {"ranges", ranges_json(c.env.ranges)}};

  doc["train"] = {{"budget_steps", c.train_budget},
                  {"eval_every", c.train_eval_every},
                  {"target_sr", c.train_target_sr},
                  {"policy_hidden", c.policy_hidden},
                  {"critic_hidden", c.critic_hidden}};

  doc["distill"] = {{"iterations", c.distill.iterations},
                    {"states_per_iteration", c.distill.states_per_iteration},
                    {"regress_epochs", c.distill.regress_epochs},
                    {"minibatch_size", c.distill.minibatch_size},
                    {"lr", c.distill.lr},
                    {"rollout_envs", c.distill.rollout_envs}};

  doc["stage2"] = {{"budget_steps", c.stage2.budget_steps},
                   {"history", c.stage2.history},
                   {"rollout_horizon", c.stage2.rollout_horizon},
                   {"e_dim", c.stage2.e_dim},
                   {"wm_minibatches", c.stage2.wm_minibatches},
                   {"wm_batch_windows", c.stage2.wm_batch_windows},
                   {"wm_lr", c.stage2.wm_lr},
                   {"encoder_hidden", c.stage2.encoder_hidden},
                   {"wm_hidden", c.stage2.wm_hidden},
                   {"adapter_hidden", c.stage2.adapter_hidden},
                   {"replay_capacity", c.stage2.replay_capacity},
                   {"use_world_model", c.stage2.use_world_model},
                   {"eval_every", c.stage2.eval_every},
                   {"eval_clips", c.stage2.eval_clips},
                   {"eval_seeds", c.stage2.eval_seeds},
                   {"ppo", ppo_json(c.stage2.ppo)},
                   {"ranges", ranges_json(c.stage2.env.ranges)}};

  doc["eval"] = {{"episodes_per_clip", c.eval_episodes_per_clip},
                 {"seeds", c.eval_seeds}};
  return doc;
}

std::string config_hash(const RunConfig& config) {
  const std::string dump = config_to_json(config).dump();
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_resolved_config(const RunConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("config: cannot write " + path);
  out << config_to_json(config).dump(2) << "\n";
}

}  // namespace ptrack
