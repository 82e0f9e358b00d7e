#include <filesystem>
#include <fstream>

#include "ptrack/adapt.hpp"

namespace ptrack {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class AdaptHooks : public RolloutHooks {
 public:
  AdaptHooks(HistoryEncoder& enc, ReplayBuffer& replay, const WmDims& dims,
             int num_envs)
      : enc_(enc), replay_(replay), dims_(dims) {
    for (int e = 0; e < num_envs; ++e)
      buffers_.emplace_back(dims.history, dims.s_dim, dims.a_dim);
    flats_.resize(dims.flat_history(), num_envs);
  }

  int extra_input_rows() const override { return dims_.e_dim; }

  void extra_inputs(Eigen::MatrixXd& out) override {
    for (size_t e = 0; e < buffers_.size(); ++e) flats_.col(e) = buffers_[e].flat();
    out = enc_.mlp.forward(flats_);
  }

  void on_transition(int env, const Eigen::VectorXd& obs_before,
                     const Eigen::VectorXd& action_tanh, bool episode_end) override {
    replay_.push(env, obs_before, action_tanh);
    buffers_[env].push(obs_before, action_tanh);
    if (episode_end) {
      buffers_[env].reset();
      replay_.end_episode(env);
    }
  }

  std::vector<HistoryBuffer>& buffers() { return buffers_; }

 private:
  HistoryEncoder& enc_;
  ReplayBuffer& replay_;
  WmDims dims_;
  std::vector<HistoryBuffer> buffers_;
  Eigen::MatrixXd flats_;
};

std::vector<Param*> wm_train_params(HistoryEncoder& enc, WorldModel& wm) {
  std::vector<Param*> p = enc.mlp.params();
  for (Param* q : wm.mlp.params()) p.push_back(q);
  return p;
}

double disturbed_eval_sr(const RobotModel& model, const MotionDataset& dataset,
                         const std::vector<int>& clips, AdapterController& controller,
                         int num_seeds, uint64_t seed_base, double max_episode_s) {
  static const char* families[] = {"terrains", "external_forces",
                                   "physical_property_changes"};
  double sum = 0.0;
  for (const char* family : families) {
    std::vector<uint64_t> seeds;
    for (int i = 0; i < num_seeds; ++i) seeds.push_back(seed_base + i);
    EvalScenario scenario = EvalScenario::named(family, clips, seeds);
    scenario.max_episode_s = max_episode_s;
    sum += run_scenario(model, dataset, scenario, controller).sr;
  }
  return sum / 3.0;
}

}  // namespace

void save_adapter_bundle(const std::string& path, AdapterBundle& bundle, long step,
                         const json& extra_hyper) {
  std::vector<NamedParam> params = bundle.base.named_params("policy");
  for (auto& np : bundle.critic.mlp.named_params("critic")) params.push_back({np.first, np.second});
  for (auto& np : bundle.adapter.named_params("adapter")) params.push_back(np);
  for (auto& np : bundle.encoder.mlp.named_params("encoder")) params.push_back({np.first, np.second});
  for (auto& np : bundle.wm.mlp.named_params("wm")) params.push_back({np.first, np.second});

  json hyper = extra_hyper;
  auto sizes_of = [](const Mlp& mlp) {
    json sizes = json::array();
    sizes.push_back(mlp.input_size());
    for (const auto& l : mlp.layers()) sizes.push_back(l.W.value.rows());
    return sizes;
  };
  hyper["policy_sizes"] = sizes_of(bundle.base.mlp());
  hyper["critic_sizes"] = sizes_of(bundle.critic.mlp);
  hyper["encoder_sizes"] = sizes_of(bundle.encoder.mlp);
  hyper["wm_sizes"] = sizes_of(bundle.wm.mlp);
  hyper["adapter_hidden"] = bundle.adapter.blocks.empty()
                                ? 0
                                : static_cast<int>(
                                      bundle.adapter.blocks[0].layers()[0].W.value.rows());
  hyper["e_dim"] = bundle.dims.e_dim;
  hyper["history"] = bundle.dims.history;
  hyper["rollout"] = bundle.dims.rollout;
  hyper["s_dim"] = bundle.dims.s_dim;
  hyper["a_dim"] = bundle.dims.a_dim;
  save_checkpoint(path, "adapter_bundle", params, step, hyper);
}

std::unique_ptr<AdapterBundle> load_adapter_bundle(const std::string& path) {
  const CheckpointMeta meta = peek_checkpoint(path);
  if (meta.kind != "adapter_bundle")
    throw CheckpointError("load_adapter_bundle: " + path + " holds kind '" + meta.kind +
                          "'");
  const json& h = meta.hyper;
  auto bundle = std::make_unique<AdapterBundle>();
  bundle->dims.e_dim = h.at("e_dim").get<int>();
  bundle->dims.history = h.at("history").get<int>();
  bundle->dims.rollout = h.at("rollout").get<int>();
  bundle->dims.s_dim = h.at("s_dim").get<int>();
  bundle->dims.a_dim = h.at("a_dim").get<int>();

  Rng scratch(0);
  bundle->base = MlpActor(h.at("policy_sizes").get<std::vector<int>>(), scratch);
  bundle->critic = Critic(h.at("critic_sizes").get<std::vector<int>>(), scratch);
  const auto enc_sizes = h.at("encoder_sizes").get<std::vector<int>>();
  const auto wm_sizes = h.at("wm_sizes").get<std::vector<int>>();
  bundle->encoder.mlp = Mlp(enc_sizes, scratch);
  bundle->wm.mlp = Mlp(wm_sizes, scratch);
  bundle->adapter =
      Adapter(bundle->base.mlp(), bundle->dims.e_dim, h.at("adapter_hidden").get<int>(),
              scratch);

  std::vector<NamedParam> params = bundle->base.named_params("policy");
  for (auto& np : bundle->critic.mlp.named_params("critic")) params.push_back({np.first, np.second});
  for (auto& np : bundle->adapter.named_params("adapter")) params.push_back(np);
  for (auto& np : bundle->encoder.mlp.named_params("encoder")) params.push_back({np.first, np.second});
  for (auto& np : bundle->wm.mlp.named_params("wm")) params.push_back({np.first, np.second});
  load_checkpoint(path, params);
  bundle->base.head().clamp();
  return bundle;
}

AdaptResult train_adapter(const RobotModel& model, const MotionDataset& dataset,
                          const std::vector<int>& clip_pool,
                          const std::string& base_checkpoint, const AdaptConfig& config) {
  config.ppo.validate();
  fs::create_directories(config.out_dir);

  Rng rng(config.seed);
  MlpActor base(checkpoint_layer_sizes(base_checkpoint, "policy"), rng);
  Critic critic(checkpoint_layer_sizes(base_checkpoint, "critic"), rng);
  load_policy_checkpoint(base_checkpoint, base, critic);

  const uint64_t base_hash = hash_params(base.trainable_params());

  WmDims dims;
  dims.s_dim = observation_size(model);
  dims.a_dim = model.num_joints();
  dims.e_dim = config.e_dim;
  dims.history = config.history;
  dims.rollout = config.rollout_horizon;

  HistoryEncoder encoder(dims, config.encoder_hidden, rng);
  WorldModel wm(dims, config.wm_hidden, rng);
  Adapter adapter(base.mlp(), config.e_dim, config.adapter_hidden, rng);
  AdapterActor actor(base.mlp(), base.head(), adapter);

  EnvParams env_params = config.env;
  env_params.disturbances = true;

  std::vector<std::unique_ptr<TrackEnv>> envs;
  for (int e = 0; e < config.ppo.num_envs; ++e)
    envs.push_back(std::make_unique<TrackEnv>(model, dataset, clip_pool, env_params,
                                              config.rewards, rng.split()));

  ReplayBuffer replay(config.ppo.num_envs, dims.window(), config.replay_capacity);
  AdaptHooks hooks(encoder, replay, dims, config.ppo.num_envs);

  const std::string curve_path =
      (fs::path(config.out_dir) / (config.tag + "_curve.csv")).string();
  std::ofstream curve(curve_path);
  curve << "iteration,env_steps,mean_reward,wm_loss,wm_holdout,persistence_holdout,"
           "policy_loss,value_loss,approx_kl,disturbed_sr,divergences\n";

  std::vector<int> eval_clips(clip_pool.begin(),
                              clip_pool.begin() +
                                  std::min<size_t>(clip_pool.size(), config.eval_clips));

  AdaptResult result;
  result.base_hash_before = base_hash;
  result.curve_csv = curve_path;

  // Snapshots of the best bundle by validation disturbed SR.
  Adapter best_adapter = adapter;
  HistoryEncoder best_encoder = encoder;
  WorldModel best_wm = wm;
  Critic best_critic = critic;
  double best_sr = -1.0;

  long steps = 0;
  int iter = 0;
  long wm_opt_step = 0;

  while (steps < config.budget_steps) {
    RolloutBatch batch =
        rollout(envs, actor, critic, config.ppo.horizon, config.ppo, &hooks);
    steps += batch.size();
    ++iter;

    // World-model phase: the encoder learns only from the prediction task.
    double wm_train_loss = 0.0;
    int wm_batches = 0;
    if (config.use_world_model && replay.train_windows() > 0) {
      for (int k = 0; k < config.wm_minibatches; ++k) {
        std::vector<WindowSample> storage(config.wm_batch_windows);
        std::vector<const WindowSample*> ptrs;
        for (int b = 0; b < config.wm_batch_windows; ++b)
          if (replay.sample(rng, storage[b])) ptrs.push_back(&storage[b]);
        if (ptrs.empty()) break;
        encoder.mlp.zero_grad();
        wm.mlp.zero_grad();
        wm_train_loss += wm_loss(encoder, wm, dims, ptrs, true);
        adam_step(wm_train_params(encoder, wm), {config.wm_lr, 0.9, 0.999, 1e-8},
                  ++wm_opt_step);
        ++wm_batches;
      }
      if (wm_batches > 0) wm_train_loss /= wm_batches;
    }

    // Policy phase: PPO on the adapter (and critic); the frozen embedding
    // columns recorded during collection are reused as constant inputs.
    PpoStats stats = ppo_update(actor, critic, batch, config.ppo, rng);

    double sr = -1.0;
    WmEval holdout{};
    const bool last = steps >= config.budget_steps;
    if (iter % config.eval_every == 0 || last || iter == 1) {
      AdapterController controller(base.mlp(), base.head(), adapter, encoder, dims);
      sr = disturbed_eval_sr(model, dataset, eval_clips, controller, config.eval_seeds,
                             901, config.env.max_episode_s);
      if (sr >= best_sr) {
        best_sr = sr;
        best_adapter = adapter;
        best_encoder = encoder;
        best_wm = wm;
        best_critic = critic;
      }
      if (replay.holdout_windows() > 0) {
        std::vector<WindowSample> storage(
            std::min<long>(32, replay.holdout_windows()));
        std::vector<const WindowSample*> ptrs;
        for (auto& w : storage)
          if (replay.sample_holdout(rng, w)) ptrs.push_back(&w);
        if (!ptrs.empty()) wm_loss(encoder, wm, dims, ptrs, false, &holdout);
      }
    }

    curve << iter << "," << steps << "," << batch.reward.mean() << "," << wm_train_loss
          << "," << holdout.loss << "," << holdout.persistence << ","
          << stats.policy_loss << "," << stats.value_loss << "," << stats.approx_kl
          << "," << (sr >= 0.0 ? sr : -1.0) << "," << batch.divergences << "\n";
    curve.flush();
  }

  result.base_hash_after = hash_params(base.trainable_params());
  result.best_disturbed_sr = best_sr;
  result.env_steps = steps;

  // Held-out world-model evaluation of the returned bundle.
  {
    std::vector<WindowSample> storage(std::min<long>(64, replay.holdout_windows()));
    std::vector<const WindowSample*> ptrs;
    for (auto& w : storage)
      if (replay.sample_holdout(rng, w)) ptrs.push_back(&w);
    if (!ptrs.empty()) wm_loss(best_encoder, best_wm, dims, ptrs, false, &result.holdout);
  }

  AdapterBundle bundle;
  bundle.base = base;
  bundle.critic = best_critic;
  bundle.adapter = best_adapter;
  bundle.encoder = best_encoder;
  bundle.wm = best_wm;
  bundle.dims = dims;
  result.bundle_path = (fs::path(config.out_dir) / (config.tag + ".ckpt")).string();
  json hyper;
  hyper["tag"] = config.tag;
  hyper["best_disturbed_sr"] = best_sr;
  hyper["base_checkpoint"] = base_checkpoint;
  save_adapter_bundle(result.bundle_path, bundle, steps, hyper);
  return result;
}

}  // namespace ptrack
