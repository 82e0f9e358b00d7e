#pragma once

#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "ptrack/eval.hpp"
#include "ptrack/tracker.hpp"

namespace ptrack {

// Ring buffer of (state, action) pairs; queries are zero-padded on the oldest
// side to exactly H entries.
class HistoryBuffer {
 public:
  HistoryBuffer() = default;
  HistoryBuffer(int capacity, int s_dim, int a_dim);

  void reset();
  void push(const Eigen::VectorXd& s, const Eigen::VectorXd& a);
  // Flattened [s; a] pairs, oldest to newest, length H * (s_dim + a_dim).
  Eigen::VectorXd flat() const;
  int fill() const { return static_cast<int>(entries_.size()); }
  int capacity() const { return capacity_; }

 private:
  int capacity_ = 0;
  int s_dim_ = 0;
  int a_dim_ = 0;
  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> entries_;
};

struct WmDims {
  int s_dim = 0;
  int a_dim = 0;
  int e_dim = 32;
  int history = 79;     // H
  int rollout = 20;     // N
  int window() const { return history + 1 + rollout; }
  int flat_history() const { return history * (s_dim + a_dim); }
};

struct HistoryEncoder {
  Mlp mlp;  // [H*(s+a) -> hidden -> e_dim]
  long opt_step = 0;
  HistoryEncoder() = default;
  HistoryEncoder(const WmDims& dims, const std::vector<int>& hidden, Rng& rng,
                 double final_scale = 1.0);
};

// Residual next-state predictor: s' = s + mlp([s; a; e]).
struct WorldModel {
  Mlp mlp;
  long opt_step = 0;
  WorldModel() = default;
  WorldModel(const WmDims& dims, const std::vector<int>& hidden, Rng& rng,
             double final_scale = 1.0);
};

Eigen::VectorXd encode_history(const HistoryEncoder& encoder, const HistoryBuffer& buffer);
Eigen::VectorXd wm_step(const WorldModel& wm, const Eigen::VectorXd& s_hat,
                        const Eigen::VectorXd& action, const Eigen::VectorXd& e);

// H+1+N consecutive pairs from a single episode.
struct WindowSample {
  Eigen::MatrixXd states;   // s_dim x window
  Eigen::MatrixXd actions;  // a_dim x window
  int episode_id = 0;
  int start = 0;
};

struct WmEval {
  double loss = 0.0;             // Eq.-style L1 sum, mean over windows
  double persistence = 0.0;      // same loss for the copy-state predictor
  double err_h1 = 0.0;           // mean |s - s_hat| at horizon 1
  double err_hN = 0.0;           // and at the last horizon
};

// Autoregressive world-model loss over a window batch: the embedding is
// re-encoded each step from a sliding history with predicted states
// substituted, gradients flow through both networks across all steps.
double wm_loss(HistoryEncoder& encoder, WorldModel& wm, const WmDims& dims,
               const std::vector<const WindowSample*>& windows, bool accumulate_grads,
               WmEval* eval = nullptr);

double persistence_loss(const WmDims& dims, const WindowSample& window);

// Step replay with episode boundaries; windows never span a boundary.
class ReplayBuffer {
 public:
  ReplayBuffer(int num_envs, int window, long capacity_steps, int holdout_every = 10);

  void push(int env, const Eigen::VectorXd& s, const Eigen::VectorXd& a);
  void end_episode(int env);
  bool sample(Rng& rng, WindowSample& out);          // training episodes
  bool sample_holdout(Rng& rng, WindowSample& out);  // held-out episodes
  long train_windows() const;
  long holdout_windows() const;

 private:
  struct Episode {
    Eigen::MatrixXd s, a;
    int len = 0;
    int id = 0;
  };
  const Episode* pick(Rng& rng, const std::deque<Episode>& pool) const;

  int window_ = 100;
  long capacity_ = 0;
  int holdout_every_ = 10;
  int next_id_ = 0;
  long train_steps_ = 0;
  std::vector<Episode> open_;
  std::deque<Episode> train_;
  std::deque<Episode> holdout_;
};

// Zero-initialized adapter: one fusion block per base layer, taking the
// layer's input and the dynamics embedding, adding a correction to the
// layer's output.
struct Adapter {
  std::vector<Mlp> blocks;
  int e_dim = 32;
  Adapter() = default;
  Adapter(const Mlp& base, int e_dim, int hidden, Rng& rng);
  std::vector<Param*> params();
  std::vector<NamedParam> named_params(const std::string& prefix = "adapter");
};

// Frozen base policy fused with the adapter; PPO trains the adapter only.
class AdapterActor : public Actor {
 public:
  AdapterActor(Mlp& base, GaussianHead& base_head, Adapter& adapter);

  // input rows: [obs; goal; e]
  Eigen::MatrixXd mean(const Eigen::MatrixXd& input, bool keep_cache) override;
  void backward_mean(const Eigen::MatrixXd& dmean) override;
  void zero_grad() override;
  std::vector<Param*> trainable_params() override;
  GaussianHead& head() override { return base_head_; }
  bool trains_log_std() const override { return false; }
  long& opt_step() override { return opt_step_; }
  int input_size() const override { return base_.input_size() + adapter_.e_dim; }

  // Fused forward for a single [obs; goal] vector plus embedding.
  Eigen::VectorXd mean_vec(const Eigen::VectorXd& obs_goal, const Eigen::VectorXd& e);

 private:
  Mlp& base_;
  GaussianHead& base_head_;
  Adapter& adapter_;
  long opt_step_ = 0;

  struct FusedCache {
    std::vector<Eigen::MatrixXd> layer_in;   // input to each base layer
    std::vector<Eigen::MatrixXd> base_act;   // activated base output per layer
    std::vector<Mlp::Cache> block_caches;
    Eigen::MatrixXd e;
  };
  FusedCache cache_;
  Eigen::MatrixXd fused_forward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& e,
                                FusedCache* cache);
};

// Deterministic evaluation controller with an internal history buffer.
class AdapterController : public Controller {
 public:
  AdapterController(Mlp& base, GaussianHead& head, Adapter& adapter,
                    HistoryEncoder& encoder, const WmDims& dims);
  void reset() override;
  Eigen::VectorXd act(const Eigen::VectorXd& obs, const Eigen::VectorXd& goal) override;

 private:
  AdapterActor actor_;
  HistoryEncoder& encoder_;
  HistoryBuffer buffer_;
};

struct AdaptConfig {
  long budget_steps = 1'500'000;
  int wm_minibatches = 12;  // per iteration
  int wm_batch_windows = 8;
  double wm_lr = 1e-3;
  std::vector<int> encoder_hidden = {128, 64};
  std::vector<int> wm_hidden = {128, 128};
  int adapter_hidden = 64;
  int e_dim = 32;
  int history = 79;
  int rollout_horizon = 20;
  long replay_capacity = 200'000;
  bool use_world_model = true;  // ablation switch
  int eval_every = 25;
  int eval_clips = 6;
  int eval_seeds = 2;
  PPOHyper ppo;
  RewardWeights rewards;
  EnvParams env;  // disturbances enabled by the caller
  uint64_t seed = 0;
  std::string out_dir;
  std::string tag = "adapter";
};

struct AdaptResult {
  std::string bundle_path;
  double best_disturbed_sr = -1.0;
  uint64_t base_hash_before = 0;
  uint64_t base_hash_after = 0;
  WmEval holdout;
  long env_steps = 0;
  std::string curve_csv;
};

AdaptResult train_adapter(const RobotModel& model, const MotionDataset& dataset,
                          const std::vector<int>& clip_pool,
                          const std::string& base_checkpoint, const AdaptConfig& config);

// Bundle IO: base policy + adapter + encoder + world model + critic.
struct AdapterBundle {
  MlpActor base;
  Critic critic;
  Adapter adapter;
  HistoryEncoder encoder;
  WorldModel wm;
  WmDims dims;
};

void save_adapter_bundle(const std::string& path, AdapterBundle& bundle, long step,
                         const nlohmann::json& extra_hyper = {});
std::unique_ptr<AdapterBundle> load_adapter_bundle(const std::string& path);

}  // namespace ptrack
