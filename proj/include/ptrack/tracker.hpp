#pragma once

#include <Eigen/Core>
#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ptrack/checkpoint.hpp"
#include "ptrack/dynamics.hpp"
#include "ptrack/motions.hpp"
#include "ptrack/netcore.hpp"

namespace ptrack {

// q_d = q_target_next + alpha * tanh(policy_out), elementwise.
Eigen::VectorXd canonicalize_action(const Eigen::VectorXd& policy_out,
                                    const Eigen::VectorXd& q_target_next,
                                    const Eigen::VectorXd& action_scale);

enum RewardTerm : int {
  kUpperBodyPos = 0,
  kLowerBodyPos,
  kTorsoPitch,
  kBodyRot,
  kBodyLinVel,
  kBodyAngVel,
  kDofPos,
  kDofVel,
  kRootLinVel,
  kRootAngVel,
  kRootHeight,
  kFeetHeight,
  kActionRate,
  kDofVelRate,
  kTorques,
  kDofPosLimits,
  kDofVelLimits,
  kSelfCollision,
  kTermination,
  kNumRewardTerms
};

extern const std::array<const char*, kNumRewardTerms> kRewardTermNames;

struct RewardWeights {
  std::array<double, kNumRewardTerms> weight;
  std::array<double, kNumRewardTerms> sigma;  // kernel widths for task terms
  RewardWeights();                            // published defaults
  void validate() const;
  double task_weight_sum() const;
};

struct RewardBreakdown {
  std::array<double, kNumRewardTerms> term{};
  double total = 0.0;
};

struct RewardInputs {
  const SimState* state = nullptr;  // after the control step
  const TrackingGoal* goal = nullptr;
  Eigen::VectorXd action;       // tanh-squashed, current
  Eigen::VectorXd prev_action;  // tanh-squashed, previous control step
  Eigen::VectorXd qdot_prev;    // joint velocities before the control step
  Eigen::VectorXd torques;      // per-joint RMS over the control step
  bool terminated = false;
};

RewardBreakdown compute_reward(const RobotModel& model, const Terrain& terrain,
                               const RewardWeights& weights, const RewardInputs& in);

struct TrackingErrors {
  double mean_link_pos = 0.0;  // m, base-local
  double root_height = 0.0;    // m, signed
};
TrackingErrors tracking_errors(const RobotModel& model, const Terrain& terrain,
                               const SimState& state, const TrackingGoal& goal);

// Mirrors the SR failure rule plus a fall guard on base pitch.
bool check_termination(const RobotModel& model, const Terrain& terrain,
                       const SimState& state, const TrackingGoal& goal);

// Raw generalized advantage estimation (no normalization); returns and
// advantages, with `dones` masking episode boundaries and `bootstrap_value`
// standing in for V(s_T).
void gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
         const std::vector<uint8_t>& dones, double bootstrap_value, double gamma,
         double lam, Eigen::VectorXd& advantages, Eigen::VectorXd& returns);

struct PPOHyper {
  double gamma = 0.99;
  double lam = 0.95;
  double clip_eps = 0.2;
  int epochs = 4;
  int minibatch_size = 1024;
  double value_coeff = 0.5;
  double entropy_coeff = 0.005;
  double lr = 3e-4;
  int horizon = 64;
  int num_envs = 64;
  double max_grad_norm = 2.0;
  void validate() const;
};

struct RolloutBatch {
  // Column t * num_envs + e.
  Eigen::MatrixXd obs, priv, goal, act_raw, embed;
  Eigen::VectorXd logp, value, reward;
  std::vector<uint8_t> done, terminated;
  Eigen::VectorXd advantages, returns;  // filled by compute_gae
  int horizon = 0, num_envs = 0;
  int divergences = 0;
  bool all_nominal = true;
  std::array<double, kNumRewardTerms> mean_terms{};

  int size() const { return horizon * num_envs; }
};

// Per-env-lane GAE over the batch layout, followed by nothing else; advantage
// normalization happens inside ppo_update.
void compute_gae(RolloutBatch& batch, const Eigen::VectorXd& bootstrap_values,
                 double gamma, double lam);

// Actor abstraction shared by the stage-1 policy and the stage-2 fused
// policy; `input` already carries [obs; goal] (+ dynamics embedding rows).
class Actor {
 public:
  virtual ~Actor() = default;
  virtual Eigen::MatrixXd mean(const Eigen::MatrixXd& input, bool keep_cache) = 0;
  virtual void backward_mean(const Eigen::MatrixXd& dmean) = 0;
  virtual void zero_grad() = 0;
  virtual std::vector<Param*> trainable_params() = 0;
  virtual GaussianHead& head() = 0;
  virtual bool trains_log_std() const = 0;
  virtual long& opt_step() = 0;
  virtual int input_size() const = 0;
};

// Stage-1 MLP policy.
class MlpActor : public Actor {
 public:
  MlpActor() = default;
  MlpActor(const std::vector<int>& sizes, Rng& rng, double log_std_init = -0.7);

  Eigen::MatrixXd mean(const Eigen::MatrixXd& input, bool keep_cache) override;
  void backward_mean(const Eigen::MatrixXd& dmean) override;
  void zero_grad() override;
  std::vector<Param*> trainable_params() override;
  GaussianHead& head() override { return head_; }
  bool trains_log_std() const override { return true; }
  long& opt_step() override { return opt_step_; }
  int input_size() const override { return mlp_.input_size(); }

  Mlp& mlp() { return mlp_; }
  const Mlp& mlp() const { return mlp_; }
  const GaussianHead& head() const { return head_; }
  std::vector<NamedParam> named_params(const std::string& prefix = "policy");

 private:
  Mlp mlp_;
  GaussianHead head_;
  Mlp::Cache cache_;
  long opt_step_ = 0;
};

struct Critic {
  Mlp mlp;
  long opt_step = 0;
  Mlp::Cache cache;
  Critic() = default;
  Critic(const std::vector<int>& sizes, Rng& rng) : mlp(sizes, rng, 1.0) {}
  Eigen::VectorXd values(const Eigen::MatrixXd& input, bool keep_cache = false);
};

struct PpoStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  int skipped_minibatches = 0;
  int minibatches = 0;
};

PpoStats ppo_update(Actor& actor, Critic& critic, RolloutBatch& batch,
                    const PPOHyper& hyper, Rng& rng);

// ---- environment ----

struct RewardConfig {
  RewardWeights weights;
};

struct EnvParams {
  double sim_dt = 0.002;
  int decimation = 10;
  double max_episode_s = 8.0;
  bool disturbances = false;
  DisturbanceRanges ranges = DisturbanceRanges::all_enabled();
};

struct EnvStepResult {
  double reward = 0.0;
  bool done = false;
  bool terminated = false;
  bool diverged = false;
  RewardBreakdown breakdown;
  // Post-step quantities, valid even after a terminal step resets the env.
  SimState final_state;
  std::vector<Vec2> link_pos_local;  // executed, base-local
  TrackingErrors errors;             // against the goal used for this step
  // Pre-reset observations for bootstrap when the episode ends by timeout.
  Eigen::VectorXd final_priv;
  Eigen::VectorXd final_goal;
};

class TrackEnv {
 public:
  TrackEnv(const RobotModel& model, const MotionDataset& dataset,
           std::vector<int> clip_pool, const EnvParams& params,
           const RewardWeights& rewards, uint64_t seed);

  void reset();
  EnvStepResult step(const Eigen::VectorXd& raw_action);

  const Eigen::VectorXd& obs() const { return obs_; }
  const Eigen::VectorXd& priv() const { return priv_; }
  const Eigen::VectorXd& goal() const { return goal_; }
  const SimState& state() const { return state_; }
  const DynamicsConfig& config() const { return config_; }
  const Terrain& terrain() const { return terrain_; }
  const MotionClip& clip() const;
  int clip_index() const { return clip_index_; }
  bool config_is_nominal() const;
  const RobotModel& model() const { return model_; }
  double control_dt() const { return params_.sim_dt * params_.decimation; }
  Rng& rng() { return rng_; }

  // Deterministic evaluation entry: reset to a specific clip and phase.
  void reset_to(int clip_index, double phase, const DynamicsConfig& config);

 private:
  void sample_episode();
  void init_from_reference(double phase);
  void refresh_io();

  const RobotModel& model_;
  const MotionDataset& dataset_;
  std::vector<int> clip_pool_;
  EnvParams params_;
  RewardWeights rewards_;
  Rng rng_;

  SimState state_;
  DynamicsConfig config_;
  Terrain terrain_;
  std::vector<Push> pushes_;
  int clip_index_ = 0;
  double phase0_ = 0.0;
  double episode_t_ = 0.0;
  double episode_len_ = 0.0;
  Eigen::VectorXd obs_, priv_, goal_;
  TrackingGoal goal_struct_;
  Eigen::VectorXd prev_action_;
};

// Collect T control steps from every environment. `hooks` (optional) supply
// extra policy-input rows (the dynamics embedding) and observe transitions.
class RolloutHooks {
 public:
  virtual ~RolloutHooks() = default;
  virtual int extra_input_rows() const = 0;
  // Fill one column per environment (batched embedding computation).
  virtual void extra_inputs(Eigen::MatrixXd& out) = 0;
  virtual void on_transition(int env, const Eigen::VectorXd& obs_before,
                             const Eigen::VectorXd& action_tanh, bool episode_end) = 0;
};

RolloutBatch rollout(std::vector<std::unique_ptr<TrackEnv>>& envs, Actor& actor,
                     Critic& critic, int horizon, const PPOHyper& hyper,
                     RolloutHooks* hooks = nullptr);

// ---- stage-1 training ----

struct TrainConfig {
  long budget_steps = 2'000'000;
  int eval_every = 20;        // iterations
  int eval_episodes_per_clip = 1;
  double target_sr = -1.0;    // early stop when reached (<0 disables)
  std::vector<int> policy_hidden = {128, 128, 64};
  std::vector<int> critic_hidden = {128, 128, 64};
  PPOHyper ppo;
  RewardWeights rewards;
  EnvParams env;
  uint64_t seed = 0;
  std::string out_dir;
  std::string tag = "specialist";
};

struct TrainResult {
  std::string checkpoint_path;
  double best_sr = 0.0;
  double final_sr = 0.0;
  long env_steps = 0;
  std::string curve_csv;
};

TrainResult train_tracker(const RobotModel& model, const MotionDataset& dataset,
                          const std::vector<int>& clip_pool, const TrainConfig& config);

// Checkpoint helpers for the (policy, critic) pair.
void save_policy_checkpoint(const std::string& path, MlpActor& actor, Critic& critic,
                            long step, const nlohmann::json& hyper,
                            const std::string& config_hash = "");
nlohmann::json load_policy_checkpoint(const std::string& path, MlpActor& actor,
                                      Critic& critic);
// Architecture sizes recorded in a checkpoint header, for reconstruction.
std::vector<int> checkpoint_layer_sizes(const std::string& path, const std::string& net);

}  // namespace ptrack
