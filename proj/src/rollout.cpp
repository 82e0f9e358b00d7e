#include "ptrack/tracker.hpp"

namespace ptrack {

RolloutBatch rollout(std::vector<std::unique_ptr<TrackEnv>>& envs, Actor& actor,
                     Critic& critic, int horizon, const PPOHyper& hyper,
                     RolloutHooks* hooks) {
  const int E = static_cast<int>(envs.size());
  if (E == 0) throw ConfigError("rollout: no environments");
  const RobotModel& model = envs[0]->model();
  const int obs_dim = observation_size(model);
  const int priv_dim = privileged_observation_size(model);
  const int goal_dim = TrackingGoal::flat_size(model);
  const int act_dim = model.num_joints();
  const int e_dim = hooks ? hooks->extra_input_rows() : 0;
  const int N = horizon * E;

  RolloutBatch batch;
  batch.horizon = horizon;
  batch.num_envs = E;
  batch.obs.resize(obs_dim, N);
  batch.priv.resize(priv_dim, N);
  batch.goal.resize(goal_dim, N);
  batch.act_raw.resize(act_dim, N);
  batch.embed.resize(e_dim, N);
  batch.logp.resize(N);
  batch.value.resize(N);
  batch.reward.resize(N);
  batch.done.assign(N, 0);
  batch.terminated.assign(N, 0);
  if (horizon == 0) return batch;

  Eigen::MatrixXd actor_in(obs_dim + goal_dim + e_dim, E);
  Eigen::MatrixXd critic_in(priv_dim + goal_dim, E);
  Eigen::MatrixXd extras(e_dim, E);

  std::array<double, kNumRewardTerms> term_sums{};

  for (int t = 0; t < horizon; ++t) {
    if (e_dim > 0) hooks->extra_inputs(extras);
    for (int e = 0; e < E; ++e) {
      const int col = t * E + e;
      batch.obs.col(col) = envs[e]->obs();
      batch.priv.col(col) = envs[e]->priv();
      batch.goal.col(col) = envs[e]->goal();
      actor_in.col(e).head(obs_dim) = envs[e]->obs();
      actor_in.col(e).segment(obs_dim, goal_dim) = envs[e]->goal();
      if (e_dim > 0) {
        actor_in.col(e).tail(e_dim) = extras.col(e);
        batch.embed.col(col) = extras.col(e);
      }
      critic_in.col(e).head(priv_dim) = envs[e]->priv();
      critic_in.col(e).tail(goal_dim) = envs[e]->goal();
      batch.all_nominal = batch.all_nominal && envs[e]->config_is_nominal();
    }

    const Eigen::MatrixXd mean = actor.mean(actor_in, false);
    const Eigen::VectorXd values = critic.values(critic_in);

    for (int e = 0; e < E; ++e) {
      const int col = t * E + e;
      const Eigen::VectorXd raw = actor.head().sample(mean.col(e), envs[e]->rng());
      batch.act_raw.col(col) = raw;
      batch.logp(col) = actor.head().log_prob(mean.col(e), raw);
      batch.value(col) = values(e);

      const Eigen::VectorXd obs_before = envs[e]->obs();
      EnvStepResult res = envs[e]->step(raw);
      if (hooks)
        hooks->on_transition(e, obs_before, raw.array().tanh(), res.done);

      double reward = res.reward;
      if (res.done && !res.terminated && res.final_priv.size() > 0) {
        // Timeout: bootstrap with the value of the final state.
        Eigen::MatrixXd fin(priv_dim + goal_dim, 1);
        fin.col(0).head(priv_dim) = res.final_priv;
        fin.col(0).tail(goal_dim) = res.final_goal;
        reward += hyper.gamma * critic.values(fin)(0);
      }
      batch.reward(col) = reward;
      batch.done[col] = res.done ? 1 : 0;
      batch.terminated[col] = res.terminated ? 1 : 0;
      if (res.diverged) ++batch.divergences;
      for (int k = 0; k < kNumRewardTerms; ++k) term_sums[k] += res.breakdown.term[k];
    }
  }

  for (int k = 0; k < kNumRewardTerms; ++k) batch.mean_terms[k] = term_sums[k] / N;

  // Bootstrap values for the state each env is left in.
  for (int e = 0; e < E; ++e) {
    critic_in.col(e).head(priv_dim) = envs[e]->priv();
    critic_in.col(e).tail(goal_dim) = envs[e]->goal();
  }
  const Eigen::VectorXd boot = critic.values(critic_in);
  compute_gae(batch, boot, hyper.gamma, hyper.lam);
  return batch;
}

}  // namespace ptrack
