#include <algorithm>
#include <cmath>
#include <numeric>

#include "ptrack/tracker.hpp"

namespace ptrack {

void PPOHyper::validate() const {
  if (gamma <= 0.0 || gamma > 1.0) throw ConfigError("ppo: gamma must be in (0, 1]");
  if (lam <= 0.0 || lam > 1.0) throw ConfigError("ppo: lambda must be in (0, 1]");
  if (clip_eps <= 0.0) throw ConfigError("ppo: clip epsilon must be positive");
  if (epochs < 1 || minibatch_size < 1 || horizon < 1 || num_envs < 1)
    throw ConfigError("ppo: epochs/minibatch/horizon/envs must be positive");
  if (lr <= 0.0) throw ConfigError("ppo: lr must be positive");
}

void gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
         const std::vector<uint8_t>& dones, double bootstrap_value, double gamma,
         double lam, Eigen::VectorXd& advantages, Eigen::VectorXd& returns) {
  const int T = static_cast<int>(rewards.size());
  if (values.size() != T || static_cast<int>(dones.size()) != T)
    throw ShapeError("gae: sequence lengths differ");
  advantages.resize(T);
  returns.resize(T);
  double last_adv = 0.0;
  for (int t = T - 1; t >= 0; --t) {
    const double not_done = dones[t] ? 0.0 : 1.0;
    const double next_value = (t == T - 1) ? bootstrap_value : values(t + 1);
    const double delta = rewards(t) + gamma * next_value * not_done - values(t);
    last_adv = delta + gamma * lam * not_done * last_adv;
    advantages(t) = last_adv;
    returns(t) = advantages(t) + values(t);
  }
}

void compute_gae(RolloutBatch& batch, const Eigen::VectorXd& bootstrap_values,
                 double gamma, double lam) {
  const int T = batch.horizon, E = batch.num_envs;
  batch.advantages.resize(T * E);
  batch.returns.resize(T * E);
  Eigen::VectorXd r(T), v(T), adv(T), ret(T);
  std::vector<uint8_t> d(T);
  for (int e = 0; e < E; ++e) {
    for (int t = 0; t < T; ++t) {
      r(t) = batch.reward(t * E + e);
      v(t) = batch.value(t * E + e);
      d[t] = batch.done[t * E + e];
    }
    gae(r, v, d, bootstrap_values(e), gamma, lam, adv, ret);
    for (int t = 0; t < T; ++t) {
      batch.advantages(t * E + e) = adv(t);
      batch.returns(t * E + e) = ret(t);
    }
  }
}

MlpActor::MlpActor(const std::vector<int>& sizes, Rng& rng, double log_std_init)
    : mlp_(sizes, rng, 0.01) {
  head_.setup(sizes.back(), log_std_init);
}

Eigen::MatrixXd MlpActor::mean(const Eigen::MatrixXd& input, bool keep_cache) {
  return mlp_.forward(input, keep_cache ? &cache_ : nullptr);
}

void MlpActor::backward_mean(const Eigen::MatrixXd& dmean) {
  mlp_.backward(cache_, dmean);
}

void MlpActor::zero_grad() {
  mlp_.zero_grad();
  head_.log_std.zero_grad();
}

std::vector<Param*> MlpActor::trainable_params() {
  std::vector<Param*> p = mlp_.params();
  p.push_back(&head_.log_std);
  return p;
}

std::vector<NamedParam> MlpActor::named_params(const std::string& prefix) {
  std::vector<NamedParam> out;
  for (auto& [name, param] : mlp_.named_params(prefix)) out.push_back({name, param});
  out.push_back({prefix + "/log_std", &head_.log_std});
  return out;
}

Eigen::VectorXd Critic::values(const Eigen::MatrixXd& input, bool keep_cache) {
  return mlp.forward(input, keep_cache ? &cache : nullptr).row(0).transpose();
}

namespace {

void clip_grad_norm(const std::vector<Param*>& params, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (Param* p : params) sq += p->grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (Param* p : params) p->grad *= s;
  }
}

}  // namespace

PpoStats ppo_update(Actor& actor, Critic& critic, RolloutBatch& batch,
                    const PPOHyper& hyper, Rng& rng) {
  hyper.validate();
  const int N = batch.size();
  PpoStats stats;
  if (N == 0) return stats;

  const int act_dim = actor.head().dim();
  const bool has_embed = batch.embed.rows() > 0;

  Eigen::MatrixXd actor_in(batch.obs.rows() + batch.goal.rows() +
                               (has_embed ? batch.embed.rows() : 0),
                           N);
  actor_in.topRows(batch.obs.rows()) = batch.obs;
  actor_in.middleRows(batch.obs.rows(), batch.goal.rows()) = batch.goal;
  if (has_embed) actor_in.bottomRows(batch.embed.rows()) = batch.embed;

  Eigen::MatrixXd critic_in(batch.priv.rows() + batch.goal.rows(), N);
  critic_in.topRows(batch.priv.rows()) = batch.priv;
  critic_in.bottomRows(batch.goal.rows()) = batch.goal;

  // z-normalized advantages
  Eigen::VectorXd adv = batch.advantages;
  const double mu = adv.mean();
  const double sd = std::sqrt((adv.array() - mu).square().mean() + 1e-8);
  adv = (adv.array() - mu) / sd;

  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);

  double sum_ploss = 0.0, sum_vloss = 0.0, sum_ent = 0.0, sum_kl = 0.0, sum_clip = 0.0;
  int n_mb = 0;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    // Fisher-Yates with the batch rng
    for (int i = N - 1; i > 0; --i)
      std::swap(order[i], order[rng.index(static_cast<uint64_t>(i + 1))]);

    for (int start = 0; start < N; start += hyper.minibatch_size) {
      const int mb = std::min(hyper.minibatch_size, N - start);
      Eigen::MatrixXd in_mb(actor_in.rows(), mb), act_mb(act_dim, mb),
          cin_mb(critic_in.rows(), mb);
      Eigen::VectorXd adv_mb(mb), logp_old(mb), ret_mb(mb);
      for (int i = 0; i < mb; ++i) {
        const int idx = order[start + i];
        in_mb.col(i) = actor_in.col(idx);
        act_mb.col(i) = batch.act_raw.col(idx);
        cin_mb.col(i) = critic_in.col(idx);
        adv_mb(i) = adv(idx);
        logp_old(i) = batch.logp(idx);
        ret_mb(i) = batch.returns(idx);
      }

      // ---- policy ----
      actor.zero_grad();
      Eigen::MatrixXd mean = actor.mean(in_mb, true);
      const Eigen::VectorXd inv_std =
          (-actor.head().log_std.value.col(0).array()).exp();
      Eigen::MatrixXd z = (act_mb - mean).array().colwise() * inv_std.array();
      Eigen::VectorXd logp_new =
          (-0.5 * z.array().square().colwise().sum()).transpose().matrix();
      const double log_norm =
          actor.head().log_std.value.sum() + 0.5 * act_dim * 1.8378770664093453;
      logp_new.array() -= log_norm;

      Eigen::VectorXd ratio = (logp_new - logp_old).array().exp();
      double ploss = 0.0, kl = 0.0;
      int clipped = 0;
      Eigen::VectorXd dlogp = Eigen::VectorXd::Zero(mb);
      for (int i = 0; i < mb; ++i) {
        const double r = ratio(i);
        const double surr1 = r * adv_mb(i);
        const double rc = std::clamp(r, 1.0 - hyper.clip_eps, 1.0 + hyper.clip_eps);
        const double surr2 = rc * adv_mb(i);
        ploss += -std::min(surr1, surr2);
        if (surr1 <= surr2) dlogp(i) = -adv_mb(i) * r / mb;
        if (std::abs(r - 1.0) > hyper.clip_eps) ++clipped;
        kl += logp_old(i) - logp_new(i);
      }
      ploss /= mb;
      kl /= mb;
      const double entropy = actor.head().entropy();

      if (!std::isfinite(ploss)) {
        ++stats.skipped_minibatches;
      } else {
        // dL/dmean = dL/dlogp * dlogp/dmean, with dlogp/dmean_i = z_i / std_i
        Eigen::MatrixXd dmean = (z.array().colwise() * inv_std.array()).matrix();
        for (int i = 0; i < mb; ++i) dmean.col(i) *= dlogp(i);
        actor.backward_mean(dmean);

        if (actor.trains_log_std()) {
          // dlogp/dlogstd_i = z_i^2 - 1; entropy bonus gradient is -coeff.
          Eigen::VectorXd dls = Eigen::VectorXd::Zero(act_dim);
          for (int i = 0; i < mb; ++i)
            dls += dlogp(i) * (z.col(i).array().square() - 1.0).matrix();
          dls.array() -= hyper.entropy_coeff;
          actor.head().log_std.grad.col(0) += dls;
        }

        auto tp = actor.trainable_params();
        clip_grad_norm(tp, hyper.max_grad_norm);
        try {
          adam_step(tp, {hyper.lr, 0.9, 0.999, 1e-8}, ++actor.opt_step());
          actor.head().clamp();
        } catch (const OptimizerError&) {
          ++stats.skipped_minibatches;
        }
      }

      // ---- critic ----
      critic.mlp.zero_grad();
      Eigen::VectorXd v = critic.values(cin_mb, true);
      Eigen::VectorXd verr = v - ret_mb;
      const double vloss = hyper.value_coeff * verr.squaredNorm() / mb;
      if (std::isfinite(vloss)) {
        Eigen::MatrixXd dv = (hyper.value_coeff * 2.0 / mb) * verr.transpose();
        critic.mlp.backward(critic.cache, dv);
        auto cp = critic.mlp.params();
        clip_grad_norm(cp, hyper.max_grad_norm);
        try {
          adam_step(cp, {hyper.lr, 0.9, 0.999, 1e-8}, ++critic.opt_step);
        } catch (const OptimizerError&) {
          ++stats.skipped_minibatches;
        }
      } else {
        ++stats.skipped_minibatches;
      }

      sum_ploss += ploss;
      sum_vloss += vloss;
      sum_ent += entropy;
      sum_kl += kl;
      sum_clip += static_cast<double>(clipped) / mb;
      ++n_mb;
    }
  }

  stats.minibatches = n_mb;
  if (n_mb > 0) {
    stats.policy_loss = sum_ploss / n_mb;
    stats.value_loss = sum_vloss / n_mb;
    stats.entropy = sum_ent / n_mb;
    stats.approx_kl = sum_kl / n_mb;
    stats.clip_fraction = sum_clip / n_mb;
  }
  return stats;
}

}  // namespace ptrack
