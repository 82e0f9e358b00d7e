#include "ptrack/adapt.hpp"

namespace ptrack {

Adapter::Adapter(const Mlp& base, int e_dim_in, int hidden, Rng& rng) : e_dim(e_dim_in) {
  blocks.reserve(base.num_layers());
  for (int m = 0; m < base.num_layers(); ++m) {
    const int in_m = static_cast<int>(base.layers()[m].W.value.cols());
    const int out_m = static_cast<int>(base.layers()[m].W.value.rows());
    // Final sublayer zero-initialized: the fresh adapter is an exact no-op.
    blocks.emplace_back(std::vector<int>{in_m + e_dim, hidden, out_m}, rng, 0.0);
  }
}

std::vector<Param*> Adapter::params() {
  std::vector<Param*> out;
  for (Mlp& b : blocks)
    for (Param* p : b.params()) out.push_back(p);
  return out;
}

std::vector<NamedParam> Adapter::named_params(const std::string& prefix) {
  std::vector<NamedParam> out;
  for (size_t m = 0; m < blocks.size(); ++m)
    for (auto& [name, p] : blocks[m].named_params(prefix + "/b" + std::to_string(m)))
      out.push_back({name, p});
  return out;
}

AdapterActor::AdapterActor(Mlp& base, GaussianHead& base_head, Adapter& adapter)
    : base_(base), base_head_(base_head), adapter_(adapter) {
  if (static_cast<int>(adapter_.blocks.size()) != base_.num_layers())
    throw ShapeError("AdapterActor: adapter depth does not match the base policy");
}

Eigen::MatrixXd AdapterActor::fused_forward(const Eigen::MatrixXd& x,
                                            const Eigen::MatrixXd& e, FusedCache* cache) {
  const int L = base_.num_layers();
  if (cache) {
    cache->layer_in.assign(L, {});
    cache->base_act.assign(L, {});
    cache->block_caches.assign(L, {});
    cache->e = e;
  }
  Eigen::MatrixXd h = x;
  for (int l = 0; l < L; ++l) {
    if (cache) cache->layer_in[l] = h;
    const auto& layer = base_.layers()[l];
    Eigen::MatrixXd pre =
        (layer.W.value * h).colwise() + Eigen::VectorXd(layer.b.value.col(0));
    Eigen::MatrixXd base_out =
        (l + 1 < L) ? Eigen::MatrixXd(pre.array().tanh()) : std::move(pre);
    if (cache) cache->base_act[l] = base_out;

    Eigen::MatrixXd block_in(h.rows() + e.rows(), h.cols());
    block_in.topRows(h.rows()) = h;
    block_in.bottomRows(e.rows()) = e;
    const Eigen::MatrixXd corr =
        adapter_.blocks[l].forward(block_in, cache ? &cache->block_caches[l] : nullptr);
    h = base_out + corr;
  }
  return h;
}

Eigen::MatrixXd AdapterActor::mean(const Eigen::MatrixXd& input, bool keep_cache) {
  if (input.rows() != input_size())
    throw ShapeError("AdapterActor::mean: input row count mismatch");
  const int base_in = base_.input_size();
  const Eigen::MatrixXd x = input.topRows(base_in);
  const Eigen::MatrixXd e = input.bottomRows(adapter_.e_dim);
  return fused_forward(x, e, keep_cache ? &cache_ : nullptr);
}

Eigen::VectorXd AdapterActor::mean_vec(const Eigen::VectorXd& obs_goal,
                                       const Eigen::VectorXd& e) {
  Eigen::VectorXd in(obs_goal.size() + e.size());
  in << obs_goal, e;
  return mean(Eigen::MatrixXd(in), false).col(0);
}

void AdapterActor::backward_mean(const Eigen::MatrixXd& dmean) {
  const int L = base_.num_layers();
  Eigen::MatrixXd dh = dmean;
  for (int l = L - 1; l >= 0; --l) {
    // Correction branch.
    const Eigen::MatrixXd dblock_in = adapter_.blocks[l].backward(cache_.block_caches[l], dh);
    // Base branch: gradients flow through the frozen weights but are never
    // accumulated into them.
    Eigen::MatrixXd dpre;
    if (l + 1 < L)
      dpre = dh.cwiseProduct((1.0 - cache_.base_act[l].array().square()).matrix());
    else
      dpre = dh;
    dh = base_.layers()[l].W.value.transpose() * dpre;
    dh += dblock_in.topRows(dh.rows());
    // The embedding rows of dblock_in are dropped: PPO gradients stop at e.
  }
}

void AdapterActor::zero_grad() {
  for (Param* p : adapter_.params()) p->zero_grad();
}

std::vector<Param*> AdapterActor::trainable_params() { return adapter_.params(); }

AdapterController::AdapterController(Mlp& base, GaussianHead& head, Adapter& adapter,
                                     HistoryEncoder& encoder, const WmDims& dims)
    : actor_(base, head, adapter),
      encoder_(encoder),
      buffer_(dims.history, dims.s_dim, dims.a_dim) {}

void AdapterController::reset() { buffer_.reset(); }

Eigen::VectorXd AdapterController::act(const Eigen::VectorXd& obs,
                                       const Eigen::VectorXd& goal) {
  const Eigen::VectorXd e = encode_history(encoder_, buffer_);
  Eigen::VectorXd obs_goal(obs.size() + goal.size());
  obs_goal << obs, goal;
  const Eigen::VectorXd raw = actor_.mean_vec(obs_goal, e);
  buffer_.push(obs, raw.array().tanh());
  return raw;
}

}  // namespace ptrack
