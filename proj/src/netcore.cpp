#include "ptrack/netcore.hpp"

#include <cmath>

namespace ptrack {

void xavier_init(Param& p, int rows, int cols, Rng& rng, double gain) {
  p.setup(rows, cols);
  const double s = gain * std::sqrt(6.0 / (rows + cols));
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r)
      p.value(r, c) = static_cast<double>(static_cast<float>(rng.uniform(-s, s)));
}

void adam_step(const std::vector<Param*>& params, const AdamHyper& hyper, long step) {
  for (Param* p : params)
    if (!p->grad.allFinite()) throw OptimizerError("adam_step: non-finite gradient");
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
  for (Param* p : params) {
    p->m = hyper.beta1 * p->m + (1.0 - hyper.beta1) * p->grad;
    p->v = hyper.beta2 * p->v + (1.0 - hyper.beta2) * p->grad.cwiseAbs2();
    p->value.array() -=
        hyper.lr * (p->m.array() / bc1) / ((p->v.array() / bc2).sqrt() + hyper.eps);
  }
}

Mlp::Mlp(const std::vector<int>& sizes, Rng& rng, double final_scale) {
  if (sizes.size() < 2) throw ShapeError("Mlp: need at least input and output sizes");
  layers_.resize(sizes.size() - 1);
  for (size_t l = 0; l < layers_.size(); ++l) {
    const bool last = l + 1 == layers_.size();
    xavier_init(layers_[l].W, sizes[l + 1], sizes[l], rng, last ? final_scale : 1.0);
    layers_[l].b.setup(sizes[l + 1], 1);
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Cache* cache) const {
  if (x.rows() != input_size())
    throw ShapeError("Mlp::forward: input has " + std::to_string(x.rows()) +
                     " rows, expected " + std::to_string(input_size()));
  if (cache) {
    cache->xs.clear();
    cache->xs.reserve(layers_.size());
  }
  Eigen::MatrixXd h = x;
  for (size_t l = 0; l < layers_.size(); ++l) {
    if (cache) cache->xs.push_back(h);
    Eigen::MatrixXd pre = (layers_[l].W.value * h).colwise() +
                          Eigen::VectorXd(layers_[l].b.value.col(0));
    if (l + 1 < layers_.size())
      h = pre.array().tanh();
    else
      h = std::move(pre);
  }
  return h;
}

Eigen::VectorXd Mlp::forward_vec(const Eigen::VectorXd& x) const {
  return forward(Eigen::MatrixXd(x));
}

Eigen::MatrixXd Mlp::backward(const Cache& cache, const Eigen::MatrixXd& dy) {
  if (cache.xs.size() != layers_.size())
    throw ShapeError("Mlp::backward: cache does not match network depth");
  Eigen::MatrixXd dx = dy;
  for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
    Eigen::MatrixXd dpre;
    if (l + 1 < static_cast<int>(layers_.size())) {
      // activation output of layer l is the cached input of layer l+1
      const Eigen::MatrixXd& act = cache.xs[l + 1];
      dpre = dx.cwiseProduct((1.0 - act.array().square()).matrix());
    } else {
      dpre = std::move(dx);
    }
    if (dpre.rows() != layers_[l].W.value.rows() ||
        cache.xs[l].rows() != layers_[l].W.value.cols())
      throw ShapeError("Mlp::backward: stale cache shape at layer " + std::to_string(l));
    layers_[l].W.grad.noalias() += dpre * cache.xs[l].transpose();
    layers_[l].b.grad.col(0).noalias() += dpre.rowwise().sum();
    dx.noalias() = layers_[l].W.value.transpose() * dpre;
  }
  return dx;
}

std::vector<Param*> Mlp::params() {
  std::vector<Param*> out;
  for (auto& layer : layers_) {
    out.push_back(&layer.W);
    out.push_back(&layer.b);
  }
  return out;
}

std::vector<std::pair<std::string, Param*>> Mlp::named_params(const std::string& prefix) {
  std::vector<std::pair<std::string, Param*>> out;
  for (size_t l = 0; l < layers_.size(); ++l) {
    out.emplace_back(prefix + "/l" + std::to_string(l) + "/W", &layers_[l].W);
    out.emplace_back(prefix + "/l" + std::to_string(l) + "/b", &layers_[l].b);
  }
  return out;
}

void Mlp::zero_grad() {
  for (Param* p : params()) p->zero_grad();
}

void GaussianHead::setup(int dim, double init) {
  log_std.setup(dim, 1);
  log_std.value.setConstant(static_cast<double>(static_cast<float>(init)));
}

void GaussianHead::clamp() {
  log_std.value = log_std.value.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
}

double GaussianHead::log_prob(const Eigen::VectorXd& mean,
                              const Eigen::VectorXd& action) const {
  if (mean.size() != dim() || action.size() != dim())
    throw ShapeError("GaussianHead::log_prob: dimension mismatch");
  constexpr double kLog2Pi = 1.8378770664093453;
  double lp = -0.5 * dim() * kLog2Pi;
  for (int i = 0; i < dim(); ++i) {
    const double ls = log_std.value(i, 0);
    const double z = (action(i) - mean(i)) * std::exp(-ls);
    lp -= 0.5 * z * z + ls;
  }
  return lp;
}

Eigen::VectorXd GaussianHead::sample(const Eigen::VectorXd& mean, Rng& rng) const {
  if (mean.size() != dim()) throw ShapeError("GaussianHead::sample: dimension mismatch");
  Eigen::VectorXd a(dim());
  for (int i = 0; i < dim(); ++i)
    a(i) = mean(i) + std::exp(log_std.value(i, 0)) * rng.normal();
  return a;
}

double GaussianHead::entropy() const {
  constexpr double kHalfLog2PiE = 1.4189385332046727;  // 0.5 (1 + log 2pi)
  return dim() * kHalfLog2PiE + log_std.value.sum();
}

uint64_t hash_params(const std::vector<Param*>& params) {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const Eigen::MatrixXd& mat) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(mat.data());
    const size_t n = sizeof(double) * mat.size();
    for (size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const Param* p : params) feed(p->value);
  return h;
}

}  // namespace ptrack
