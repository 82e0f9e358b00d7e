#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "ptrack/errors.hpp"
#include "ptrack/rng.hpp"

namespace ptrack {

struct OptimizerError : std::runtime_error {
  explicit OptimizerError(const std::string& msg) : std::runtime_error(msg) {}
};

struct AdamHyper {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One parameter tensor with its gradient accumulator and Adam moments.
struct Param {
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
  Eigen::MatrixXd m;
  Eigen::MatrixXd v;

  void setup(int rows, int cols) {
    value = Eigen::MatrixXd::Zero(rows, cols);
    grad = Eigen::MatrixXd::Zero(rows, cols);
    m = Eigen::MatrixXd::Zero(rows, cols);
    v = Eigen::MatrixXd::Zero(rows, cols);
  }
  void zero_grad() { grad.setZero(); }
};

// Bias-corrected Adam over a parameter list; `step` is the shared counter
// (incremented by the caller-facing wrappers below). Throws OptimizerError on
// non-finite gradients, leaving parameters untouched.
void adam_step(const std::vector<Param*>& params, const AdamHyper& hyper, long step);

// Multilayer perceptron: tanh hidden activations, linear output. Batches are
// column-major (one sample per column).
class Mlp {
 public:
  Mlp() = default;
  // sizes = {in, h1, ..., out}; final layer weights scaled by final_scale to
  // allow near-zero or exactly-zero initial outputs.
  Mlp(const std::vector<int>& sizes, Rng& rng, double final_scale = 1.0);

  struct Cache {
    std::vector<Eigen::MatrixXd> xs;  // input of each layer
  };

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache = nullptr) const;
  Eigen::VectorXd forward_vec(const Eigen::VectorXd& x) const;
  // Accumulates parameter gradients, returns dL/dx.
  Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& dy);

  int input_size() const { return layers_.empty() ? 0 : (int)layers_[0].W.value.cols(); }
  int output_size() const { return layers_.empty() ? 0 : (int)layers_.back().W.value.rows(); }
  int num_layers() const { return static_cast<int>(layers_.size()); }

  std::vector<Param*> params();
  std::vector<std::pair<std::string, Param*>> named_params(const std::string& prefix);
  void zero_grad();

  struct Layer {
    Param W;
    Param b;
  };
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

 private:
  std::vector<Layer> layers_;
};

// Diagonal-Gaussian policy head with a state-independent log standard
// deviation, clamped to [-4, 1].
struct GaussianHead {
  Param log_std;  // column vector
  static constexpr double kLogStdMin = -4.0;
  static constexpr double kLogStdMax = 1.0;

  void setup(int dim, double init = -0.7);
  void clamp();
  int dim() const { return static_cast<int>(log_std.value.rows()); }

  double log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& action) const;
  Eigen::VectorXd sample(const Eigen::VectorXd& mean, Rng& rng) const;
  double entropy() const;
};

// Xavier-uniform draw rounded through f32 so fresh parameters survive the
// 32-bit checkpoint payload bit-exactly.
void xavier_init(Param& p, int rows, int cols, Rng& rng, double gain = 1.0);

uint64_t hash_params(const std::vector<Param*>& params);

}  // namespace ptrack
