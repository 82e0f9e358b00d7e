#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ptrack/tracker.hpp"

namespace ptrack {

// One trained specialist per motion cluster.
struct SpecialistBank {
  std::vector<std::unique_ptr<MlpActor>> specialists;  // index = cluster id
  std::vector<std::unique_ptr<Critic>> critics;
  std::vector<int> cluster_of_clip;

  int cluster_for_clip(int clip) const;
  MlpActor& specialist_for_clip(int clip) const;
  static SpecialistBank load(const std::vector<std::string>& checkpoint_paths,
                             const MotionDataset& dataset);
};

// Teacher labels: the owning specialist's deterministic (pre-tanh) mean for
// each visited (obs, goal) pair.
Eigen::MatrixXd dagger_label(const SpecialistBank& bank, const Eigen::MatrixXd& obs,
                             const Eigen::MatrixXd& goal,
                             const std::vector<int>& clip_ids);

struct DistillConfig {
  int iterations = 10;
  int states_per_iteration = 50'000;
  int regress_epochs = 6;
  int minibatch_size = 1024;
  double lr = 1e-3;
  int rollout_envs = 32;
  std::vector<int> policy_hidden = {128, 128, 64};
  EnvParams env;
  RewardWeights rewards;
  int eval_episodes_per_clip = 1;
  uint64_t seed = 0;
  std::string out_dir;
  std::string tag = "generalist";
};

struct DistillResult {
  std::string checkpoint_path;
  double best_sr = 0.0;
  std::vector<double> per_cluster_sr;
  double holdout_mse = 0.0;  // on fresh labeled states never trained on
  std::string aggregate_path;
  std::string curve_csv;
};

DistillResult train_generalist(const RobotModel& model, const MotionDataset& dataset,
                               const SpecialistBank& bank, const DistillConfig& config);

// Aggregated DAgger dataset (obs, goal, clip id, pre-tanh labels).
struct DaggerAggregate {
  Eigen::MatrixXd obs, goal, labels;
  std::vector<int> clip_ids;
  int size() const { return static_cast<int>(clip_ids.size()); }
  void append(const Eigen::MatrixXd& o, const Eigen::MatrixXd& g,
              const Eigen::MatrixXd& l, const std::vector<int>& ids);
  void save(const std::string& path) const;
  static DaggerAggregate load(const std::string& path);
};

}  // namespace ptrack
