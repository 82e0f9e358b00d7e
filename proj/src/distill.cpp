#include <filesystem>
#include <fstream>
#include <numeric>

#include "ptrack/distill.hpp"
#include "ptrack/eval.hpp"

namespace ptrack {

namespace fs = std::filesystem;
using nlohmann::json;

int SpecialistBank::cluster_for_clip(int clip) const {
  if (clip < 0 || clip >= static_cast<int>(cluster_of_clip.size()))
    throw ConfigError("SpecialistBank: clip index out of range");
  return cluster_of_clip[clip];
}

MlpActor& SpecialistBank::specialist_for_clip(int clip) const {
  const int c = cluster_for_clip(clip);
  if (c >= static_cast<int>(specialists.size()) || !specialists[c])
    throw ConfigError("SpecialistBank: no specialist for cluster " + std::to_string(c));
  return *specialists[c];
}

SpecialistBank SpecialistBank::load(const std::vector<std::string>& checkpoint_paths,
                                    const MotionDataset& dataset) {
  SpecialistBank bank;
  bank.cluster_of_clip = dataset.cluster_assignments;
  Rng scratch(0);
  for (const std::string& path : checkpoint_paths) {
    auto actor = std::make_unique<MlpActor>(checkpoint_layer_sizes(path, "policy"),
                                            scratch);
    auto critic = std::make_unique<Critic>(checkpoint_layer_sizes(path, "critic"),
                                           scratch);
    load_policy_checkpoint(path, *actor, *critic);
    bank.specialists.push_back(std::move(actor));
    bank.critics.push_back(std::move(critic));
  }
  if (static_cast<int>(bank.specialists.size()) != dataset.k)
    throw ConfigError("SpecialistBank: need one checkpoint per cluster");
  return bank;
}

Eigen::MatrixXd dagger_label(const SpecialistBank& bank, const Eigen::MatrixXd& obs,
                             const Eigen::MatrixXd& goal,
                             const std::vector<int>& clip_ids) {
  const int n = static_cast<int>(clip_ids.size());
  if (obs.cols() != n || goal.cols() != n)
    throw ShapeError("dagger_label: column counts differ");
  const int act_dim = bank.specialists.empty() ? 0 : bank.specialists[0]->head().dim();
  Eigen::MatrixXd labels(act_dim, n);

  // Route states to their cluster's specialist in batches.
  std::vector<std::vector<int>> by_cluster(bank.specialists.size());
  for (int i = 0; i < n; ++i)
    by_cluster[bank.cluster_for_clip(clip_ids[i])].push_back(i);

  Eigen::MatrixXd in(obs.rows() + goal.rows(), 1);
  for (size_t c = 0; c < by_cluster.size(); ++c) {
    const auto& idx = by_cluster[c];
    if (idx.empty()) continue;
    Eigen::MatrixXd batch(obs.rows() + goal.rows(), idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
      batch.col(i).head(obs.rows()) = obs.col(idx[i]);
      batch.col(i).tail(goal.rows()) = goal.col(idx[i]);
    }
    const Eigen::MatrixXd mean = bank.specialists[c]->mean(batch, false);
    for (size_t i = 0; i < idx.size(); ++i) labels.col(idx[i]) = mean.col(i);
  }
  return labels;
}

void DaggerAggregate::append(const Eigen::MatrixXd& o, const Eigen::MatrixXd& g,
                             const Eigen::MatrixXd& l, const std::vector<int>& ids) {
  const int old_n = size();
  const int add = static_cast<int>(ids.size());
  if (old_n == 0) {
    obs = o;
    goal = g;
    labels = l;
    clip_ids = ids;
    return;
  }
  obs.conservativeResize(Eigen::NoChange, old_n + add);
  goal.conservativeResize(Eigen::NoChange, old_n + add);
  labels.conservativeResize(Eigen::NoChange, old_n + add);
  obs.rightCols(add) = o;
  goal.rightCols(add) = g;
  labels.rightCols(add) = l;
  clip_ids.insert(clip_ids.end(), ids.begin(), ids.end());
}

namespace {
constexpr uint32_t kAggMagic = 0x70646167;  // "pdag"

void write_mat(std::ofstream& out, const Eigen::MatrixXd& m) {
  const uint32_t rows = static_cast<uint32_t>(m.rows());
  const uint32_t cols = static_cast<uint32_t>(m.cols());
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  std::vector<float> buf(m.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) buf[i] = static_cast<float>(m.data()[i]);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * 4));
}

Eigen::MatrixXd read_mat(std::ifstream& in) {
  uint32_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  Eigen::MatrixXd m(rows, cols);
  std::vector<float> buf(m.size());
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * 4));
  if (!in) throw ConfigError("DaggerAggregate: truncated file");
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = buf[i];
  return m;
}
}  // namespace

void DaggerAggregate::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("DaggerAggregate: cannot open " + path);
  out.write(reinterpret_cast<const char*>(&kAggMagic), 4);
  write_mat(out, obs);
  write_mat(out, goal);
  write_mat(out, labels);
  const uint32_t n = static_cast<uint32_t>(clip_ids.size());
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(clip_ids.data()),
            static_cast<std::streamsize>(n * sizeof(int)));
}

DaggerAggregate DaggerAggregate::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("DaggerAggregate: cannot open " + path);
  uint32_t magic = 0;
  in.read(reinterpret_cast<char*>(&magic), 4);
  if (magic != kAggMagic) throw ConfigError("DaggerAggregate: bad magic in " + path);
  DaggerAggregate agg;
  agg.obs = read_mat(in);
  agg.goal = read_mat(in);
  agg.labels = read_mat(in);
  uint32_t n = 0;
  in.read(reinterpret_cast<char*>(&n), 4);
  agg.clip_ids.resize(n);
  in.read(reinterpret_cast<char*>(agg.clip_ids.data()),
          static_cast<std::streamsize>(n * sizeof(int)));
  if (!in) throw ConfigError("DaggerAggregate: truncated file " + path);
  return agg;
}

namespace {

struct CollectResult {
  Eigen::MatrixXd obs, goal;
  std::vector<int> clip_ids;
};

// Student-driven state collection: the generalist acts (stochastically) on
// clips from every cluster; visited states are recorded for labeling.
CollectResult collect_states(const RobotModel& model, const MotionDataset& dataset,
                             MlpActor& student, int count, int num_envs,
                             const EnvParams& env_params, const RewardWeights& rewards,
                             Rng& rng) {
  std::vector<int> all_clips(dataset.clips.size());
  std::iota(all_clips.begin(), all_clips.end(), 0);
  std::vector<std::unique_ptr<TrackEnv>> envs;
  for (int e = 0; e < num_envs; ++e)
    envs.push_back(std::make_unique<TrackEnv>(model, dataset, all_clips, env_params,
                                              rewards, rng.split()));
  const int obs_dim = observation_size(model);
  const int goal_dim = TrackingGoal::flat_size(model);
  CollectResult out;
  out.obs.resize(obs_dim, count);
  out.goal.resize(goal_dim, count);
  out.clip_ids.resize(count);

  Eigen::MatrixXd in(obs_dim + goal_dim, num_envs);
  int n = 0;
  while (n < count) {
    for (int e = 0; e < num_envs; ++e) {
      in.col(e).head(obs_dim) = envs[e]->obs();
      in.col(e).tail(goal_dim) = envs[e]->goal();
    }
    const Eigen::MatrixXd mean = student.mean(in, false);
    for (int e = 0; e < num_envs && n < count; ++e) {
      out.obs.col(n) = envs[e]->obs();
      out.goal.col(n) = envs[e]->goal();
      out.clip_ids[n] = envs[e]->clip_index();
      ++n;
      const Eigen::VectorXd raw = student.head().sample(mean.col(e), envs[e]->rng());
      envs[e]->step(raw);
    }
  }
  return out;
}

double regression_epoch(MlpActor& student, const DaggerAggregate& agg, int minibatch,
                        double lr, Rng& rng, bool update) {
  const int n = agg.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (update)
    for (int i = n - 1; i > 0; --i)
      std::swap(order[i], order[rng.index(static_cast<uint64_t>(i + 1))]);

  const int in_dim = static_cast<int>(agg.obs.rows() + agg.goal.rows());
  double loss_sum = 0.0;
  int batches = 0;
  for (int start = 0; start < n; start += minibatch) {
    const int mb = std::min(minibatch, n - start);
    Eigen::MatrixXd in(in_dim, mb), target(agg.labels.rows(), mb);
    for (int i = 0; i < mb; ++i) {
      const int idx = order[start + i];
      in.col(i).head(agg.obs.rows()) = agg.obs.col(idx);
      in.col(i).tail(agg.goal.rows()) = agg.goal.col(idx);
      target.col(i) = agg.labels.col(idx);
    }
    student.zero_grad();
    const Eigen::MatrixXd mean = student.mean(in, update);
    const Eigen::MatrixXd err = mean - target;
    loss_sum += err.squaredNorm() / (mb * err.rows());
    ++batches;
    if (update) {
      const Eigen::MatrixXd dmean = (2.0 / (mb * err.rows())) * err;
      student.backward_mean(dmean);
      adam_step(student.mlp().params(), {lr, 0.9, 0.999, 1e-8}, ++student.opt_step());
    }
  }
  return batches > 0 ? loss_sum / batches : 0.0;
}

}  // namespace

DistillResult train_generalist(const RobotModel& model, const MotionDataset& dataset,
                               const SpecialistBank& bank, const DistillConfig& config) {
  fs::create_directories(config.out_dir);
  const int obs_dim = observation_size(model);
  const int goal_dim = TrackingGoal::flat_size(model);
  const int act_dim = model.num_joints();

  Rng rng(config.seed);
  std::vector<int> sizes;
  sizes.push_back(obs_dim + goal_dim);
  for (int h : config.policy_hidden) sizes.push_back(h);
  sizes.push_back(act_dim);
  MlpActor student(sizes, rng);

  // log_std copied from the specialist average.
  double ls = 0.0;
  for (const auto& s : bank.specialists) ls += s->head().log_std.value.mean();
  student.head().log_std.value.setConstant(
      static_cast<double>(static_cast<float>(ls / bank.specialists.size())));
  student.head().clamp();

  DistillResult result;
  result.aggregate_path = (fs::path(config.out_dir) / (config.tag + "_dagger.bin")).string();
  const std::string curve_path =
      (fs::path(config.out_dir) / (config.tag + "_curve.csv")).string();
  std::ofstream curve(curve_path);
  curve << "iteration,aggregate_size,regression_mse,sr\n";
  result.curve_csv = curve_path;

  DaggerAggregate agg;
  MlpActor best = student;
  double best_sr = -1.0;

  auto eval_all = [&](MlpActor& actor) {
    MlpController controller(actor);
    std::vector<int> all_clips(dataset.clips.size());
    std::iota(all_clips.begin(), all_clips.end(), 0);
    std::vector<uint64_t> seeds;
    for (int i = 0; i < config.eval_episodes_per_clip; ++i) seeds.push_back(2000 + i);
    EvalScenario scenario = EvalScenario::named("no_disturbance", all_clips, seeds);
    scenario.max_episode_s = config.env.max_episode_s;
    return run_scenario(model, dataset, scenario, controller).sr;
  };

  if (config.iterations == 0) {
    // No-op run: record the untrained baseline regression error.
    CollectResult states =
        collect_states(model, dataset, student, std::min(config.states_per_iteration, 2048),
                       config.rollout_envs, config.env, config.rewards, rng);
    const Eigen::MatrixXd labels = dagger_label(bank, states.obs, states.goal,
                                                states.clip_ids);
    agg.append(states.obs, states.goal, labels, states.clip_ids);
    result.holdout_mse = regression_epoch(student, agg, config.minibatch_size, config.lr,
                                          rng, false);
    agg.save(result.aggregate_path);
    best = student;
    best_sr = 0.0;
  }

  for (int it = 0; it < config.iterations; ++it) {
    CollectResult states =
        collect_states(model, dataset, student, config.states_per_iteration,
                       config.rollout_envs, config.env, config.rewards, rng);
    const Eigen::MatrixXd labels = dagger_label(bank, states.obs, states.goal,
                                                states.clip_ids);
    agg.append(states.obs, states.goal, labels, states.clip_ids);

    double mse = 0.0;
    for (int ep = 0; ep < config.regress_epochs; ++ep)
      mse = regression_epoch(student, agg, config.minibatch_size, config.lr, rng, true);

    const double sr = eval_all(student);
    if (sr >= best_sr) {
      best_sr = sr;
      best = student;
    }
    curve << it + 1 << "," << agg.size() << "," << mse << "," << sr << "\n";
    curve.flush();
    agg.save(result.aggregate_path);
  }

  // Held-out probe: fresh student-visited states labeled but never trained on.
  {
    CollectResult probe =
        collect_states(model, dataset, best, std::min(config.states_per_iteration, 4096),
                       config.rollout_envs, config.env, config.rewards, rng);
    const Eigen::MatrixXd labels =
        dagger_label(bank, probe.obs, probe.goal, probe.clip_ids);
    DaggerAggregate holdout;
    holdout.append(probe.obs, probe.goal, labels, probe.clip_ids);
    result.holdout_mse =
        regression_epoch(best, holdout, config.minibatch_size, config.lr, rng, false);
  }

  // Per-cluster SR of the returned checkpoint.
  result.per_cluster_sr.resize(dataset.k, 0.0);
  {
    MlpController controller(best);
    for (int c = 0; c < dataset.k; ++c) {
      std::vector<int> clips = dataset.cluster_members(c);
      if (clips.empty()) continue;
      std::vector<uint64_t> seeds;
      for (int i = 0; i < config.eval_episodes_per_clip; ++i) seeds.push_back(2000 + i);
      EvalScenario scenario = EvalScenario::named("no_disturbance", clips, seeds);
      scenario.max_episode_s = config.env.max_episode_s;
      result.per_cluster_sr[c] = run_scenario(model, dataset, scenario, controller).sr;
    }
  }

  result.best_sr = best_sr;
  result.checkpoint_path = (fs::path(config.out_dir) / (config.tag + ".ckpt")).string();
  json hyper;
  hyper["tag"] = config.tag;
  hyper["best_sr"] = best_sr;
  // Persist the policy alone; the generalist has no trained critic.
  std::vector<NamedParam> params = best.named_params("policy");
  json psizes = json::array();
  psizes.push_back(best.mlp().input_size());
  for (const auto& l : best.mlp().layers()) psizes.push_back(l.W.value.rows());
  hyper["policy_sizes"] = psizes;
  save_checkpoint(result.checkpoint_path, "policy", params, agg.size(), hyper);
  return result;
}

}  // namespace ptrack
