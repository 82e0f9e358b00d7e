#include "ptrack/pipeline.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

namespace ptrack {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int log_level() {
  static int level = [] {
    const char* env = std::getenv("PTRACK_LOG");
    if (!env) return 1;
    const std::string v(env);
    if (v == "quiet") return 0;
    if (v == "debug") return 2;
    return 1;
  }();
  return level;
}

}  // namespace

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[ptrack] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << "[ptrack:debug] " << msg << "\n";
}

MotionDataset ensure_dataset(const RunConfig& config, const RobotModel& model) {
  const fs::path dir = fs::path(config.out_dir) / "dataset";
  if (fs::exists(dir / "manifest.json")) {
    log_debug("loading dataset from " + dir.string());
    return load_dataset(dir.string(), model);
  }
  log_info("building dataset (" + std::to_string(config.dataset.kinds.size()) +
           " kinds, k=" + std::to_string(config.dataset.k) + ")");
  MotionDataset ds = build_dataset(config.dataset, config.seed, model);
  save_dataset(ds, dir.string());
  return ds;
}

int cmd_gen_motions(const RunConfig& config) {
  const RobotModel model = default_biped();
  fs::create_directories(config.out_dir);
  write_resolved_config(config, (fs::path(config.out_dir) / "gen_motions_config.json").string());
  MotionDataset ds = build_dataset(config.dataset, config.seed, model);
  const fs::path dir = fs::path(config.out_dir) / "dataset";
  save_dataset(ds, dir.string());
  fs::create_directories(dir / "csv");
  for (size_t i = 0; i < ds.clips.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "csv/clip_%03zu.csv", i);
    clip_to_csv(ds.clips[i], (dir / name).string());
  }
  log_info("dataset written to " + dir.string() + " (" +
           std::to_string(ds.clips.size()) + " clips)");
  return 0;
}

int cmd_train_specialists(const RunConfig& config, long budget_override) {
  const RobotModel model = default_biped();
  fs::create_directories(config.out_dir);
  write_resolved_config(config,
                        (fs::path(config.out_dir) / "train_specialists_config.json").string());
  MotionDataset ds = ensure_dataset(config, model);

  const fs::path dir = fs::path(config.out_dir) / "specialists";
  fs::create_directories(dir);
  json index;
  for (int c = 0; c < ds.k; ++c) {
    const std::vector<int> clips = ds.cluster_members(c);
    if (clips.empty()) {
      log_info("cluster " + std::to_string(c) + " is empty; skipping");
      continue;
    }
    TrainConfig tc;
    tc.budget_steps = budget_override > 0 ? budget_override : config.train_budget;
    tc.eval_every = config.train_eval_every;
    tc.target_sr = config.train_target_sr;
    tc.policy_hidden = config.policy_hidden;
    tc.critic_hidden = config.critic_hidden;
    tc.ppo = config.ppo;
    tc.rewards = config.rewards;
    tc.env = config.env;
    tc.env.disturbances = false;
    tc.seed = config.seed + 101 * (c + 1);
    tc.out_dir = dir.string();
    tc.tag = "cluster_" + std::to_string(c);
    log_info("training specialist for cluster " + std::to_string(c) + " (" +
             std::to_string(clips.size()) + " clips)");
    TrainResult res = train_tracker(model, ds, clips, tc);
    log_info("cluster " + std::to_string(c) + " best SR " + std::to_string(res.best_sr));
    index["cluster_" + std::to_string(c)] = {{"checkpoint", res.checkpoint_path},
                                             {"best_sr", res.best_sr},
                                             {"env_steps", res.env_steps}};
  }
  std::ofstream out(dir / "index.json");
  out << index.dump(2) << "\n";
  return 0;
}

int cmd_distill(const RunConfig& config) {
  const RobotModel model = default_biped();
  write_resolved_config(config, (fs::path(config.out_dir) / "distill_config.json").string());
  MotionDataset ds = ensure_dataset(config, model);
  std::vector<std::string> paths;
  for (int c = 0; c < ds.k; ++c)
    paths.push_back(
        (fs::path(config.out_dir) / "specialists" / ("cluster_" + std::to_string(c) + ".ckpt"))
            .string());
  SpecialistBank bank = SpecialistBank::load(paths, ds);
  DistillConfig dc = config.distill;
  dc.out_dir = (fs::path(config.out_dir) / "generalist").string();
  dc.seed = config.seed + 7;
  DistillResult res = train_generalist(model, ds, bank, dc);
  log_info("generalist SR " + std::to_string(res.best_sr));
  return 0;
}

int cmd_train_adapter(const RunConfig& config, long budget_override) {
  const RobotModel model = default_biped();
  write_resolved_config(config,
                        (fs::path(config.out_dir) / "train_adapter_config.json").string());
  MotionDataset ds = ensure_dataset(config, model);
  std::string base = config.base_checkpoint;
  if (base.empty()) {
    const fs::path generalist = fs::path(config.out_dir) / "generalist" / "generalist.ckpt";
    throw ConfigError("train-adapter: set base_checkpoint in the config (e.g. " +
                      generalist.string() + ")");
  }
  AdaptConfig ac = config.stage2;
  if (budget_override > 0) ac.budget_steps = budget_override;
  ac.out_dir = (fs::path(config.out_dir) / "adapter").string();
  std::vector<int> all_clips(ds.clips.size());
  std::iota(all_clips.begin(), all_clips.end(), 0);
  AdaptResult res = train_adapter(model, ds, all_clips, base, ac);
  if (res.base_hash_before != res.base_hash_after)
    throw std::runtime_error("train-adapter: base policy parameters changed");
  log_info("adapter disturbed SR " + std::to_string(res.best_disturbed_sr));
  return 0;
}

ControllerHandle load_controller(const std::string& checkpoint_path) {
  ControllerHandle handle;
  const CheckpointMeta meta = peek_checkpoint(checkpoint_path);
  handle.kind = meta.kind;
  Rng scratch(0);
  if (meta.kind == "adapter_bundle") {
    handle.bundle = load_adapter_bundle(checkpoint_path);
    handle.controller = std::make_unique<AdapterController>(
        handle.bundle->base.mlp(), handle.bundle->base.head(), handle.bundle->adapter,
        handle.bundle->encoder, handle.bundle->dims);
  } else if (meta.kind == "tracker") {
    handle.actor = std::make_unique<MlpActor>(
        checkpoint_layer_sizes(checkpoint_path, "policy"), scratch);
    handle.critic = std::make_unique<Critic>(
        checkpoint_layer_sizes(checkpoint_path, "critic"), scratch);
    load_policy_checkpoint(checkpoint_path, *handle.actor, *handle.critic);
    handle.controller = std::make_unique<MlpController>(*handle.actor);
  } else if (meta.kind == "policy") {
    handle.actor = std::make_unique<MlpActor>(
        checkpoint_layer_sizes(checkpoint_path, "policy"), scratch);
    std::vector<NamedParam> params = handle.actor->named_params("policy");
    load_checkpoint(checkpoint_path, params);
    handle.actor->head().clamp();
    handle.controller = std::make_unique<MlpController>(*handle.actor);
  } else {
    throw CheckpointError("load_controller: unsupported checkpoint kind '" + meta.kind +
                          "'");
  }
  return handle;
}

int cmd_eval(const RunConfig& config, const std::string& bundle_path,
             const std::string& scenario_name) {
  const RobotModel model = default_biped();
  MotionDataset ds = ensure_dataset(config, model);
  ControllerHandle handle = load_controller(bundle_path);

  std::vector<int> clips(ds.clips.size());
  std::iota(clips.begin(), clips.end(), 0);
  EvalScenario scenario = EvalScenario::named(scenario_name, clips, config.eval_seeds);
  scenario.max_episode_s = config.env.max_episode_s;
  MetricsReport report = run_scenario(model, ds, scenario, *handle.controller);

  const fs::path dir = fs::path(config.out_dir) / "reports";
  fs::create_directories(dir);
  const std::string stem = fs::path(bundle_path).stem().string();
  const std::string base = stem + "__" + scenario_name;
  write_report(report, (dir / (base + ".json")).string(), (dir / (base + ".csv")).string());
  write_resolved_config(config, (dir / (base + "_config.json")).string());
  log_info("scenario " + scenario_name + ": SR " + std::to_string(report.sr) +
           "%, MPJPE " + std::to_string(report.mpjpe_mm) + " mm");
  std::cout << report.to_json();
  return 0;
}

int cmd_report(const RunConfig& config) {
  const fs::path dir = fs::path(config.out_dir) / "reports";
  if (!fs::exists(dir)) throw ConfigError("report: no reports directory in " + config.out_dir);
  std::map<std::string, std::map<std::string, MetricsReport>> table;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".json" &&
        entry.path().string().find("__") != std::string::npos &&
        entry.path().string().find("_config") == std::string::npos)
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const fs::path& p : files) {
    const std::string stem = p.stem().string();
    const size_t sep = stem.find("__");
    if (sep == std::string::npos) continue;
    const std::string method = stem.substr(0, sep);
    std::ifstream in(p);
    json j = json::parse(in);
    MetricsReport r;
    r.scenario = j.at("scenario").get<std::string>();
    r.sr = j.at("sr").get<double>();
    r.mpjpe_mm = j.at("mpjpe_mm").get<double>();
    r.mpjve_mm = j.at("mpjve_mm").get<double>();
    table[method][r.scenario] = r;
  }
  write_comparison(table, (dir / "comparison.csv").string(),
                   (dir / "comparison.svg").string());
  log_info("comparison written to " + (dir / "comparison.csv").string());
  return 0;
}

}  // namespace ptrack
