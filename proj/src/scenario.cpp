#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ptrack/eval.hpp"

namespace ptrack {

using nlohmann::json;

EvalScenario EvalScenario::named(const std::string& name, std::vector<int> clips,
                                 std::vector<uint64_t> seeds) {
  EvalScenario s;
  s.name = name;
  s.clips = std::move(clips);
  s.seeds = std::move(seeds);
  s.ranges = DisturbanceRanges::family(name);
  return s;
}

EpisodeTrace run_episode(const RobotModel& model, const MotionDataset& dataset,
                         int clip_index, const DynamicsConfig& config,
                         Controller& controller, double max_episode_s) {
  EnvParams params;
  params.max_episode_s = max_episode_s;
  params.disturbances = false;
  RewardWeights rewards;
  TrackEnv env(model, dataset, {clip_index}, params, rewards, /*seed=*/0);
  env.reset_to(clip_index, 0.0, config);
  controller.reset();

  const MotionClip& clip = dataset.clips[clip_index];
  const int nl = model.num_links();
  const int max_steps =
      static_cast<int>(std::min(clip.duration(), max_episode_s) / env.control_dt());

  EpisodeTrace trace;
  trace.fps = clip.fps;
  trace.executed.resize(2 * nl, max_steps);
  trace.reference.resize(2 * nl, max_steps);

  const int nj = model.num_joints();
  int steps = 0;
  for (int t = 0; t < max_steps; ++t) {
    const Eigen::VectorXd raw = controller.act(env.obs(), env.goal());
    // The goal this action was asked to reach.
    const Eigen::VectorXd goal_flat = env.goal();
    EnvStepResult res = env.step(raw);

    if (res.diverged) {
      trace.terminated_early = true;
      trace.diverged = true;
      break;
    }
    for (int l = 0; l < nl; ++l) {
      trace.executed(2 * l, t) = res.link_pos_local[l].x();
      trace.executed(2 * l + 1, t) = res.link_pos_local[l].y();
      trace.reference(2 * l, t) = goal_flat(2 * nj + 2 * l);
      trace.reference(2 * l + 1, t) = goal_flat(2 * nj + 2 * l + 1);
    }
    trace.mean_link_err.push_back(res.errors.mean_link_pos);
    trace.root_height_err.push_back(res.errors.root_height);
    steps = t + 1;
    if (res.terminated) {
      trace.terminated_early = true;
      break;
    }
  }
  trace.executed.conservativeResize(Eigen::NoChange, std::max(steps, 1));
  trace.reference.conservativeResize(Eigen::NoChange, std::max(steps, 1));
  return trace;
}

MetricsReport run_scenario(const RobotModel& model, const MotionDataset& dataset,
                           const EvalScenario& scenario, Controller& controller) {
  MetricsReport report;
  report.scenario = scenario.name;
  report.seed_count = static_cast<int>(scenario.seeds.size());

  double mpjpe_sum = 0.0, mpjve_sum = 0.0;
  for (int clip : scenario.clips) {
    ClipMetrics cm;
    cm.clip = clip;
    double clip_pe = 0.0, clip_ve = 0.0;
    for (uint64_t seed : scenario.seeds) {
      Rng rng(seed * 0x9e3779b97f4a7c15ULL + static_cast<uint64_t>(clip) + 1);
      DynamicsConfig config = scenario.disturbed()
                                  ? sample_dynamics_config(rng, scenario.ranges,
                                                           model.num_joints())
                                  : DynamicsConfig::nominal(model.num_joints());
      EpisodeTrace trace = run_episode(model, dataset, clip, config, controller,
                                       scenario.max_episode_s);
      ++cm.episodes;
      if (success(trace)) {
        ++cm.successes;
        const double pe = mpjpe(trace.executed, trace.reference);
        const double ve = trace.executed.cols() >= 2
                              ? mpjve(trace.executed, trace.reference, trace.fps)
                              : 0.0;
        clip_pe += pe;
        clip_ve += ve;
        mpjpe_sum += pe;
        mpjve_sum += ve;
      }
    }
    if (cm.successes > 0) {
      cm.mpjpe_mm = clip_pe / cm.successes;
      cm.mpjve_mm = clip_ve / cm.successes;
    }
    report.per_clip.push_back(cm);
    report.episodes += cm.episodes;
    report.successes += cm.successes;
  }
  if (report.episodes > 0)
    report.sr = 100.0 * report.successes / report.episodes;
  if (report.successes > 0) {
    report.mpjpe_mm = mpjpe_sum / report.successes;
    report.mpjve_mm = mpjve_sum / report.successes;
  }
  return report;
}

std::string MetricsReport::to_json() const {
  json j;
  j["scenario"] = scenario;
  j["sr"] = sr;
  j["mpjpe_mm"] = mpjpe_mm;
  j["mpjve_mm"] = mpjve_mm;
  j["episodes"] = episodes;
  j["successes"] = successes;
  j["seed_count"] = seed_count;
  json clips = json::array();
  for (const ClipMetrics& cm : per_clip)
    clips.push_back({{"clip", cm.clip},
                     {"episodes", cm.episodes},
                     {"successes", cm.successes},
                     {"mpjpe_mm", cm.mpjpe_mm},
                     {"mpjve_mm", cm.mpjve_mm}});
  j["per_clip"] = clips;
  return j.dump(2) + "\n";
}

std::string MetricsReport::to_csv() const {
  std::ostringstream out;
  out << "clip,episodes,successes,mpjpe_mm,mpjve_mm\n";
  for (const ClipMetrics& cm : per_clip)
    out << cm.clip << "," << cm.episodes << "," << cm.successes << "," << cm.mpjpe_mm
        << "," << cm.mpjve_mm << "\n";
  out << "total," << episodes << "," << successes << "," << mpjpe_mm << ","
      << mpjve_mm << "\n";
  return out.str();
}

void write_report(const MetricsReport& report, const std::string& json_path,
                  const std::string& csv_path) {
  {
    std::ofstream out(json_path, std::ios::binary);
    if (!out) throw ConfigError("write_report: cannot open " + json_path);
    out << report.to_json();
  }
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw ConfigError("write_report: cannot open " + csv_path);
    out << report.to_csv();
  }
}

}  // namespace ptrack
