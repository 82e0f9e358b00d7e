#pragma once

#include <string>

#include "json.hpp"
#include "ptrack/adapt.hpp"
#include "ptrack/distill.hpp"
#include "ptrack/tracker.hpp"

namespace ptrack {

// Versioned run configuration. Defaults embed the published reward weights
// and disturbance ranges; the loader validates the schema, rejects unknown
// fields, and names offending fields on error.
struct RunConfig {
  int version = 1;
  uint64_t seed = 0;
  std::string out_dir = "runs/out";

  DatasetSpec dataset;
  RewardWeights rewards;
  PPOHyper ppo;
  EnvParams env;

  // stage-1 training
  long train_budget = 2'000'000;
  int train_eval_every = 20;
  double train_target_sr = -1.0;
  std::vector<int> policy_hidden = {128, 128, 64};
  std::vector<int> critic_hidden = {128, 128, 64};

  DistillConfig distill;
  AdaptConfig stage2;
  std::string base_checkpoint;  // stage-2 input

  // evaluation
  int eval_episodes_per_clip = 1;
  std::vector<uint64_t> eval_seeds = {11, 12, 13, 14, 15};

  RunConfig();
  void validate() const;
};

RunConfig parse_config(const std::string& path);
RunConfig parse_config_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const RunConfig& config);

// Stable FNV-1a hash of the canonical serialized form; stamped into stage
// outputs so mismatched artifacts are detectable.
std::string config_hash(const RunConfig& config);

void write_resolved_config(const RunConfig& config, const std::string& path);

}  // namespace ptrack
