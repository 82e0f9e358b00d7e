#pragma once

#include <memory>
#include <string>

#include "ptrack/adapt.hpp"
#include "ptrack/config.hpp"
#include "ptrack/distill.hpp"
#include "ptrack/eval.hpp"

namespace ptrack {

// Owning wrapper around a loaded policy bundle of any checkpoint kind.
struct ControllerHandle {
  std::unique_ptr<MlpActor> actor;
  std::unique_ptr<Critic> critic;
  std::unique_ptr<AdapterBundle> bundle;
  std::unique_ptr<Controller> controller;
  std::string kind;
};

ControllerHandle load_controller(const std::string& checkpoint_path);

MotionDataset ensure_dataset(const RunConfig& config, const RobotModel& model);

int cmd_gen_motions(const RunConfig& config);
int cmd_train_specialists(const RunConfig& config, long budget_override = -1);
int cmd_distill(const RunConfig& config);
int cmd_train_adapter(const RunConfig& config, long budget_override = -1);
int cmd_eval(const RunConfig& config, const std::string& bundle_path,
             const std::string& scenario_name);
int cmd_report(const RunConfig& config);

// Minimal stderr logging; level from the PTRACK_LOG env var (quiet|info|debug).
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace ptrack
