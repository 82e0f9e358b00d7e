#pragma once

#include <Eigen/Core>
#include <map>
#include <string>
#include <vector>

#include "ptrack/tracker.hpp"

namespace ptrack {

// Link trajectories are (2 * links) x T matrices, base-local coordinates.
double mpjpe(const Eigen::MatrixXd& executed, const Eigen::MatrixXd& reference);
double mpjve(const Eigen::MatrixXd& executed, const Eigen::MatrixXd& reference,
             double fps);

struct EpisodeTrace {
  Eigen::MatrixXd executed;   // (2L) x T
  Eigen::MatrixXd reference;  // (2L) x T
  std::vector<double> mean_link_err;    // m, per step
  std::vector<double> root_height_err;  // m, per step
  bool terminated_early = false;
  bool diverged = false;
  double fps = 50.0;
};

// SR failure rule: any step with mean link position error > 0.2 m or root
// height error > 0.2 m, or an early termination, fails the episode.
bool success(const EpisodeTrace& episode);

// Deterministic policy interface used for evaluation (mean actions only).
class Controller {
 public:
  virtual ~Controller() = default;
  virtual void reset() {}
  virtual Eigen::VectorXd act(const Eigen::VectorXd& obs, const Eigen::VectorXd& goal) = 0;
};

class MlpController : public Controller {
 public:
  explicit MlpController(MlpActor& actor) : actor_(actor) {}
  Eigen::VectorXd act(const Eigen::VectorXd& obs, const Eigen::VectorXd& goal) override;

 private:
  MlpActor& actor_;
};

struct EvalScenario {
  std::string name = "no_disturbance";
  std::vector<int> clips;             // indices into the dataset
  std::vector<uint64_t> seeds;        // one episode per clip per seed
  double max_episode_s = 8.0;
  DisturbanceRanges ranges;           // derived from the name

  static EvalScenario named(const std::string& name, std::vector<int> clips,
                            std::vector<uint64_t> seeds);
  bool disturbed() const { return name != "no_disturbance"; }
};

struct ClipMetrics {
  int clip = 0;
  int episodes = 0;
  int successes = 0;
  double mpjpe_mm = 0.0;  // averaged over successful episodes
  double mpjve_mm = 0.0;
};

struct MetricsReport {
  std::string scenario;
  double sr = 0.0;        // percent
  double mpjpe_mm = 0.0;  // successful episodes only
  double mpjve_mm = 0.0;
  int episodes = 0;
  int successes = 0;
  int seed_count = 0;
  std::vector<ClipMetrics> per_clip;

  std::string to_json() const;
  std::string to_csv() const;
};

// Rolls one episode from phase zero under the given config.
EpisodeTrace run_episode(const RobotModel& model, const MotionDataset& dataset,
                         int clip_index, const DynamicsConfig& config,
                         Controller& controller, double max_episode_s = 8.0);

MetricsReport run_scenario(const RobotModel& model, const MotionDataset& dataset,
                           const EvalScenario& scenario, Controller& controller);

void write_report(const MetricsReport& report, const std::string& json_path,
                  const std::string& csv_path);

// Methods x scenarios comparison emitted as CSV plus a simple SVG bar chart.
void write_comparison(const std::map<std::string, std::map<std::string, MetricsReport>>&
                          method_to_scenario,
                      const std::string& csv_path, const std::string& svg_path);

}  // namespace ptrack
