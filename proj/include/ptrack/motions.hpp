#pragma once

#include <Eigen/Core>
#include <map>
#include <string>
#include <vector>

#include "ptrack/rng.hpp"
#include "ptrack/robot.hpp"

namespace ptrack {

struct MotionFrame {
  Eigen::VectorXd q_ref;          // rad
  Eigen::VectorXd qdot_ref;       // rad/s
  double base_height_ref = 0.0;   // m above local ground
  Vec2 base_vel_ref = Vec2::Zero();
  std::vector<Vec2> link_pos_ref;     // base-local CoM per link
  std::vector<double> feet_height_ref;  // per foot, above local ground
};

struct MotionClip {
  double fps = 50.0;
  std::vector<MotionFrame> frames;
  std::string kind;                        // generator name
  std::map<std::string, double> params;    // generator parameters
  double duration() const { return frames.empty() ? 0.0 : (frames.size() - 1) / fps; }
  int num_frames() const { return static_cast<int>(frames.size()); }
};

struct TrackingGoal {
  Eigen::VectorXd q_target;
  Eigen::VectorXd qdot_target;
  std::vector<Vec2> link_pos_target;
  double base_height_target = 0.0;
  Vec2 base_vel_target = Vec2::Zero();
  std::vector<double> feet_height_target;

  // Fixed flattening consumed by the policy/critic goal input.
  Eigen::VectorXd flatten() const;
  static int flat_size(const RobotModel& model);
};

extern const std::vector<std::string> kMotionKinds;  // stand lean squat walk hop kick

// Analytic joint trajectory at an arbitrary time; the clip generators sample
// this at frame times, tests sample it at fine resolution to verify the
// emitted velocities.
void motion_pose(const std::string& kind, const std::map<std::string, double>& params,
                 const RobotModel& model, double t, Eigen::VectorXd& q,
                 Eigen::VectorXd& qdot);

// Uniform generator parameters for a kind.
std::map<std::string, double> sample_motion_params(const std::string& kind, Rng& rng);

MotionClip generate_clip(const std::string& kind,
                         const std::map<std::string, double>& params, double duration,
                         double fps, const RobotModel& model);

// Linear interpolation between neighbouring frames; t past the end clamps to
// the last frame, negative t is a domain error.
TrackingGoal clip_goal(const MotionClip& clip, double t);

// Deterministic motion-statistics embedding used as the clustering signal.
Eigen::VectorXd feature_embedding(const MotionClip& clip, const RobotModel& model);

struct KmeansResult {
  Eigen::MatrixXd centroids;  // dim x k
  std::vector<int> assignments;
  double wcss = 0.0;
  int iterations = 0;
};

KmeansResult kmeans(const Eigen::MatrixXd& points, int k, int max_iters, uint64_t seed);

struct DatasetSpec {
  struct KindSpec {
    std::string kind;
    int count = 0;
  };
  std::vector<KindSpec> kinds;
  int k = 6;
  double fps = 50.0;
  double min_duration = 4.0;
  double max_duration = 8.0;
};

struct MotionDataset {
  std::vector<MotionClip> clips;
  std::vector<int> cluster_assignments;
  int k = 0;
  Eigen::MatrixXd embeddings;  // dim x clips, z-normalized
  DatasetSpec spec;
  uint64_t seed = 0;

  std::vector<int> cluster_members(int cluster) const;
  void validate() const;
};

MotionDataset build_dataset(const DatasetSpec& spec, uint64_t seed,
                            const RobotModel& model);

// Directory layout: manifest.json + clips/clip_NNN.bin (f32 LE frames).
void save_dataset(const MotionDataset& dataset, const std::string& dir);
MotionDataset load_dataset(const std::string& dir, const RobotModel& model);
void clip_to_csv(const MotionClip& clip, const std::string& path);

}  // namespace ptrack
