#include <cmath>

#include "ptrack/eval.hpp"

namespace ptrack {

double mpjpe(const Eigen::MatrixXd& executed, const Eigen::MatrixXd& reference) {
  if (executed.rows() != reference.rows() || executed.cols() != reference.cols())
    throw ShapeError("mpjpe: trajectory shapes differ");
  if (executed.rows() % 2 != 0) throw ShapeError("mpjpe: rows must be 2 * links");
  const int L = static_cast<int>(executed.rows()) / 2;
  const int T = static_cast<int>(executed.cols());
  if (T == 0 || L == 0) throw ShapeError("mpjpe: empty trajectory");
  double sum = 0.0;
  for (int t = 0; t < T; ++t)
    for (int l = 0; l < L; ++l) {
      const double dx = executed(2 * l, t) - reference(2 * l, t);
      const double dz = executed(2 * l + 1, t) - reference(2 * l + 1, t);
      sum += std::sqrt(dx * dx + dz * dz);
    }
  return 1000.0 * sum / (T * L);
}

double mpjve(const Eigen::MatrixXd& executed, const Eigen::MatrixXd& reference,
             double fps) {
  (void)fps;  // errors are reported per frame
  if (executed.rows() != reference.rows() || executed.cols() != reference.cols())
    throw ShapeError("mpjve: trajectory shapes differ");
  const int T = static_cast<int>(executed.cols());
  if (T < 2) throw DomainError("mpjve: need at least two frames");
  const int L = static_cast<int>(executed.rows()) / 2;
  double sum = 0.0;
  for (int t = 1; t < T; ++t)
    for (int l = 0; l < L; ++l) {
      const double vx = (executed(2 * l, t) - executed(2 * l, t - 1)) -
                        (reference(2 * l, t) - reference(2 * l, t - 1));
      const double vz = (executed(2 * l + 1, t) - executed(2 * l + 1, t - 1)) -
                        (reference(2 * l + 1, t) - reference(2 * l + 1, t - 1));
      sum += std::sqrt(vx * vx + vz * vz);
    }
  return 1000.0 * sum / ((T - 1) * L);
}

bool success(const EpisodeTrace& episode) {
  if (episode.terminated_early || episode.diverged) return false;
  for (double e : episode.mean_link_err)
    if (e > 0.2) return false;
  for (double e : episode.root_height_err)
    if (std::abs(e) > 0.2) return false;
  return true;
}

Eigen::VectorXd MlpController::act(const Eigen::VectorXd& obs,
                                   const Eigen::VectorXd& goal) {
  Eigen::VectorXd in(obs.size() + goal.size());
  in << obs, goal;
  return actor_.mean(in, false).col(0);
}

}  // namespace ptrack
