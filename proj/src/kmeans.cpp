#include <limits>

#include "ptrack/errors.hpp"
#include "ptrack/motions.hpp"

namespace ptrack {

KmeansResult kmeans(const Eigen::MatrixXd& points, int k, int max_iters, uint64_t seed) {
  const int n = static_cast<int>(points.cols());
  const int dim = static_cast<int>(points.rows());
  if (k < 1) throw ConfigError("kmeans: k must be >= 1");
  if (k > n) throw ConfigError("kmeans: k exceeds point count");

  Rng rng(seed);
  Eigen::MatrixXd centroids(dim, k);

  // k-means++ seeding
  centroids.col(0) = points.col(rng.index(n));
  Eigen::VectorXd d2 = (points.colwise() - centroids.col(0)).colwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    int pick = 0;
    if (total <= 0.0) {
      pick = static_cast<int>(rng.index(n));
    } else {
      double r = rng.uniform01() * total;
      for (; pick < n - 1; ++pick) {
        r -= d2(pick);
        if (r <= 0.0) break;
      }
    }
    centroids.col(c) = points.col(pick);
    d2 = d2.cwiseMin((points.colwise() - centroids.col(c)).colwise().squaredNorm().transpose());
  }

  KmeansResult res;
  res.assignments.assign(n, -1);
  std::vector<int> counts(k, 0);

  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    // assign
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (points.col(i) - centroids.col(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (res.assignments[i] != best) {
        res.assignments[i] = best;
        changed = true;
      }
    }
    res.iterations = iter + 1;

    // update
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(dim, k);
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) {
      sums.col(res.assignments[i]) += points.col(i);
      counts[res.assignments[i]]++;
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centroids.col(c) = sums.col(c) / counts[c];
      } else {
        // empty cluster: seize the point farthest from its centroid
        int far = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          const double d =
              (points.col(i) - centroids.col(res.assignments[i])).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centroids.col(c) = points.col(far);
        res.assignments[far] = c;
        changed = true;
      }
    }
    if (!changed) break;
  }

  res.centroids = centroids;
  res.wcss = 0.0;
  for (int i = 0; i < n; ++i)
    res.wcss += (points.col(i) - centroids.col(res.assignments[i])).squaredNorm();
  return res;
}

}  // namespace ptrack
