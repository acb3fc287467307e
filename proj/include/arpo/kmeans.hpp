#ifndef ARPO_KMEANS_HPP_
#define ARPO_KMEANS_HPP_

#include <cstdint>
#include <vector>

namespace arpo {

struct KMeansConfig {
  int k = 3;
  std::uint64_t seed = 0;
  int max_iter = 100;
  double tol = 1e-10;  // convergence bound on the max squared centroid shift
  int restarts = 10;
};

struct KMeansResult {
  std::vector<int> assignments;  // one centroid index per input point
  std::vector<std::vector<double>> centroids;
  double sse = 0.0;
  int effective_k = 0;
  int iterations = 0;  // Lloyd iterations of the winning restart
};

// Lloyd's algorithm with k-means++ seeding, deterministic for a fixed seed,
// finished by a Hartigan-style single-point polish that escapes Lloyd-stable
// local optima on small inputs. Effective k shrinks to the number of distinct
// points when that is smaller; a cluster emptied by an update step is
// re-seeded from the farthest point. Best-of-restarts by SSE, earlier restart
// winning ties.
// Throws std::invalid_argument on empty input, mismatched dimensions, k < 1,
// max_iter < 1, or restarts < 1.
KMeansResult kmeans(const std::vector<std::vector<double>>& points,
                    const KMeansConfig& cfg);

}  // namespace arpo

#endif  // ARPO_KMEANS_HPP_
