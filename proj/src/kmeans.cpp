#include "arpo/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "arpo/rng.hpp"

namespace arpo {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

// D^2-weighted seeding. Stops early once every point coincides with a chosen
// centroid, which is what bounds effective k by the distinct-point count.
std::vector<std::vector<double>> seed_centroids(
    const std::vector<std::vector<double>>& points, int k,
    std::mt19937_64& rng) {
  const std::size_t n = points.size();
  std::vector<std::vector<double>> centroids;
  centroids.reserve(static_cast<std::size_t>(k));
  const std::size_t first = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  centroids.push_back(points[std::min(first, n - 1)]);

  std::vector<double> d2(n);
  while (centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) best = std::min(best, sq_dist(points[i], c));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) break;
    const double target = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t pick = 0;
    std::size_t last_positive = 0;
    bool found = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (d2[i] > 0.0) last_positive = i;
      acc += d2[i];
      if (!found && acc > target && d2[i] > 0.0) {
        pick = i;
        found = true;
      }
    }
    if (!found) pick = last_positive;  // rounding pushed target past the mass
    centroids.push_back(points[pick]);
  }
  return centroids;
}

void assign_points(const std::vector<std::vector<double>>& points,
                   const std::vector<std::vector<double>>& centroids,
                   std::vector<int>& assignments) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    int best = 0;
    double best_d = sq_dist(points[i], centroids[0]);
    for (std::size_t c = 1; c < centroids.size(); ++c) {
      const double d = sq_dist(points[i], centroids[c]);
      if (d < best_d) {  // ties keep the lowest centroid index
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    assignments[i] = best;
  }
}

KMeansResult run_once(const std::vector<std::vector<double>>& points, int k,
                      int max_iter, double tol, std::uint64_t seed) {
  const std::size_t n = points.size();
  const std::size_t dim = points[0].size();
  std::mt19937_64 rng(seed);

  std::vector<std::vector<double>> centroids = seed_centroids(points, k, rng);
  const std::size_t kk = centroids.size();
  std::vector<int> assignments(n, 0);
  int iterations = 0;

  for (int iter = 0; iter < max_iter; ++iter) {
    iterations = iter + 1;
    assign_points(points, centroids, assignments);

    std::vector<std::vector<double>> sums(kk, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(kk, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(assignments[i]);
      ++counts[c];
      for (std::size_t d = 0; d < dim; ++d) sums[c][d] += points[i][d];
    }

    // Re-seed each emptied cluster from the point farthest from its current
    // centroid; that point is then spoken for.
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < kk; ++c) {
      if (counts[c] > 0) continue;
      double far_d = -1.0;
      std::size_t far_i = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i]) continue;
        const double d = sq_dist(points[i], centroids[static_cast<std::size_t>(assignments[i])]);
        if (d > far_d) {
          far_d = d;
          far_i = i;
        }
      }
      taken[far_i] = true;
      sums[c] = points[far_i];
      counts[c] = 1;
      const auto old = static_cast<std::size_t>(assignments[far_i]);
      --counts[old];
      for (std::size_t d = 0; d < dim; ++d) sums[old][d] -= points[far_i][d];
      assignments[far_i] = static_cast<int>(c);
    }

    double max_shift = 0.0;
    for (std::size_t c = 0; c < kk; ++c) {
      if (counts[c] == 0) continue;  // only possible when a re-seed emptied it
      std::vector<double> next(dim);
      for (std::size_t d = 0; d < dim; ++d) {
        next[d] = sums[c][d] / static_cast<double>(counts[c]);
      }
      max_shift = std::max(max_shift, sq_dist(next, centroids[c]));
      centroids[c] = std::move(next);
    }
    if (max_shift <= tol) break;
  }

  assign_points(points, centroids, assignments);

  // Single-point polish (Hartigan-style): move a point when the size-corrected
  // SSE delta is an improvement. Lloyd is Voronoi-stable but not move-stable;
  // on small inputs this step removes most of its spurious local optima.
  {
    std::vector<std::vector<double>> sums(kk, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(kk, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(assignments[i]);
      ++counts[c];
      for (std::size_t d = 0; d < dim; ++d) sums[c][d] += points[i][d];
    }
    for (std::size_t c = 0; c < kk; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t d = 0; d < dim; ++d) {
        centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
      }
    }
    bool moved = kk > 1;
    for (int sweep = 0; moved && sweep < max_iter; ++sweep) {
      moved = false;
      for (std::size_t i = 0; i < n; ++i) {
        const auto a = static_cast<std::size_t>(assignments[i]);
        if (counts[a] <= 1) continue;  // a move may not empty a cluster
        const double removal = static_cast<double>(counts[a]) /
                               static_cast<double>(counts[a] - 1) *
                               sq_dist(points[i], centroids[a]);
        double best_gain = 0.0;
        std::size_t best_b = a;
        for (std::size_t b = 0; b < kk; ++b) {
          if (b == a) continue;
          const double addition = static_cast<double>(counts[b]) /
                                  static_cast<double>(counts[b] + 1) *
                                  sq_dist(points[i], centroids[b]);
          const double gain = removal - addition;
          if (gain > best_gain) {
            best_gain = gain;
            best_b = b;
          }
        }
        if (best_b == a || best_gain <= 1e-15 * removal) continue;
        for (std::size_t d = 0; d < dim; ++d) {
          sums[a][d] -= points[i][d];
          sums[best_b][d] += points[i][d];
        }
        --counts[a];
        ++counts[best_b];
        for (std::size_t d = 0; d < dim; ++d) {
          centroids[a][d] = sums[a][d] / static_cast<double>(counts[a]);
          centroids[best_b][d] = sums[best_b][d] / static_cast<double>(counts[best_b]);
        }
        assignments[i] = static_cast<int>(best_b);
        moved = true;
      }
    }
  }

  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sse += sq_dist(points[i], centroids[static_cast<std::size_t>(assignments[i])]);
  }

  KMeansResult res;
  res.assignments = std::move(assignments);
  res.centroids = std::move(centroids);
  res.sse = sse;
  res.effective_k = static_cast<int>(kk);
  res.iterations = iterations;
  return res;
}

}  // namespace

KMeansResult kmeans(const std::vector<std::vector<double>>& points,
                    const KMeansConfig& cfg) {
  if (points.empty()) {
    throw std::invalid_argument("kmeans: need at least one point");
  }
  const std::size_t dim = points[0].size();
  for (const auto& p : points) {
    if (p.size() != dim) {
      throw std::invalid_argument("kmeans: all points must share one dimension");
    }
  }
  if (cfg.k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (cfg.max_iter < 1) throw std::invalid_argument("kmeans: max_iter must be >= 1");
  if (cfg.restarts < 1) throw std::invalid_argument("kmeans: restarts must be >= 1");

  const int k = std::min<int>(cfg.k, static_cast<int>(points.size()));
  KMeansResult best;
  bool have = false;
  for (int r = 0; r < cfg.restarts; ++r) {
    KMeansResult res = run_once(points, k, cfg.max_iter, cfg.tol,
                                mix_seeds(cfg.seed, static_cast<std::uint64_t>(r)));
    if (!have || res.sse < best.sse) {
      best = std::move(res);
      have = true;
    }
  }
  return best;
}

}  // namespace arpo
