#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pdn/numerics/ops.hpp"
#include "pdn/numerics/parallel.hpp"
#include "pdn/numerics/rng.hpp"

namespace pdn {

struct KmeansResult {
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> assignment;
  /// Inertia (sum of squared distances) after each assignment step.
  std::vector<double> inertia;
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {

struct Nearest {
  std::size_t index;
  double dist2;
};

inline Nearest nearest_centroid(std::span<const double> x,
                                const std::vector<std::vector<double>>& centroids) {
  Nearest best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(x, centroids[c]);
    if (d < best.dist2) best = {c, d};
  }
  return best;
}

}  // namespace detail

/// k-means++ seeding: first centre uniform, then D^2 sampling.
inline std::vector<std::vector<double>> kmeans_pp_seed(std::span<const std::vector<double>> points,
                                                       std::size_t k, SeededRng& rng) {
  std::vector<std::vector<double>> centroids;
  centroids.push_back(points[rng.index(points.size())]);
  std::vector<double> d2(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) d2[p] = squared_distance(points[p], centroids[0]);
  while (centroids.size() < k) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick;
    if (total > 0.0) {
      pick = rng.weighted(d2);
    } else {
      pick = rng.index(points.size());
    }
    centroids.push_back(points[pick]);
    for (std::size_t p = 0; p < points.size(); ++p) {
      d2[p] = std::min(d2[p], squared_distance(points[p], centroids.back()));
    }
  }
  return centroids;
}

/// Lloyd's algorithm with k-means++ seeding. Stops at an assignment fixpoint
/// or after max_iter assignment steps. An emptied cluster is moved onto the
/// point farthest from its current centroid.
inline KmeansResult kmeans_fit(std::span<const std::vector<double>> points, std::size_t k,
                               std::uint64_t seed, std::size_t max_iter,
                               std::size_t threads = 1) {
  if (k == 0) throw ShapeError("kmeans: need at least one cluster");
  if (points.size() < k) {
    throw ShapeError("kmeans: " + std::to_string(points.size()) + " points for " +
                     std::to_string(k) + " clusters");
  }
  const std::size_t dim = points[0].size();
  for (const auto& p : points) {
    if (p.size() != dim) throw ShapeError("kmeans: points differ in length");
  }
  SeededRng rng(seed);
  KmeansResult r;
  r.centroids = kmeans_pp_seed(points, k, rng);
  r.assignment.assign(points.size(), k);  // k = unassigned

  std::vector<detail::Nearest> nearest(points.size());
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    parallel_for(points.size(), threads,
                 [&](std::size_t p) { nearest[p] = detail::nearest_centroid(points[p], r.centroids); });
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t p = 0; p < points.size(); ++p) {
      if (r.assignment[p] != nearest[p].index) changed = true;
      r.assignment[p] = nearest[p].index;
      inertia += nearest[p].dist2;
    }
    r.inertia.push_back(inertia);
    r.iterations = iter + 1;
    if (!changed) {
      r.converged = true;
      break;
    }

    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t p = 0; p < points.size(); ++p) {
      auto& s = sums[r.assignment[p]];
      for (std::size_t d = 0; d < dim; ++d) s[d] += points[p][d];
      ++counts[r.assignment[p]];
    }
    std::vector<bool> taken(points.size(), false);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (std::size_t d = 0; d < dim; ++d) {
          r.centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
        }
        continue;
      }
      // Farthest point from the empty cluster's centroid that has not been
      // claimed by another re-seed in this round.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t p = 0; p < points.size(); ++p) {
        if (taken[p]) continue;
        const double dd = squared_distance(points[p], r.centroids[c]);
        if (dd > far_d) {
          far_d = dd;
          far = p;
        }
      }
      taken[far] = true;
      r.centroids[c] = points[far];
    }
  }
  return r;
}

}  // namespace pdn
