#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pdn/amp/kmeans.hpp"
#include "pdn/features/histograms.hpp"
#include "pdn/numerics/tensor.hpp"

namespace pdn {

/// Clustered motion-primitive centroids, one row per AMP.
struct AmpLibrary {
  Tensor centroids;  // (A, feature length)
  FeatureKind kind = FeatureKind::Hod;
  std::uint64_t seed = 0;
  std::size_t distribution_size = 3;

  std::size_t size() const { return centroids.empty() ? 0 : centroids.dim(0); }
  std::size_t feature_length() const { return centroids.empty() ? 0 : centroids.dim(1); }
  std::span<const double> centroid(std::size_t i) const { return centroids.row(i); }
};

struct AmpEntry {
  std::size_t index = 0;
  double probability = 0.0;
  friend bool operator==(const AmpEntry&, const AmpEntry&) = default;
};

/// Distribution over a few AMP indices; entries ordered by descending
/// probability, ties by index. Indices distinct, probabilities positive and
/// summing to one.
struct AmpDistribution {
  std::vector<AmpEntry> entries;

  static AmpDistribution point(std::size_t index) { return {{{index, 1.0}}}; }

  std::size_t top() const { return entries.front().index; }

  std::vector<std::size_t> index_set() const {
    std::vector<std::size_t> s;
    for (const auto& e : entries) s.push_back(e.index);
    std::sort(s.begin(), s.end());
    return s;
  }

  double total() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.probability;
    return s;
  }

  friend bool operator==(const AmpDistribution&, const AmpDistribution&) = default;
};

using PlanTrace = std::vector<AmpDistribution>;

/// One recognized plan: K future AMP indices for the region with mask code `plan`.
struct RecognizedPlan {
  std::size_t plan = 1;
  std::vector<std::size_t> steps;
};

inline constexpr double kInverseDistanceFloor = 1e-8;

/// Clusters feature vectors into an AMP library.
inline AmpLibrary build_library(std::span<const std::vector<double>> features, std::size_t clusters,
                                FeatureKind kind, std::uint64_t seed, std::size_t max_iter = 100,
                                std::size_t threads = 1, KmeansResult* details = nullptr) {
  if (clusters < 2) throw ShapeError("AMP library needs at least 2 clusters");
  KmeansResult km = kmeans_fit(features, clusters, seed, max_iter, threads);
  AmpLibrary lib;
  const std::size_t dim = features[0].size();
  lib.centroids = Tensor({clusters, dim});
  for (std::size_t c = 0; c < clusters; ++c)
    std::copy(km.centroids[c].begin(), km.centroids[c].end(), lib.centroids.row(c).begin());
  lib.kind = kind;
  lib.seed = seed;
  if (details) *details = std::move(km);
  return lib;
}

/// The `count` nearest centroids by Euclidean distance, weighted by inverse
/// distance: p_i = (1/(d_i+eps)) / sum_j (1/(d_j+eps)).
inline AmpDistribution assign_distribution(std::span<const double> f, const AmpLibrary& lib,
                                           std::size_t count) {
  if (f.size() != lib.feature_length()) {
    throw ShapeError("assign_distribution: feature length " + std::to_string(f.size()) +
                     " vs library " + std::to_string(lib.feature_length()));
  }
  if (count == 0 || count > lib.size()) {
    throw ShapeError("assign_distribution: distribution size " + std::to_string(count) +
                     " with " + std::to_string(lib.size()) + " clusters");
  }
  std::vector<double> dist(lib.size());
  for (std::size_t c = 0; c < lib.size(); ++c) {
    dist[c] = std::sqrt(squared_distance(f, lib.centroid(c)));
  }
  std::vector<std::size_t> order(lib.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                    });
  AmpDistribution out;
  double z = 0.0;
  for (std::size_t n = 0; n < count; ++n) z += 1.0 / (dist[order[n]] + kInverseDistanceFloor);
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t c = order[n];
    out.entries.push_back({c, (1.0 / (dist[c] + kInverseDistanceFloor)) / z});
  }
  return out;
}

/// Collapses maximal runs of distributions sharing an index set into one
/// distribution holding the run-mean probabilities.
inline PlanTrace merge_consecutive(const PlanTrace& trace) {
  PlanTrace out;
  std::size_t start = 0;
  while (start < trace.size()) {
    const auto key = trace[start].index_set();
    std::size_t end = start + 1;
    while (end < trace.size() && trace[end].index_set() == key) ++end;
    if (end - start == 1) {
      out.push_back(trace[start]);
    } else {
      AmpDistribution merged;
      for (std::size_t idx : key) {
        double s = 0.0;
        for (std::size_t t = start; t < end; ++t)
          for (const auto& e : trace[t].entries)
            if (e.index == idx) s += e.probability;
        merged.entries.push_back({idx, s / static_cast<double>(end - start)});
      }
      std::stable_sort(merged.entries.begin(), merged.entries.end(),
                       [](const AmpEntry& a, const AmpEntry& b) { return a.probability > b.probability; });
      out.push_back(std::move(merged));
    }
    start = end;
  }
  return out;
}

inline FeatureVector decode_amp(std::size_t index, const AmpLibrary& lib) {
  if (index >= lib.size()) {
    throw ShapeError("decode_amp: index " + std::to_string(index) + " out of range for " +
                     std::to_string(lib.size()) + " clusters");
  }
  auto row = lib.centroid(index);
  return {std::vector<double>(row.begin(), row.end()), lib.kind};
}

}  // namespace pdn
