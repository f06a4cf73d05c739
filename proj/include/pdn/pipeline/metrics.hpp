#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "pdn/numerics/log.hpp"
#include "pdn/numerics/tensor.hpp"

namespace pdn {

/// All-point interpolated average precision of one class. Tied scores form
/// one threshold. Returns nullopt when there are no positives.
inline std::optional<double> average_precision(const std::vector<double>& scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw ShapeError("average_precision: length mismatch");
  const auto total_pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
  if (total_pos == 0) return std::nullopt;
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<double> recall, precision;
  std::size_t tp = 0, seen = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double s = scores[order[k]];
    while (k < order.size() && scores[order[k]] == s) {
      tp += positive[order[k]] ? 1 : 0;
      ++seen;
      ++k;
    }
    recall.push_back(static_cast<double>(tp) / static_cast<double>(total_pos));
    precision.push_back(static_cast<double>(tp) / static_cast<double>(seen));
  }
  for (std::size_t i = precision.size() - 1; i-- > 0;) precision[i] = std::max(precision[i], precision[i + 1]);
  double ap = 0.0, prev = 0.0;
  for (std::size_t i = 0; i < recall.size(); ++i) {
    ap += (recall[i] - prev) * precision[i];
    prev = recall[i];
  }
  return ap;
}

struct MapResult {
  std::vector<std::optional<double>> ap;  // per class; nullopt = no positives
  double mean = 0.0;                      // over classes with positives
};

/// scores[n][c] for sample n; labels[n] lists the classes present in sample n.
inline MapResult evaluate_map(const std::vector<std::vector<double>>& scores,
                              const std::vector<std::vector<std::size_t>>& labels, std::size_t classes) {
  if (scores.size() != labels.size()) throw ShapeError("evaluate_map: score and label counts differ");
  for (const auto& row : scores) {
    if (row.size() != classes) throw ShapeError("evaluate_map: score row length differs from class count");
    for (double v : row)
      if (!std::isfinite(v)) throw DataError("evaluate_map: non-finite score");
  }
  MapResult r;
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<double> col(scores.size());
    std::vector<bool> pos(scores.size());
    for (std::size_t n = 0; n < scores.size(); ++n) {
      col[n] = scores[n][c];
      for (std::size_t l : labels[n]) {
        if (l >= classes) throw DataError("evaluate_map: label out of range");
        if (l == c) pos[n] = true;
      }
    }
    r.ap.push_back(average_precision(col, pos));
    if (r.ap.back()) {
      sum += *r.ap.back();
      ++used;
    } else {
      log::error("warning: class " + std::to_string(c) + " has no positives; excluded from mean AP");
    }
  }
  if (used == 0) throw DataError("evaluate_map: no class has positives");
  r.mean = sum / static_cast<double>(used);
  return r;
}

}  // namespace pdn
