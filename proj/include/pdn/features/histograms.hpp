#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdn/features/frame.hpp"
#include "pdn/numerics/ops.hpp"

namespace pdn {

/// Which histograms a feature vector concatenates. Flow-based features would
/// slot in as another enumerator.
enum class FeatureKind { Hod, Hog, HodHog };

inline std::string_view to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::Hod: return "hod";
    case FeatureKind::Hog: return "hog";
    case FeatureKind::HodHog: return "hod+hog";
  }
  return "?";
}

inline FeatureKind parse_feature_kind(std::string_view s) {
  if (s == "hod") return FeatureKind::Hod;
  if (s == "hog") return FeatureKind::Hog;
  if (s == "hod+hog") return FeatureKind::HodHog;
  throw DataError("unknown feature kind '" + std::string(s) + "'");
}

/// Concatenated histograms; unit L2 norm, or exactly zero when empty.
struct FeatureVector {
  std::vector<double> values;
  FeatureKind kind = FeatureKind::Hod;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct FeatureParams {
  std::size_t hod_bins = 32;
  std::size_t hog_bins = 9;
  std::size_t hog_cell = 8;
};

/// Scales v to unit L2 norm; a zero vector is left as is.
inline void l2_normalize(std::vector<double>& v) {
  const double n = norm2(v);
  if (n == 0.0) return;
  for (double& x : v) x /= n;
}

/// Bucket of d in `bins` half-open buckets [lo, hi) tiling [-1, 1]; 1 lands in the last.
inline std::size_t difference_bucket(double d, std::size_t bins) {
  const double pos = std::floor((d + 1.0) * 0.5 * static_cast<double>(bins));
  if (pos < 0.0) return 0;
  return std::min(static_cast<std::size_t>(pos), bins - 1);
}

/// Histogram of frame differences: per-pixel gray(b) - gray(a), bucketed
/// over [-1, 1], L2-normalized.
inline FeatureVector hod(const Frame& a, const Frame& b, std::size_t bins) {
  if (!a.same_size(b)) throw ShapeError("hod: frame sizes differ");
  if (bins == 0) throw ShapeError("hod: bins must be positive");
  std::vector<double> hist(bins, 0.0);
  for (std::size_t i = 0; i < a.height(); ++i)
    for (std::size_t j = 0; j < a.width(); ++j) {
      // Difference of channel sums, then one division: exact for dyadic inputs.
      const double sa = a.at(i, j, 0) + a.at(i, j, 1) + a.at(i, j, 2);
      const double sb = b.at(i, j, 0) + b.at(i, j, 1) + b.at(i, j, 2);
      hist[difference_bucket((sb - sa) / 3.0, bins)] += 1.0;
    }
  l2_normalize(hist);
  return {std::move(hist), FeatureKind::Hod};
}

/// Unsigned gradient orientation in [0, pi).
inline double unsigned_orientation(double gx, double gy) {
  double angle = std::atan2(gy, gx);
  if (angle < 0.0) angle += std::numbers::pi;
  if (angle >= std::numbers::pi) angle -= std::numbers::pi;
  return angle;
}

inline std::size_t orientation_bin(double angle, std::size_t bins) {
  const auto b = static_cast<std::size_t>(angle / std::numbers::pi * static_cast<double>(bins));
  return std::min(b, bins - 1);
}

/// Histogram of oriented gradients. Central differences on the gray image
/// with replicated borders; per-cell orientation histograms weighted by
/// gradient magnitude, concatenated cell by cell (row-major), L2-normalized.
inline FeatureVector hog(const Frame& f, std::size_t orientation_bins, std::size_t cell) {
  if (cell == 0 || orientation_bins == 0) throw ShapeError("hog: bins and cell must be positive");
  if (f.height() % cell != 0 || f.width() % cell != 0) {
    throw ShapeError("hog: frame " + std::to_string(f.height()) + "x" +
                     std::to_string(f.width()) + " not divisible by cell " +
                     std::to_string(cell));
  }
  const std::size_t h = f.height(), w = f.width();
  const std::size_t cells_x = w / cell;
  const Tensor g = f.gray_tensor();
  std::vector<double> hist((h / cell) * cells_x * orientation_bins, 0.0);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      const double gx = g(i, std::min(j + 1, w - 1)) - g(i, j == 0 ? 0 : j - 1);
      const double gy = g(std::min(i + 1, h - 1), j) - g(i == 0 ? 0 : i - 1, j);
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      const std::size_t c = (i / cell) * cells_x + (j / cell);
      hist[c * orientation_bins + orientation_bin(unsigned_orientation(gx, gy), orientation_bins)] +=
          mag;
    }
  l2_normalize(hist);
  return {std::move(hist), FeatureKind::Hog};
}

/// Consecutive frames sharing one spatial rectangle.
struct VideoTube {
  std::span<const Frame> frames;
  Rect rect;

  void validate() const {
    if (frames.size() < 2) throw ShapeError("video tube needs at least 2 frames");
    for (const auto& f : frames) {
      if (!rect.inside(f)) throw ShapeError("video tube rectangle outside frame bounds");
    }
  }
};

/// One feature vector per consecutive frame pair (HOD, HOD+HOG) or per
/// frame (HOG), computed on the tube crop. HOD+HOG concatenates the pair's
/// HOD with the HOG of its later frame, then renormalizes.
inline std::vector<FeatureVector> tube_features(const VideoTube& tube, FeatureKind kind,
                                                const FeatureParams& params) {
  tube.validate();
  std::vector<Frame> crops;
  crops.reserve(tube.frames.size());
  for (const auto& f : tube.frames) crops.push_back(crop(f, tube.rect));

  std::vector<FeatureVector> out;
  if (kind == FeatureKind::Hog) {
    for (const auto& c : crops) out.push_back(hog(c, params.hog_bins, params.hog_cell));
    return out;
  }
  for (std::size_t t = 0; t + 1 < crops.size(); ++t) {
    FeatureVector v = hod(crops[t], crops[t + 1], params.hod_bins);
    if (kind == FeatureKind::HodHog) {
      const FeatureVector g = hog(crops[t + 1], params.hog_bins, params.hog_cell);
      v.values.insert(v.values.end(), g.values.begin(), g.values.end());
      l2_normalize(v.values);
      v.kind = FeatureKind::HodHog;
    }
    out.push_back(std::move(v));
  }
  return out;
}

inline std::size_t feature_length(FeatureKind kind, const FeatureParams& p, std::size_t height,
                                  std::size_t width) {
  const std::size_t hog_len = (height / p.hog_cell) * (width / p.hog_cell) * p.hog_bins;
  switch (kind) {
    case FeatureKind::Hod: return p.hod_bins;
    case FeatureKind::Hog: return hog_len;
    case FeatureKind::HodHog: return p.hod_bins + hog_len;
  }
  return 0;
}

}  // namespace pdn
