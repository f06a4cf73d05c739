#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "pdn/features/frame.hpp"
#include "pdn/numerics/tensor.hpp"

namespace pdn {

struct Pixel {
  std::size_t i = 0, j = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Pixels labelled with one plan index (m >= 1).
struct PlanRegion {
  std::vector<Pixel> pixels;
  std::size_t plan = 1;
};

/// Five-channel N x N image: 0 location IDs, 1 mask codes, 2..4 RGB.
struct MaskedImage {
  Tensor v;  // (5, N, N)

  static constexpr std::size_t kLocation = 0;
  static constexpr std::size_t kMask = 1;
  static constexpr std::size_t kRgb = 2;

  std::size_t size() const { return v.empty() ? 0 : v.dim(1); }
  double location(std::size_t i, std::size_t j) const { return v(kLocation, i, j); }
  double mask(std::size_t i, std::size_t j) const { return v(kMask, i, j); }
  double rgb(std::size_t c, std::size_t i, std::size_t j) const { return v(kRgb + c, i, j); }

  /// Flattened location channel, row-major.
  std::vector<double> location_vector() const {
    const std::size_t n = size();
    std::vector<double> out(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] = location(i, j);
    return out;
  }

  std::size_t max_mask_code() const {
    std::size_t m = 0;
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m = std::max(m, static_cast<std::size_t>(mask(i, j)));
    return m;
  }
};

inline MaskedImage build_masked_image(const Frame& frame, const std::vector<PlanRegion>& regions) {
  if (frame.height() != frame.width()) {
    throw ShapeError("masked image needs a square frame, got " + std::to_string(frame.height()) + "x" +
                     std::to_string(frame.width()));
  }
  const std::size_t n = frame.height();
  MaskedImage out;
  out.v = Tensor({5, n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      out.v(MaskedImage::kLocation, i, j) = static_cast<double>(i * n + j);
      for (std::size_t c = 0; c < 3; ++c) out.v(MaskedImage::kRgb + c, i, j) = frame.at(i, j, c);
    }
  for (const auto& r : regions) {
    if (r.plan == 0) throw DataError("mask code 0 is reserved for unlabelled pixels");
    for (const auto& p : r.pixels) {
      if (p.i >= n || p.j >= n) throw ShapeError("region pixel outside the image");
      double& cell = out.v(MaskedImage::kMask, p.i, p.j);
      if (cell != 0.0) throw DataError("plan regions overlap");
      cell = static_cast<double>(r.plan);
    }
  }
  return out;
}

}  // namespace pdn
