#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "pdn/features/frame.hpp"
#include "pdn/pdn/masked_image.hpp"

namespace pdn {

/// Separable Gaussian blur with replicated borders; radius ceil(3 sigma).
inline Tensor gaussian_blur(const Tensor& img, double sigma) {
  if (img.rank() != 2) throw ShapeError("gaussian_blur: expected a 2-D map");
  if (!(sigma > 0.0)) return img;
  const long r = static_cast<long>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  double z = 0.0;
  for (long d = -r; d <= r; ++d) {
    k[static_cast<std::size_t>(d + r)] = std::exp(-0.5 * static_cast<double>(d * d) / (sigma * sigma));
    z += k[static_cast<std::size_t>(d + r)];
  }
  for (double& x : k) x /= z;
  const long h = static_cast<long>(img.dim(0)), w = static_cast<long>(img.dim(1));
  auto clampi = [](long v, long hi) { return std::clamp(v, 0L, hi - 1); };
  Tensor tmp(img.shape()), out(img.shape());
  for (long i = 0; i < h; ++i)
    for (long j = 0; j < w; ++j) {
      double s = 0.0;
      for (long d = -r; d <= r; ++d)
        s += k[static_cast<std::size_t>(d + r)] * img(static_cast<std::size_t>(i), static_cast<std::size_t>(clampi(j + d, w)));
      tmp(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = s;
    }
  for (long i = 0; i < h; ++i)
    for (long j = 0; j < w; ++j) {
      double s = 0.0;
      for (long d = -r; d <= r; ++d)
        s += k[static_cast<std::size_t>(d + r)] * tmp(static_cast<std::size_t>(clampi(i + d, h)), static_cast<std::size_t>(j));
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = s;
    }
  return out;
}

/// Affine rescale to [0, 1]; a constant map becomes all zeros.
inline Tensor minmax_normalize(const Tensor& m) {
  m.check_finite("attention map");
  Tensor out(m.shape());
  if (m.size() == 0) return out;
  const auto [lo, hi] = std::minmax_element(m.values().begin(), m.values().end());
  const double span = *hi - *lo;
  if (span <= 0.0) return out;
  for (std::size_t k = 0; k < m.size(); ++k) out[k] = (m[k] - *lo) / span;
  return out;
}

/// Bottom-up attention: blurred absolute gray-level change, normalized.
inline Tensor compute_bua(const Frame& frame_t, const Frame& frame_prev, double sigma = 1.5) {
  if (!frame_t.same_size(frame_prev)) throw ShapeError("compute_bua: frame sizes differ");
  Tensor diff({frame_t.height(), frame_t.width()});
  for (std::size_t i = 0; i < frame_t.height(); ++i)
    for (std::size_t j = 0; j < frame_t.width(); ++j) diff(i, j) = std::abs(frame_t.gray(i, j) - frame_prev.gray(i, j));
  return minmax_normalize(gaussian_blur(diff, sigma));
}

/// normalize(bua + lambda * normalize(prda)). An empty PRDA (no plans)
/// contributes nothing.
inline Tensor combine_attention(const Tensor& bua, const Tensor& prda, double lambda) {
  if (!(lambda >= 0.0)) throw DataError("combine_attention: lambda must be >= 0");
  if (prda.empty() || lambda == 0.0) {
    if (!prda.empty() && prda.shape() != bua.shape()) throw ShapeError("combine_attention: shapes differ");
    return minmax_normalize(bua);
  }
  if (prda.shape() != bua.shape()) throw ShapeError("combine_attention: shapes differ");
  Tensor p = minmax_normalize(prda);
  Tensor sum(bua.shape());
  for (std::size_t k = 0; k < sum.size(); ++k) sum[k] = bua[k] + lambda * p[k];
  return minmax_normalize(sum);
}

struct Glimpse {
  std::vector<Pixel> pixels;  // row-major order
  std::size_t plan = 1;

  Rect bbox() const {
    std::size_t i0 = pixels[0].i, i1 = i0, j0 = pixels[0].j, j1 = j0;
    for (const auto& p : pixels) {
      i0 = std::min(i0, p.i);
      i1 = std::max(i1, p.i);
      j0 = std::min(j0, p.j);
      j1 = std::max(j1, p.j);
    }
    return {j0, i0, j1 - j0 + 1, i1 - i0 + 1};
  }
};

/// 8-connected components of att >= threshold with at least min_area
/// pixels, largest first (ties: earliest first pixel), numbered 1, 2, ...
inline std::vector<Glimpse> segment_glimpses(const Tensor& att, double threshold = 0.5, std::size_t min_area = 9) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw DataError("segment_glimpses: threshold must be in (0, 1)");
  if (att.rank() != 2) throw ShapeError("segment_glimpses: expected a 2-D map");
  att.check_finite("attention map");
  const std::size_t h = att.dim(0), w = att.dim(1);
  std::vector<int> label(h * w, -1);
  std::vector<Glimpse> comps;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < h * w; ++start) {
    if (label[start] != -1 || att[start] < threshold) continue;
    Glimpse g;
    const int id = static_cast<int>(comps.size());
    label[start] = id;
    stack.assign(1, start);
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      g.pixels.push_back({cur / w, cur % w});
      const long ci = static_cast<long>(cur / w), cj = static_cast<long>(cur % w);
      for (long di = -1; di <= 1; ++di)
        for (long dj = -1; dj <= 1; ++dj) {
          const long ni = ci + di, nj = cj + dj;
          if (ni < 0 || nj < 0 || ni >= static_cast<long>(h) || nj >= static_cast<long>(w)) continue;
          const std::size_t nb = static_cast<std::size_t>(ni) * w + static_cast<std::size_t>(nj);
          if (label[nb] != -1 || att[nb] < threshold) continue;
          label[nb] = id;
          stack.push_back(nb);
        }
    }
    std::sort(g.pixels.begin(), g.pixels.end(),
              [](const Pixel& a, const Pixel& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
    comps.push_back(std::move(g));
  }
  std::vector<Glimpse> out;
  for (auto& g : comps)
    if (g.pixels.size() >= min_area) out.push_back(std::move(g));
  std::stable_sort(out.begin(), out.end(),
                   [](const Glimpse& a, const Glimpse& b) { return a.pixels.size() > b.pixels.size(); });
  for (std::size_t m = 0; m < out.size(); ++m) out[m].plan = m + 1;
  return out;
}

inline std::vector<PlanRegion> glimpse_regions(const std::vector<Glimpse>& glimpses) {
  std::vector<PlanRegion> out;
  for (const auto& g : glimpses) out.push_back({g.pixels, g.plan});
  return out;
}

}  // namespace pdn
