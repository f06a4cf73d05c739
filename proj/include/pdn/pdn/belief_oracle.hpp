#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "pdn/pdn/network.hpp"

namespace pdn {

/// Exhaustive belief update over object-point states for small images.
/// Each state is a location; its successor is fixed by the offset the
/// action (ACF) predicts from the observed patch, so T is a 0/1 matrix. With
/// uniform unit belief, b'(s') = sum_s T(s, a, s') b(s) is an integer mass.
inline Tensor belief_update_oracle(const MaskedImage& v, const Tensor& acf, std::size_t m, const PdnParams& p) {
  const std::size_t n = v.size();
  if (n > 6) throw ShapeError("belief_update_oracle enumerates states; N must be <= 6");
  if (n != p.config.grid) throw ShapeError("belief_update_oracle: image size differs from the PDN grid");
  const std::size_t states = n * n;
  const long r1 = static_cast<long>(acf.dim(0) / 2), r2 = static_cast<long>(acf.dim(1) / 2);

  std::vector<std::vector<int>> T(states, std::vector<int>(states, 0));
  for (std::size_t s = 0; s < states; ++s) {
    const auto id = static_cast<long>(v.v[MaskedImage::kLocation * states + s]);
    const long si = id / static_cast<long>(n), sj = id % static_cast<long>(n);
    // Observation: every pixel of the patch around s carrying plan m.
    double offset = 0.0;
    for (long qi = 0; qi < static_cast<long>(n); ++qi)
      for (long qj = 0; qj < static_cast<long>(n); ++qj) {
        if (std::labs(qi - si) > r1 || std::labs(qj - sj) > r2) continue;
        const auto ui = static_cast<std::size_t>(qi), uj = static_cast<std::size_t>(qj);
        if (v.mask(ui, uj) != static_cast<double>(m)) continue;
        const auto a = static_cast<std::size_t>(qi - si + r1), b = static_cast<std::size_t>(qj - sj + r2);
        for (std::size_t c = 0; c < 3; ++c) offset += acf(a, b) * (v.rgb(c, ui, uj) * p.w4(ui, uj));
      }
    offset += p.b4(static_cast<std::size_t>(si), static_cast<std::size_t>(sj));
    const double step = offset > 0 ? std::ceil(offset - 0.5) : std::floor(offset + 0.5);
    double next = static_cast<double>(id) - step;
    if (next < 0) next = 0;
    if (next > static_cast<double>(states - 1)) next = static_cast<double>(states - 1);
    T[s][static_cast<std::size_t>(next)] = 1;
  }
  Tensor belief({n, n});
  for (std::size_t target = 0; target < states; ++target) {
    int mass = 0;
    for (std::size_t s = 0; s < states; ++s) mass += T[s][target] * 1;
    belief[target] = mass;
  }
  return belief;
}

}  // namespace pdn
