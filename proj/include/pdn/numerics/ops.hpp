#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pdn/numerics/rng.hpp"
#include "pdn/numerics/tensor.hpp"

namespace pdn {

inline double sigmoid(double x) {
  // Split on sign so exp never overflows.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Tensor sigmoid(const Tensor& x) {
  x.check_finite("sigmoid");
  Tensor y = x;
  for (double& v : y.values()) v = sigmoid(v);
  return y;
}

/// Gradient of sigmoid given its output y.
inline double sigmoid_grad_from_output(double y) { return y * (1.0 - y); }

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// Uniform(-s, s) with s = 1/sqrt(fan_in).
inline void init_uniform_fan_in(Tensor& t, std::size_t fan_in, SeededRng& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  for (double& v : t.values()) v = rng.uniform(-s, s);
}

/// Fully connected layer y = W x + b, W of shape (out, in).
struct Dense {
  Tensor weight;
  Tensor bias;

  Dense() = default;
  Dense(std::size_t in, std::size_t out) : weight({out, in}), bias({out}) {}

  std::size_t inputs() const { return weight.dim(1); }
  std::size_t outputs() const { return weight.dim(0); }

  void init(SeededRng& rng) {
    init_uniform_fan_in(weight, inputs(), rng);
    init_uniform_fan_in(bias, inputs(), rng);
  }

  std::vector<double> forward(std::span<const double> x) const {
    if (x.size() != inputs()) {
      throw ShapeError("dense: input length " + std::to_string(x.size()) + ", expected " +
                       std::to_string(inputs()));
    }
    std::vector<double> y(outputs());
    for (std::size_t r = 0; r < y.size(); ++r) y[r] = dot(weight.row(r), x) + bias[r];
    return y;
  }

  /// Accumulates parameter gradients into `grad` and returns dL/dx.
  std::vector<double> backward(std::span<const double> x, std::span<const double> dy,
                               Dense& grad) const {
    std::vector<double> dx(inputs(), 0.0);
    for (std::size_t r = 0; r < outputs(); ++r) {
      const double g = dy[r];
      grad.bias[r] += g;
      if (g == 0.0) continue;
      auto wrow = weight.row(r);
      auto grow = grad.weight.row(r);
      for (std::size_t c = 0; c < dx.size(); ++c) {
        grow[c] += g * x[c];
        dx[c] += g * wrow[c];
      }
    }
    return dx;
  }

  Dense zeros_like() const {
    Dense d;
    d.weight = Tensor(weight.shape());
    d.bias = Tensor(bias.shape());
    return d;
  }
};

enum class Padding { Valid, Same };

/// 2-D cross-correlation (no filter flip): out(i,j) = sum f(a,b) in(i+a-oa, j+b-ob).
/// Same padding centres the filter (oa = F1/2, ob = F2/2) over a zero border.
inline Tensor conv2d(const Tensor& input, const Tensor& filter, Padding padding) {
  if (input.rank() != 2 || filter.rank() != 2) throw ShapeError("conv2d: expects 2-D tensors");
  const std::size_t h = input.dim(0), w = input.dim(1);
  const std::size_t f1 = filter.dim(0), f2 = filter.dim(1);
  if (f1 > h || f2 > w || f1 == 0 || f2 == 0) {
    throw ShapeError("conv2d: filter " + shape_string(filter.shape()) +
                     " larger than input " + shape_string(input.shape()));
  }
  if (padding == Padding::Valid) {
    Tensor out({h - f1 + 1, w - f2 + 1});
    for (std::size_t i = 0; i < out.dim(0); ++i)
      for (std::size_t j = 0; j < out.dim(1); ++j) {
        double s = 0.0;
        for (std::size_t a = 0; a < f1; ++a)
          for (std::size_t b = 0; b < f2; ++b) s += filter(a, b) * input(i + a, j + b);
        out(i, j) = s;
      }
    return out;
  }
  const auto oa = static_cast<std::ptrdiff_t>(f1 / 2);
  const auto ob = static_cast<std::ptrdiff_t>(f2 / 2);
  const auto hh = static_cast<std::ptrdiff_t>(h), ww = static_cast<std::ptrdiff_t>(w);
  Tensor out({h, w});
  for (std::ptrdiff_t i = 0; i < hh; ++i)
    for (std::ptrdiff_t j = 0; j < ww; ++j) {
      double s = 0.0;
      for (std::ptrdiff_t a = 0; a < static_cast<std::ptrdiff_t>(f1); ++a) {
        const std::ptrdiff_t y = i + a - oa;
        if (y < 0 || y >= hh) continue;
        for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(f2); ++b) {
          const std::ptrdiff_t x = j + b - ob;
          if (x < 0 || x >= ww) continue;
          s += filter(a, b) * input(y, x);
        }
      }
      out(i, j) = s;
    }
  return out;
}

struct KmaxResult {
  std::vector<double> values;
  std::vector<std::size_t> indices;  // ascending positions in the source vector
};

/// The k largest entries of v in their original order. Ties go to the lower index.
inline KmaxResult kmax_pool(std::span<const double> v, std::size_t k) {
  if (k == 0 || k > v.size()) {
    throw ShapeError("kmax_pool: k=" + std::to_string(k) + " with input length " +
                     std::to_string(v.size()));
  }
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  order.resize(k);
  std::sort(order.begin(), order.end());
  KmaxResult r;
  r.indices = order;
  r.values.reserve(k);
  for (std::size_t i : order) r.values.push_back(v[i]);
  return r;
}

/// Central-difference gradient of a scalar function.
inline Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                               double eps) {
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double up = f(probe);
    probe[i] = orig - eps;
    const double down = f(probe);
    probe[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw DataError("finite_diff_grad: function returned a non-finite value");
    }
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

/// max over entries of |a-b| / max(|a|, |b|, floor). The floor keeps
/// vanishing gradients from turning round-off into huge ratios.
inline double relative_error(const Tensor& a, const Tensor& b, double floor = 1e-7) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    s += p[i];
  }
  for (double& v : p) v /= s;
  return p;
}

}  // namespace pdn
