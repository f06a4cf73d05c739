#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pdn/numerics/ops.hpp"
#include "pdn/numerics/rng.hpp"
#include "pdn/numerics/tensor.hpp"

namespace pdn {

/// Weights of a standard LSTM cell. Gate rows are stacked in the order
/// input, forget, output, candidate: rows [0,H), [H,2H), [2H,3H), [3H,4H).
struct LstmParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  Tensor wx;  // (4H, D_in)
  Tensor wh;  // (4H, H)
  Tensor b;   // (4H)

  LstmParams() = default;
  LstmParams(std::size_t input, std::size_t hidden)
      : input_size(input),
        hidden_size(hidden),
        wx({4 * hidden, input}),
        wh({4 * hidden, hidden}),
        b({4 * hidden}) {}

  void init(SeededRng& rng) {
    const std::size_t fan_in = input_size + hidden_size;
    init_uniform_fan_in(wx, fan_in, rng);
    init_uniform_fan_in(wh, fan_in, rng);
    init_uniform_fan_in(b, fan_in, rng);
  }

  LstmParams zeros_like() const { return LstmParams(input_size, hidden_size); }

  void check_consistent() const {
    require_shape(wx, {4 * hidden_size, input_size}, "lstm wx");
    require_shape(wh, {4 * hidden_size, hidden_size}, "lstm wh");
    require_shape(b, {4 * hidden_size}, "lstm bias");
  }
};

/// Everything the backward pass needs from one forward step.
struct LstmCache {
  std::vector<double> x, h_prev, c_prev;
  std::vector<double> i, f, o, g;  // gate activations
  std::vector<double> c, tanh_c, h;
};

struct LstmState {
  std::vector<double> h;
  std::vector<double> c;
};

inline LstmState zero_state(const LstmParams& p) {
  return {std::vector<double>(p.hidden_size, 0.0), std::vector<double>(p.hidden_size, 0.0)};
}

inline LstmCache lstm_step(std::span<const double> x, std::span<const double> h,
                           std::span<const double> c, const LstmParams& p) {
  const std::size_t H = p.hidden_size;
  if (x.size() != p.input_size || h.size() != H || c.size() != H) {
    throw ShapeError("lstm_step: got x=" + std::to_string(x.size()) +
                     " h=" + std::to_string(h.size()) + " c=" + std::to_string(c.size()) +
                     " for D_in=" + std::to_string(p.input_size) +
                     " H=" + std::to_string(H));
  }
  LstmCache k;
  k.x.assign(x.begin(), x.end());
  k.h_prev.assign(h.begin(), h.end());
  k.c_prev.assign(c.begin(), c.end());
  k.i.resize(H);
  k.f.resize(H);
  k.o.resize(H);
  k.g.resize(H);
  k.c.resize(H);
  k.tanh_c.resize(H);
  k.h.resize(H);
  for (std::size_t r = 0; r < 4 * H; ++r) {
    const double z = dot(p.wx.row(r), x) + dot(p.wh.row(r), h) + p.b[r];
    const std::size_t u = r % H;
    switch (r / H) {
      case 0: k.i[u] = sigmoid(z); break;
      case 1: k.f[u] = sigmoid(z); break;
      case 2: k.o[u] = sigmoid(z); break;
      default: k.g[u] = std::tanh(z); break;
    }
  }
  for (std::size_t u = 0; u < H; ++u) {
    k.c[u] = k.f[u] * c[u] + k.i[u] * k.g[u];
    k.tanh_c[u] = std::tanh(k.c[u]);
    k.h[u] = k.o[u] * k.tanh_c[u];
  }
  return k;
}

struct LstmBackward {
  std::vector<double> dx, dh_prev, dc_prev;
};

/// Backward through one step. dh and dc are the total gradients arriving at
/// this step's outputs; parameter gradients accumulate into `grad`.
inline LstmBackward lstm_step_backward(const LstmCache& k, std::span<const double> dh,
                                       std::span<const double> dc, const LstmParams& p,
                                       LstmParams& grad) {
  const std::size_t H = p.hidden_size;
  std::vector<double> dz(4 * H);
  LstmBackward out;
  out.dc_prev.resize(H);
  for (std::size_t u = 0; u < H; ++u) {
    const double do_ = dh[u] * k.tanh_c[u];
    const double dct = dc[u] + dh[u] * k.o[u] * (1.0 - k.tanh_c[u] * k.tanh_c[u]);
    const double di = dct * k.g[u];
    const double df = dct * k.c_prev[u];
    const double dg = dct * k.i[u];
    out.dc_prev[u] = dct * k.f[u];
    dz[u] = di * sigmoid_grad_from_output(k.i[u]);
    dz[H + u] = df * sigmoid_grad_from_output(k.f[u]);
    dz[2 * H + u] = do_ * sigmoid_grad_from_output(k.o[u]);
    dz[3 * H + u] = dg * (1.0 - k.g[u] * k.g[u]);
  }
  out.dx.assign(p.input_size, 0.0);
  out.dh_prev.assign(H, 0.0);
  for (std::size_t r = 0; r < 4 * H; ++r) {
    const double g = dz[r];
    grad.b[r] += g;
    auto wxr = p.wx.row(r);
    auto gwx = grad.wx.row(r);
    for (std::size_t c = 0; c < p.input_size; ++c) {
      gwx[c] += g * k.x[c];
      out.dx[c] += g * wxr[c];
    }
    auto whr = p.wh.row(r);
    auto gwh = grad.wh.row(r);
    for (std::size_t c = 0; c < H; ++c) {
      gwh[c] += g * k.h_prev[c];
      out.dh_prev[c] += g * whr[c];
    }
  }
  return out;
}

/// Runs the cell over a sequence from a zero state; returns one cache per step.
inline std::vector<LstmCache> lstm_sequence(std::span<const std::vector<double>> xs,
                                            const LstmParams& p) {
  std::vector<LstmCache> caches;
  caches.reserve(xs.size());
  LstmState s = zero_state(p);
  for (const auto& x : xs) {
    caches.push_back(lstm_step(x, s.h, s.c, p));
    s.h = caches.back().h;
    s.c = caches.back().c;
  }
  return caches;
}

/// Backpropagation through time. dhs[t] is the loss gradient w.r.t. h_t
/// from outside the recurrence. Returns dL/dx_t per step.
inline std::vector<std::vector<double>> lstm_sequence_backward(
    std::span<const LstmCache> caches, std::span<const std::vector<double>> dhs,
    const LstmParams& p, LstmParams& grad) {
  const std::size_t H = p.hidden_size;
  std::vector<std::vector<double>> dxs(caches.size());
  std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0);
  for (std::size_t t = caches.size(); t-- > 0;) {
    std::vector<double> dh(H);
    for (std::size_t u = 0; u < H; ++u) dh[u] = dhs[t][u] + dh_next[u];
    auto back = lstm_step_backward(caches[t], dh, dc_next, p, grad);
    dxs[t] = std::move(back.dx);
    dh_next = std::move(back.dh_prev);
    dc_next = std::move(back.dc_prev);
  }
  return dxs;
}

}  // namespace pdn
