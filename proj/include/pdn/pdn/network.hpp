#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pdn/amp/library.hpp"
#include "pdn/numerics/lstm.hpp"
#include "pdn/numerics/ops.hpp"
#include "pdn/numerics/parallel.hpp"
#include "pdn/pdn/masked_image.hpp"

namespace pdn {

struct PdnConfig {
  std::size_t grid = 64;     // N
  std::size_t amp_dim = 32;  // AMP feature length
  std::size_t hidden = 16;
  std::size_t kmax = 8;
  std::size_t code = 8;
  std::size_t filter = 5;  // F1 = F2, odd
};

struct PdnParams {
  PdnConfig config;
  LstmParams lstm;  // AMP vector -> h1
  Dense gate;       // location map (N^2) -> hidden
  Dense encoder;    // kmax -> code, tanh
  Dense decoder;    // code -> F*F, linear
  Tensor w4;        // (N, N)
  Tensor b4;        // (N, N)

  static PdnParams create(const PdnConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    PdnParams p = shaped(cfg);
    SeededRng rng(seed);
    p.lstm.init(rng);
    p.gate.init(rng);
    p.encoder.init(rng);
    p.decoder.init(rng);
    const std::size_t fan = cfg.filter * cfg.filter;
    init_uniform_fan_in(p.w4, fan, rng);
    init_uniform_fan_in(p.b4, fan, rng);
    return p;
  }

  PdnParams zeros_like() const { return shaped(config); }

  /// Every parameter tensor in a fixed order, with a stable name.
  std::vector<std::pair<std::string, Tensor*>> tensors() {
    return {{"lstm_wx", &lstm.wx},         {"lstm_wh", &lstm.wh},       {"lstm_b", &lstm.b},
            {"gate_w", &gate.weight},      {"gate_b", &gate.bias},      {"enc_w", &encoder.weight},
            {"enc_b", &encoder.bias},      {"dec_w", &decoder.weight},  {"dec_b", &decoder.bias},
            {"w4", &w4},                   {"b4", &b4}};
  }

  void check_consistent() const {
    validate(config);
    lstm.check_consistent();
    const std::size_t n2 = config.grid * config.grid;
    require_shape(gate.weight, {config.hidden, n2}, "gate weight");
    require_shape(encoder.weight, {config.code, config.kmax}, "encoder weight");
    require_shape(decoder.weight, {config.filter * config.filter, config.code}, "decoder weight");
    require_shape(w4, {config.grid, config.grid}, "w4");
    require_shape(b4, {config.grid, config.grid}, "b4");
  }

  static void validate(const PdnConfig& cfg) {
    if (cfg.grid == 0 || cfg.amp_dim == 0 || cfg.hidden == 0 || cfg.code == 0) {
      throw ShapeError("pdn config sizes must be positive");
    }
    if (cfg.kmax == 0 || cfg.kmax > cfg.hidden) throw ShapeError("pdn kmax must be in [1, hidden]");
    if (cfg.filter % 2 == 0 || cfg.filter > cfg.grid) throw ShapeError("pdn filter size must be odd and <= N");
  }

 private:
  static PdnParams shaped(const PdnConfig& cfg) {
    PdnParams p;
    p.config = cfg;
    p.lstm = LstmParams(cfg.amp_dim, cfg.hidden);
    p.gate = Dense(cfg.grid * cfg.grid, cfg.hidden);
    p.encoder = Dense(cfg.kmax, cfg.code);
    p.decoder = Dense(cfg.code, cfg.filter * cfg.filter);
    p.w4 = Tensor({cfg.grid, cfg.grid});
    p.b4 = Tensor({cfg.grid, cfg.grid});
    return p;
  }
};

struct Acf {
  Tensor filter;  // (F, F)
  std::size_t plan = 1;
  std::size_t step = 0;
};

/// Intermediate values of one generate_acfs call, kept for backprop.
struct AcfTrace {
  std::vector<double> location;
  std::vector<double> gate;  // sigmoid output, shared by every step
  std::vector<LstmCache> lstm;
  std::vector<std::vector<double>> gated;
  std::vector<KmaxResult> pooled;
  std::vector<std::vector<double>> code;  // tanh outputs
};

/// One filter per plan step: LSTM over the AMP vectors, gated by the
/// location map, K-max pooled, encoded (tanh) and decoded to F x F.
inline std::vector<Acf> generate_acfs(const PdnParams& p, std::span<const std::vector<double>> amp_vectors,
                                      const MaskedImage& v, std::size_t plan = 1,
                                      AcfTrace* trace = nullptr) {
  if (amp_vectors.empty()) throw ShapeError("generate_acfs: empty plan");
  if (v.size() != p.config.grid) throw ShapeError("generate_acfs: image size differs from the PDN grid");
  AcfTrace local;
  AcfTrace& tr = trace ? *trace : local;
  tr = AcfTrace{};
  tr.location = v.location_vector();
  tr.gate = p.gate.forward(tr.location);
  if (tr.gate.size() != p.lstm.hidden_size) {
    throw ShapeError("generate_acfs: gate output " + std::to_string(tr.gate.size()) + " vs LSTM hidden " +
                     std::to_string(p.lstm.hidden_size));
  }
  for (double& g : tr.gate) g = sigmoid(g);
  tr.lstm = lstm_sequence(amp_vectors, p.lstm);

  const std::size_t F = p.config.filter;
  std::vector<Acf> out;
  for (std::size_t k = 0; k < amp_vectors.size(); ++k) {
    std::vector<double> gated(tr.gate.size());
    for (std::size_t u = 0; u < gated.size(); ++u) gated[u] = tr.lstm[k].h[u] * tr.gate[u];
    KmaxResult pooled = kmax_pool(gated, p.config.kmax);
    std::vector<double> code = p.encoder.forward(pooled.values);
    for (double& c : code) c = std::tanh(c);
    std::vector<double> flat = p.decoder.forward(code);
    Acf acf{Tensor({F, F}, std::move(flat)), plan, k};
    acf.filter.check_finite("action-conditional filter");
    out.push_back(std::move(acf));
    tr.gated.push_back(std::move(gated));
    tr.pooled.push_back(std::move(pooled));
    tr.code.push_back(std::move(code));
  }
  return out;
}

/// Gradients of all ACF-generation parameters given dL/dACF_k for each step.
inline void generate_acfs_backward(const PdnParams& p, const AcfTrace& tr, std::span<const Tensor> dacf,
                                   PdnParams& grad) {
  const std::size_t K = tr.lstm.size(), H = p.lstm.hidden_size;
  std::vector<std::vector<double>> dh(K, std::vector<double>(H, 0.0));
  std::vector<double> dgate(H, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> dcode = p.decoder.backward(tr.code[k], dacf[k].values(), grad.decoder);
    for (std::size_t c = 0; c < dcode.size(); ++c) dcode[c] *= 1.0 - tr.code[k][c] * tr.code[k][c];
    std::vector<double> dpooled = p.encoder.backward(tr.pooled[k].values, dcode, grad.encoder);
    for (std::size_t n = 0; n < dpooled.size(); ++n) {
      const std::size_t u = tr.pooled[k].indices[n];
      dh[k][u] += dpooled[n] * tr.gate[u];
      dgate[u] += dpooled[n] * tr.lstm[k].h[u];
    }
  }
  lstm_sequence_backward(tr.lstm, dh, p.lstm, grad.lstm);
  for (std::size_t u = 0; u < H; ++u) dgate[u] *= sigmoid_grad_from_output(tr.gate[u]);
  p.gate.backward(tr.location, dgate, grad.gate);
}

/// Offset map of one ACF over one plan's region: at (i, j), the sum over the
/// centred F x F window of ACF(a,b) * sum_c V_c(q) * W4(q) for window pixels q
/// whose mask code is m, plus B4(i, j). Zero padding outside the image.
inline Tensor acf_convolve(const MaskedImage& v, const Tensor& acf, std::size_t m, const PdnParams& p) {
  const std::size_t n = v.size();
  if (m == 0) throw DataError("acf_convolve: plan index must be >= 1");
  if (n != p.config.grid) throw ShapeError("acf_convolve: image size differs from the PDN grid");
  if (acf.rank() != 2 || acf.dim(0) % 2 == 0 || acf.dim(1) % 2 == 0) {
    throw ShapeError("acf_convolve: filter must be 2-D with odd sides");
  }
  const std::size_t f1 = acf.dim(0), f2 = acf.dim(1);
  const long o1 = static_cast<long>(f1 / 2), o2 = static_cast<long>(f2 / 2);
  const double code = static_cast<double>(m);
  Tensor h({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t a = 0; a < f1; ++a) {
        const long qi = static_cast<long>(i + a) - o1;
        if (qi < 0 || qi >= static_cast<long>(n)) continue;
        for (std::size_t b = 0; b < f2; ++b) {
          const long qj = static_cast<long>(j + b) - o2;
          if (qj < 0 || qj >= static_cast<long>(n)) continue;
          const auto ui = static_cast<std::size_t>(qi), uj = static_cast<std::size_t>(qj);
          if (v.mask(ui, uj) != code) continue;
          for (std::size_t c = 0; c < 3; ++c) s += acf(a, b) * (v.rgb(c, ui, uj) * p.w4(ui, uj));
        }
      }
      h(i, j) = s + p.b4(i, j);
    }
  return h;
}

/// Accumulates dL/dW4 and dL/dB4 into `grad`; returns dL/dACF.
inline Tensor acf_convolve_backward(const MaskedImage& v, const Tensor& acf, std::size_t m, const PdnParams& p,
                                    const Tensor& dh, PdnParams& grad) {
  const std::size_t n = v.size(), f1 = acf.dim(0), f2 = acf.dim(1);
  const long o1 = static_cast<long>(f1 / 2), o2 = static_cast<long>(f2 / 2);
  const double code = static_cast<double>(m);
  Tensor dacf({f1, f2});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double g = dh(i, j);
      grad.b4(i, j) += g;
      if (g == 0.0) continue;
      for (std::size_t a = 0; a < f1; ++a) {
        const long qi = static_cast<long>(i + a) - o1;
        if (qi < 0 || qi >= static_cast<long>(n)) continue;
        for (std::size_t b = 0; b < f2; ++b) {
          const long qj = static_cast<long>(j + b) - o2;
          if (qj < 0 || qj >= static_cast<long>(n)) continue;
          const auto ui = static_cast<std::size_t>(qi), uj = static_cast<std::size_t>(qj);
          if (v.mask(ui, uj) != code) continue;
          const double sum_rgb = v.rgb(0, ui, uj) + v.rgb(1, ui, uj) + v.rgb(2, ui, uj);
          dacf(a, b) += g * sum_rgb * p.w4(ui, uj);
          grad.w4(ui, uj) += g * acf(a, b) * sum_rgb;
        }
      }
    }
  return dacf;
}

/// Nearest integer; exact halves go toward zero.
inline double round_offset(double x) {
  const double t = std::trunc(x);
  if (std::abs(x - t) == 0.5) return t;
  return std::round(x);
}

/// Each cell (i, j) sends one count to flat index ID(i, j) - round(h4(i, j)),
/// clamped into the image.
inline Tensor translation_pool(const Tensor& h4) {
  if (h4.rank() != 2 || h4.dim(0) != h4.dim(1)) throw ShapeError("translation_pool: offset map must be N x N");
  const std::size_t n = h4.dim(0);
  const double last = static_cast<double>(n * n - 1);
  Tensor spm({n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double off = h4(i, j);
      if (!std::isfinite(off)) throw DataError("translation_pool: non-finite offset");
      const double target = std::clamp(static_cast<double>(i * n + j) - round_offset(off), 0.0, last);
      spm[static_cast<std::size_t>(target)] += 1.0;
    }
  return spm;
}

/// Sum of all SPMs divided by Z.
inline Tensor generate_prda(std::span<const Tensor> spms, double z = 1.0) {
  if (spms.empty()) throw DataError("generate_prda: no state prediction maps");
  if (!(z > 0.0) || !std::isfinite(z)) throw DataError("generate_prda: Z must be positive");
  Tensor out(spms[0].shape());
  for (const auto& s : spms) {
    if (s.shape() != out.shape()) throw ShapeError("generate_prda: SPM shapes differ");
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += s[k];
  }
  for (double& x : out.values()) x /= z;
  return out;
}

/// Checks plan indices are exactly 1..M with a shared length and that no
/// mask code exceeds M.
inline void validate_plans(const MaskedImage& v, const std::vector<RecognizedPlan>& plans) {
  if (plans.empty()) throw DataError("pdn_forward: no recognized plans");
  std::set<std::size_t> seen;
  for (const auto& pl : plans) {
    if (pl.plan == 0 || pl.plan > plans.size() || !seen.insert(pl.plan).second) {
      throw DataError("pdn_forward: plan indices must be exactly 1..M");
    }
    if (pl.steps.empty() || pl.steps.size() != plans[0].steps.size()) {
      throw DataError("pdn_forward: plans must share one nonzero length K");
    }
  }
  if (v.max_mask_code() > plans.size()) {
    throw DataError("pdn_forward: mask code " + std::to_string(v.max_mask_code()) + " has no plan");
  }
}

/// ACFs -> offset maps -> SPMs for every (plan, step), then the PRDA map.
inline Tensor pdn_forward(const MaskedImage& v, const std::vector<RecognizedPlan>& plans, const AmpLibrary& lib,
                          const PdnParams& p, double z = 1.0, std::size_t threads = 1,
                          std::vector<Tensor>* spms_out = nullptr) {
  validate_plans(v, plans);
  if (lib.feature_length() != p.config.amp_dim) {
    throw ShapeError("pdn_forward: AMP length " + std::to_string(lib.feature_length()) + " vs PDN input " +
                     std::to_string(p.config.amp_dim));
  }
  std::vector<Acf> acfs;
  for (const auto& pl : plans) {
    std::vector<std::vector<double>> vectors;
    for (std::size_t s : pl.steps) vectors.push_back(decode_amp(s, lib).values);
    auto got = generate_acfs(p, vectors, v, pl.plan);
    acfs.insert(acfs.end(), got.begin(), got.end());
  }
  std::vector<Tensor> spms(acfs.size());
  parallel_for(acfs.size(), threads, [&](std::size_t n) {
    spms[n] = translation_pool(acf_convolve(v, acfs[n].filter, acfs[n].plan, p));
  });
  Tensor prda = generate_prda(spms, z);
  if (spms_out) *spms_out = std::move(spms);
  return prda;
}

}  // namespace pdn
