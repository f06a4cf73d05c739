#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "pdn/numerics/optim.hpp"
#include "pdn/pipeline/system.hpp"

namespace pdn {

/// One supervised pixel: under plan m, h4 at `pixel` should equal `offset`.
struct PixelTarget {
  std::size_t plan = 1;
  Pixel pixel;
  double offset = 0.0;
};

/// Every pixel of an object's footprint at the anchor frame should move onto
/// the object's centre, i.e. offset ID(p) - ID(centre). Objects whose
/// footprint is not inside a single glimpse are skipped.
inline std::vector<PixelTarget> collapse_targets(const EventSample& s, const MaskedImage& v, std::size_t half) {
  const std::size_t n = v.size();
  std::vector<PixelTarget> out;
  for (const auto& traj : s.trajectories) {
    if (traj.empty()) continue;
    const Pixel c = traj.front();
    if (c.i < half || c.j < half || c.i + half >= n || c.j + half >= n) continue;
    const double m = v.mask(c.i, c.j);
    bool whole = m > 0.0;
    for (std::size_t i = c.i - half; whole && i <= c.i + half; ++i)
      for (std::size_t j = c.j - half; j <= c.j + half; ++j) whole = whole && v.mask(i, j) == m;
    if (!whole) continue;
    for (std::size_t i = c.i - half; i <= c.i + half; ++i)
      for (std::size_t j = c.j - half; j <= c.j + half; ++j) {
        const double off = static_cast<double>(i * n + j) - static_cast<double>(c.i * n + c.j);
        out.push_back({static_cast<std::size_t>(m), {i, j}, off});
      }
  }
  return out;
}

/// The F x F operand that multiplies the ACF at one output pixel:
/// X(a, b) = sum_c V_c(q) W4(q) over window pixels q with mask code m.
inline Tensor acf_operand(const MaskedImage& v, const Pixel& p, std::size_t m, const PdnParams& params) {
  const std::size_t n = v.size(), F = params.config.filter;
  const long o = static_cast<long>(F / 2);
  Tensor x({F, F});
  for (std::size_t a = 0; a < F; ++a) {
    const long qi = static_cast<long>(p.i + a) - o;
    if (qi < 0 || qi >= static_cast<long>(n)) continue;
    for (std::size_t b = 0; b < F; ++b) {
      const long qj = static_cast<long>(p.j + b) - o;
      if (qj < 0 || qj >= static_cast<long>(n)) continue;
      const auto ui = static_cast<std::size_t>(qi), uj = static_cast<std::size_t>(qj);
      if (v.mask(ui, uj) != static_cast<double>(m)) continue;
      x(a, b) = (v.rgb(0, ui, uj) + v.rgb(1, ui, uj) + v.rgb(2, ui, uj)) * params.w4(ui, uj);
    }
  }
  return x;
}

struct DynamicsExample {
  MaskedImage masked;
  std::vector<std::vector<std::vector<double>>> amp_vectors;  // per plan, decoded steps
  std::vector<std::vector<PixelTarget>> targets;              // per plan
  std::vector<std::vector<Tensor>> operands;                  // per plan, per target
};

struct DynamicsReport {
  std::vector<double> epoch_loss;  // mean squared offset error per target pixel
  double exact_fraction = 0.0;     // targets whose rounded offset lands on the centre
  std::size_t targets = 0;
};

/// Fits the ACF generator so object pixels collapse onto their centres.
/// W4 is reset to ones and B4 to zeros and both stay fixed: per-position
/// parameters see too few object pixels to generalise.
inline DynamicsReport pretrain_dynamics(PdnParams& p, const std::vector<DynamicsExample>& data, std::size_t epochs,
                                        double lr, std::uint64_t seed) {
  p.w4.fill(1.0);
  p.b4.fill(0.0);
  DynamicsReport report;
  const std::size_t n = p.config.grid;
  const double scale = static_cast<double>(n);
  PdnParams grad = p.zeros_like();
  NamedTensors params, grads;
  for (auto& t : p.tensors())
    if (t.first != "w4" && t.first != "b4") params.push_back(t);
  for (auto& t : grad.tensors())
    if (t.first != "w4" && t.first != "b4") grads.push_back(t);
  Adam adam(params);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  SeededRng rng = SeededRng(seed).fork(31);
  const double total_steps = static_cast<double>(epochs * data.size());
  double step = 0.0;

  auto evaluate = [&](const DynamicsExample& ex, bool backward, double& sq, std::size_t& count, std::size_t& exact) {
    for (std::size_t m = 0; m < ex.targets.size(); ++m) {
      if (ex.targets[m].empty()) continue;
      AcfTrace tr;
      const auto acfs = generate_acfs(p, ex.amp_vectors[m], ex.masked, m + 1, &tr);
      std::vector<Tensor> dacf;
      const double w = 1.0 / static_cast<double>(ex.targets[m].size() * acfs.size());
      for (const auto& acf : acfs) {
        Tensor d(acf.filter.shape());
        for (std::size_t t = 0; t < ex.targets[m].size(); ++t) {
          const Tensor& x = ex.operands[m][t];
          double h = 0.0;
          for (std::size_t k = 0; k < x.size(); ++k) h += acf.filter[k] * x[k];
          const double r = h - ex.targets[m][t].offset;
          sq += r * r;
          ++count;
          exact += round_offset(h) == ex.targets[m][t].offset ? 1 : 0;
          for (std::size_t k = 0; k < x.size(); ++k) d[k] += 2.0 * w * r / (scale * scale) * x[k];
        }
        dacf.push_back(std::move(d));
      }
      if (backward) generate_acfs_backward(p, tr, dacf, grad);
    }
  };

  for (std::size_t e = 0; e < epochs; ++e) {
    rng.shuffle(std::span(order));
    double sq = 0.0;
    std::size_t count = 0, exact = 0;
    for (std::size_t idx : order) {
      for (auto& [name, g] : grads) g->fill(0.0);
      evaluate(data[idx], true, sq, count, exact);
      const double rate = lr * std::max(0.02, 1.0 - step / total_steps);
      adam.step(params, grads, rate);
      step += 1.0;
    }
    report.epoch_loss.push_back(count ? sq / static_cast<double>(count) : 0.0);
  }
  double sq = 0.0;
  std::size_t count = 0, exact = 0;
  for (const auto& ex : data) evaluate(ex, false, sq, count, exact);
  report.targets = count;
  report.exact_fraction = count ? static_cast<double>(exact) / static_cast<double>(count) : 0.0;
  return report;
}

inline DynamicsExample make_dynamics_example(const EventSample& s, const SceneAnalysis& a, const AmpLibrary& lib,
                                             const PdnParams& p, std::size_t agent_half) {
  DynamicsExample ex;
  ex.masked = a.masked;
  const std::size_t M = a.plans.size();
  ex.amp_vectors.resize(M);
  ex.targets.resize(M);
  ex.operands.resize(M);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t step : a.plans[m].steps) ex.amp_vectors[m].push_back(decode_amp(step, lib).values);
  PdnParams unit = p;
  unit.w4.fill(1.0);
  for (const auto& t : collapse_targets(s, a.masked, agent_half)) {
    ex.targets[t.plan - 1].push_back(t);
    ex.operands[t.plan - 1].push_back(acf_operand(a.masked, t.pixel, t.plan, unit));
  }
  return ex;
}

}  // namespace pdn
