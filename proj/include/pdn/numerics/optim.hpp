#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "pdn/numerics/tensor.hpp"

namespace pdn {

using NamedTensors = std::vector<std::pair<std::string, Tensor*>>;

inline double global_norm(const NamedTensors& grads) {
  double s = 0.0;
  for (const auto& [name, g] : grads)
    for (double v : g->values()) s += v * v;
  return std::sqrt(s);
}

/// Rescales the gradients so their joint L2 norm is at most max_norm.
inline void clip_global_norm(const NamedTensors& grads, double max_norm) {
  const double n = global_norm(grads);
  if (!(n > max_norm) || max_norm <= 0.0) return;
  const double f = max_norm / n;
  for (const auto& [name, g] : grads)
    for (double& v : g->values()) v *= f;
}

inline void sgd_step(const NamedTensors& params, const NamedTensors& grads, double lr) {
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto p = params[t].second->values();
    auto g = grads[t].second->values();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
  }
}

class Adam {
 public:
  explicit Adam(const NamedTensors& params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : b1_(beta1), b2_(beta2), eps_(eps) {
    for (const auto& [name, p] : params) {
      m_.emplace_back(p->shape());
      v_.emplace_back(p->shape());
    }
  }

  void step(const NamedTensors& params, const NamedTensors& grads, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto p = params[k].second->values();
      auto g = grads[k].second->values();
      for (std::size_t i = 0; i < p.size(); ++i) {
        m_[k][i] = b1_ * m_[k][i] + (1.0 - b1_) * g[i];
        v_[k][i] = b2_ * v_[k][i] + (1.0 - b2_) * g[i] * g[i];
        p[i] -= lr * (m_[k][i] / c1) / (std::sqrt(v_[k][i] / c2) + eps_);
      }
    }
  }

 private:
  double b1_, b2_, eps_;
  std::size_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace pdn
