#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "pdn/amp/library.hpp"
#include "pdn/numerics/ops.hpp"
#include "pdn/numerics/rng.hpp"
#include "pdn/numerics/tensor.hpp"

namespace pdn {

/// Action-affinity embeddings. `input` embeds a trace element as a centre,
/// `output` embeds it as a context (what tends to follow).
struct AffinityModel {
  Tensor input;   // (A, D)
  Tensor output;  // (A, D)
  std::size_t window = 2;
  std::uint64_t seed = 0;

  std::size_t vocab() const { return input.empty() ? 0 : input.dim(0); }
  std::size_t dim() const { return input.empty() ? 0 : input.dim(1); }

  void check_consistent() const {
    if (input.rank() != 2 || input.shape() != output.shape() || vocab() == 0 || dim() == 0) {
      throw ShapeError("affinity model matrices malformed");
    }
    input.check_finite("affinity input embedding");
    output.check_finite("affinity output embedding");
  }
};

struct AffinityParams {
  std::size_t dim = 32;
  std::size_t window = 2;
  std::size_t epochs = 60;
  double lr = 0.05;
  std::size_t negatives = 5;
  std::uint64_t seed = 0;
};

namespace detail {

inline void validate_corpus(const std::vector<PlanTrace>& corpus, std::size_t vocab) {
  if (corpus.empty()) throw DataError("plan corpus is empty");
  for (const auto& trace : corpus)
    for (const auto& d : trace) {
      if (d.entries.empty()) throw DataError("empty distribution in plan corpus");
      for (const auto& e : d.entries) {
        if (e.index >= vocab) {
          throw DataError("plan corpus index " + std::to_string(e.index) + " >= vocabulary " +
                          std::to_string(vocab));
        }
      }
    }
}

/// Unigram^0.75 over expected counts.
inline std::vector<double> noise_distribution(const std::vector<PlanTrace>& corpus, std::size_t vocab) {
  std::vector<double> w(vocab, 0.0);
  for (const auto& trace : corpus)
    for (const auto& d : trace)
      for (const auto& e : d.entries) w[e.index] += e.probability;
  double z = 0.0;
  for (double& x : w) {
    x = std::pow(x, 0.75);
    z += x;
  }
  for (double& x : w) x /= z;
  return w;
}

inline double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

inline double row_dot(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j) {
  return dot(a.row(i), b.row(j));
}

}  // namespace detail

/// Expected loss of one (centre, context) pair with the negative term taken
/// in expectation over the noise distribution. `positive_only` drops it.
inline double pair_expected_loss(const AffinityModel& m, const AmpDistribution& center,
                                 const AmpDistribution& context, const std::vector<double>& noise,
                                 std::size_t negatives, bool positive_only = false) {
  double loss = 0.0;
  for (const auto& ci : center.entries)
    for (const auto& cj : context.entries) {
      double l = -detail::log_sigmoid(detail::row_dot(m.input, ci.index, m.output, cj.index));
      if (!positive_only) {
        for (std::size_t n = 0; n < noise.size(); ++n) {
          if (n == cj.index || noise[n] == 0.0) continue;
          l -= static_cast<double>(negatives) * noise[n] *
               detail::log_sigmoid(-detail::row_dot(m.input, ci.index, m.output, n));
        }
      }
      loss += ci.probability * cj.probability * l;
    }
  return loss;
}

/// Mean expected loss over every forward (centre, context) pair of the corpus.
/// The noise distribution comes from `noise_corpus` (the training corpus).
inline double corpus_expected_loss(const AffinityModel& m, const std::vector<PlanTrace>& corpus,
                                   const std::vector<PlanTrace>& noise_corpus, std::size_t negatives,
                                   bool positive_only = false) {
  const auto noise = detail::noise_distribution(noise_corpus, m.vocab());
  double total = 0.0;
  std::size_t pairs = 0;
  for (const auto& trace : corpus)
    for (std::size_t t = 0; t < trace.size(); ++t)
      for (std::size_t o = 1; o <= m.window && t + o < trace.size(); ++o) {
        total += pair_expected_loss(m, trace[t], trace[t + o], noise, negatives, positive_only);
        ++pairs;
      }
  return pairs == 0 ? 0.0 : total / static_cast<double>(pairs);
}

inline AffinityModel init_affinity(std::size_t vocab, const AffinityParams& p) {
  if (p.dim == 0) throw ShapeError("embedding dimension must be positive");
  if (vocab == 0) throw ShapeError("vocabulary must be nonempty");
  AffinityModel m;
  m.input = Tensor({vocab, p.dim});
  m.output = Tensor({vocab, p.dim});
  m.window = p.window;
  m.seed = p.seed;
  SeededRng rng(p.seed);
  // Output embeddings start at zero, so symbols never seen as context keep
  // cosine 0 against everything.
  const double r = 0.5 / static_cast<double>(p.dim);
  for (double& x : m.input.values()) x = rng.uniform(-r, r);
  return m;
}

/// Skip-gram with negative sampling on distribution traces. Contexts are the
/// `window` elements after each centre. Each pair contributes
/// sum_ij p_i q_j l(i, j); negatives are drawn once per pair and a draw equal
/// to the context index is skipped. `epoch_loss` receives the mean sampled
/// loss per pair for each epoch; `on_epoch` sees the model after each epoch.
inline AffinityModel train_affinity(
    const std::vector<PlanTrace>& corpus, std::size_t vocab, const AffinityParams& p,
    std::vector<double>* epoch_loss = nullptr,
    const std::function<void(std::size_t, const AffinityModel&)>& on_epoch = {}) {
  detail::validate_corpus(corpus, vocab);
  if (p.window == 0) throw ShapeError("context window must be positive");
  AffinityModel m = init_affinity(vocab, p);
  const auto noise = detail::noise_distribution(corpus, vocab);
  SeededRng rng = SeededRng(p.seed).fork(1);

  struct Pos {
    std::size_t trace, t;
  };
  std::vector<Pos> positions;
  std::size_t pairs_per_epoch = 0;
  for (std::size_t s = 0; s < corpus.size(); ++s)
    for (std::size_t t = 0; t < corpus[s].size(); ++t) {
      positions.push_back({s, t});
      pairs_per_epoch += std::min(p.window, corpus[s].size() - 1 - t);
    }
  const double total_pairs = static_cast<double>(pairs_per_epoch * p.epochs);
  double done = 0.0;

  const std::size_t D = m.dim();
  std::vector<double> grad_u(D), grad_v(D);
  std::vector<std::size_t> negs;
  for (std::size_t epoch = 0; epoch < p.epochs; ++epoch) {
    rng.shuffle(std::span(positions));
    double epoch_total = 0.0;
    for (const Pos& pos : positions) {
      const PlanTrace& trace = corpus[pos.trace];
      for (std::size_t o = 1; o <= p.window && pos.t + o < trace.size(); ++o) {
        const double lr = p.lr * std::max(1e-4, 1.0 - done / std::max(total_pairs, 1.0));
        done += 1.0;
        negs.clear();
        for (std::size_t n = 0; n < p.negatives; ++n) negs.push_back(rng.weighted(noise));
        const AmpDistribution& center = trace[pos.t];
        const AmpDistribution& context = trace[pos.t + o];
        for (const auto& ci : center.entries) {
          std::fill(grad_u.begin(), grad_u.end(), 0.0);
          auto u = m.input.row(ci.index);
          for (const auto& cj : context.entries) {
            const double w = ci.probability * cj.probability;
            auto step = [&](std::size_t target, double label) {
              auto v = m.output.row(target);
              const double s = sigmoid(dot(u, v));
              epoch_total += w * -detail::log_sigmoid(label > 0 ? dot(u, v) : -dot(u, v));
              const double g = w * (s - label);
              for (std::size_t d = 0; d < D; ++d) {
                grad_u[d] += g * v[d];
                v[d] -= lr * g * u[d];
              }
            };
            step(cj.index, 1.0);
            for (std::size_t n : negs) {
              if (n != cj.index) step(n, 0.0);
            }
          }
          for (std::size_t d = 0; d < D; ++d) u[d] -= lr * grad_u[d];
        }
      }
    }
    if (epoch_loss) {
      epoch_loss->push_back(pairs_per_epoch == 0 ? 0.0 : epoch_total / static_cast<double>(pairs_per_epoch));
    }
    if (on_epoch) on_epoch(epoch, m);
  }
  m.check_consistent();
  return m;
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = norm2(a), nb = norm2(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

/// Probability-weighted mean of input embeddings.
inline std::vector<double> expected_embedding(const AffinityModel& m, const AmpDistribution& d) {
  std::vector<double> e(m.dim(), 0.0);
  for (const auto& entry : d.entries) {
    if (entry.index >= m.vocab()) throw DataError("observed index outside the model vocabulary");
    auto row = m.input.row(entry.index);
    for (std::size_t k = 0; k < e.size(); ++k) e[k] += entry.probability * row[k];
  }
  return e;
}

/// How strongly `context` is expected to follow `center`.
inline double similarity(const AffinityModel& m, std::size_t center, std::size_t context) {
  return cosine(m.input.row(center), m.output.row(context));
}

/// Greedy K-step continuation. Each step scores every candidate by the mean
/// cosine between its output embedding and the expected input embeddings of
/// the last `window` trace elements; the winner (lowest index on ties) is
/// appended as a point mass.
inline RecognizedPlan recognize(const AffinityModel& m, const PlanTrace& observed, std::size_t K,
                                std::size_t plan = 1) {
  if (K == 0) throw ShapeError("recognize: K must be positive");
  if (observed.empty()) throw DataError("recognize: empty observation");
  std::vector<std::vector<double>> recent;
  for (const auto& d : observed) recent.push_back(expected_embedding(m, d));
  RecognizedPlan out;
  out.plan = plan;
  const std::size_t w = std::max<std::size_t>(m.window, 1);
  for (std::size_t step = 0; step < K; ++step) {
    const std::size_t from = recent.size() > w ? recent.size() - w : 0;
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < m.vocab(); ++c) {
      double s = 0.0;
      for (std::size_t r = from; r < recent.size(); ++r) s += cosine(m.output.row(c), recent[r]);
      s /= static_cast<double>(recent.size() - from);
      if (s > best_score) {
        best_score = s;
        best = c;
      }
    }
    out.steps.push_back(best);
    auto row = m.input.row(best);
    recent.emplace_back(row.begin(), row.end());
  }
  return out;
}

}  // namespace pdn
