#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pdn/numerics/lstm.hpp"
#include "pdn/numerics/ops.hpp"

namespace pdn {

/// LSTM over per-step attended feature vectors, softmax readout of the last
/// hidden state. Inputs are standardized with fixed per-dimension statistics.
struct ClassifierParams {
  std::vector<double> mean, scale;  // x' = (x - mean) * scale
  LstmParams lstm;
  Dense readout;

  static ClassifierParams create(std::size_t input, std::size_t hidden, std::size_t classes, std::uint64_t seed) {
    if (input == 0 || hidden == 0 || classes < 2) throw ShapeError("classifier needs input, hidden > 0 and >= 2 classes");
    ClassifierParams p;
    p.mean.assign(input, 0.0);
    p.scale.assign(input, 1.0);
    p.lstm = LstmParams(input, hidden);
    p.readout = Dense(hidden, classes);
    SeededRng rng(seed);
    p.lstm.init(rng);
    p.readout.init(rng);
    return p;
  }

  std::size_t inputs() const { return lstm.input_size; }
  std::size_t classes() const { return readout.outputs(); }

  ClassifierParams zeros_like() const {
    ClassifierParams g;
    g.lstm = lstm.zeros_like();
    g.readout = readout.zeros_like();
    return g;
  }

  std::vector<std::pair<std::string, Tensor*>> tensors() {
    return {{"lstm_wx", &lstm.wx},
            {"lstm_wh", &lstm.wh},
            {"lstm_b", &lstm.b},
            {"readout_w", &readout.weight},
            {"readout_b", &readout.bias}};
  }

  void check_consistent() const {
    lstm.check_consistent();
    require_shape(readout.weight, {readout.outputs(), lstm.hidden_size}, "classifier readout");
    if (mean.size() != lstm.input_size || scale.size() != lstm.input_size) {
      throw ShapeError("classifier normalization length differs from the input size");
    }
  }
};

struct ClassifierForward {
  std::vector<LstmCache> caches;
  std::vector<double> logits;
  std::vector<double> probs;
};

inline std::vector<double> classify_event(std::span<const std::vector<double>> sequence, const ClassifierParams& p,
                                          ClassifierForward* fwd = nullptr) {
  if (sequence.empty()) throw ShapeError("classify_event: empty sequence");
  std::vector<std::vector<double>> xs;
  xs.reserve(sequence.size());
  for (const auto& x : sequence) {
    if (x.size() != p.inputs()) {
      throw ShapeError("classify_event: feature length " + std::to_string(x.size()) + ", expected " +
                       std::to_string(p.inputs()));
    }
    std::vector<double> z(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) z[d] = (x[d] - p.mean[d]) * p.scale[d];
    xs.push_back(std::move(z));
  }
  ClassifierForward local;
  ClassifierForward& f = fwd ? *fwd : local;
  f.caches = lstm_sequence(xs, p.lstm);
  f.logits = p.readout.forward(f.caches.back().h);
  f.probs = softmax(f.logits);
  return f.probs;
}

/// Cross-entropy of `label`; accumulates parameter gradients into `grad`.
inline double classifier_backward(const ClassifierForward& f, std::size_t label, const ClassifierParams& p,
                                  ClassifierParams& grad) {
  if (label >= f.probs.size()) throw DataError("classifier_backward: label out of range");
  std::vector<double> dlogits = f.probs;
  dlogits[label] -= 1.0;
  const std::vector<double> dh = p.readout.backward(f.caches.back().h, dlogits, grad.readout);
  std::vector<std::vector<double>> dhs(f.caches.size(), std::vector<double>(p.lstm.hidden_size, 0.0));
  dhs.back() = dh;
  lstm_sequence_backward(f.caches, dhs, p.lstm, grad.lstm);
  return -std::log(std::max(f.probs[label], 1e-300));
}

}  // namespace pdn
