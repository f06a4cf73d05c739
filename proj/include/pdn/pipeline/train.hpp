#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "pdn/amp/io.hpp"
#include "pdn/numerics/optim.hpp"
#include "pdn/pipeline/dataset.hpp"
#include "pdn/pipeline/dynamics.hpp"
#include "pdn/pipeline/metrics.hpp"
#include "pdn/pipeline/system.hpp"

namespace pdn {

using Sequence = std::vector<std::vector<double>>;

inline std::size_t frame_grid(const std::vector<EventSample>& samples) {
  if (samples.empty()) throw DataError("empty dataset");
  const Frame& f = samples[0].frames.at(0);
  if (f.height() != f.width()) throw DataError("frames must be square");
  for (const auto& s : samples)
    for (const auto& fr : s.frames)
      if (!fr.same_size(f)) throw DataError(s.id + ": frame size differs from the dataset");
  return f.height();
}

/// AMP library, plan model and PDN from the training samples. Appends
/// metrics lines (stage records) to `metrics` when given.
inline ErModels fit_perception(const std::vector<EventSample>& samples, const std::vector<std::size_t>& train,
                               const ErConfig& cfg, std::vector<json>* metrics = nullptr) {
  const std::size_t n = frame_grid(samples);
  std::vector<std::vector<std::vector<std::vector<double>>>> tubes(train.size());
  parallel_for(train.size(), cfg.threads, [&](std::size_t k) { tubes[k] = training_tube_features(samples[train[k]], cfg); });

  ErModels models;
  models.lib = fit_amp_library(tubes, cfg);
  const auto corpus = build_plan_corpus(tubes, models.lib, cfg);
  AffinityParams ap = cfg.plan;
  ap.seed = SeededRng(cfg.seed).fork(22).next();
  std::vector<double> plan_loss;
  models.plan = train_affinity(corpus, models.lib.size(), ap, &plan_loss);
  if (metrics) {
    metrics->push_back({{"stage", "amp"}, {"clusters", models.lib.size()}, {"traces", corpus.size()}});
    metrics->push_back({{"stage", "plan"}, {"epochs", plan_loss.size()}, {"final_loss", plan_loss.empty() ? 0.0 : plan_loss.back()}});
  }

  PdnConfig pc = cfg.pdn;
  pc.grid = n;
  pc.amp_dim = models.lib.feature_length();
  models.pdn = PdnParams::create(pc, SeededRng(cfg.seed).fork(23).next());

  if (cfg.dynamics_epochs > 0) {
    std::vector<DynamicsExample> data(train.size());
    parallel_for(train.size(), cfg.threads, [&](std::size_t k) {
      const SceneAnalysis a = analyze_scene(samples[train[k]], models, cfg, 1, false);
      data[k] = make_dynamics_example(samples[train[k]], a, models.lib, models.pdn, cfg.object_size / 2);
    });
    const DynamicsReport r =
        pretrain_dynamics(models.pdn, data, cfg.dynamics_epochs, cfg.dynamics_lr, SeededRng(cfg.seed).fork(24).next());
    if (metrics) {
      for (std::size_t e = 0; e < r.epoch_loss.size(); ++e)
        metrics->push_back({{"stage", "dynamics"}, {"epoch", e + 1}, {"loss", r.epoch_loss[e]}});
      metrics->push_back({{"stage", "dynamics"}, {"targets", r.targets}, {"exact_fraction", r.exact_fraction}});
    }
  }
  return models;
}

inline std::vector<SceneAnalysis> analyze_samples(const std::vector<EventSample>& samples,
                                                  const std::vector<std::size_t>& idx, const ErModels& models,
                                                  const ErConfig& cfg) {
  std::vector<SceneAnalysis> out(idx.size());
  parallel_for(idx.size(), cfg.threads, [&](std::size_t k) { out[k] = analyze_scene(samples[idx[k]], models, cfg); });
  return out;
}

inline Sequence attended_input(const EventSample& s, const SceneAnalysis& a, double lambda, std::size_t pool) {
  return attended_sequence(s, combine_attention(a.bua, a.prda, lambda), pool);
}

inline std::vector<std::vector<double>> predict_scores(const std::vector<Sequence>& seqs, const ClassifierParams& p) {
  std::vector<std::vector<double>> out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) out.push_back(classify_event(s, p));
  return out;
}

struct ClassifierRun {
  ClassifierParams params;
  std::vector<double> epoch_loss;
  std::vector<double> epoch_map;  // test mean AP per epoch (empty without a test set)
};

/// Cross-entropy SGD with per-epoch shuffling and global-norm clipping.
/// Inputs are standardized with training-set statistics.
inline ClassifierRun train_classifier(const std::vector<Sequence>& train_x, const std::vector<std::size_t>& train_y,
                                      const std::vector<Sequence>& test_x,
                                      const std::vector<std::vector<std::size_t>>& test_y, std::size_t classes,
                                      const ErConfig& cfg, std::vector<json>* metrics = nullptr) {
  if (train_x.empty()) throw DataError("train_classifier: empty training split");
  if (train_x.size() != train_y.size() || test_x.size() != test_y.size()) {
    throw ShapeError("train_classifier: sample and label counts differ");
  }
  const std::size_t dim = train_x[0].at(0).size();
  ClassifierRun run;
  ClassifierParams& p = run.params;
  p = ClassifierParams::create(dim, cfg.hidden, classes, SeededRng(cfg.seed).fork(41).next());

  std::vector<double> sum(dim, 0.0), sq(dim, 0.0);
  double count = 0.0;
  for (const auto& seq : train_x)
    for (const auto& x : seq) {
      if (x.size() != dim) throw ShapeError("train_classifier: feature length varies");
      for (std::size_t d = 0; d < dim; ++d) {
        sum[d] += x[d];
        sq[d] += x[d] * x[d];
      }
      count += 1.0;
    }
  for (std::size_t d = 0; d < dim; ++d) {
    p.mean[d] = sum[d] / count;
    const double var = std::max(0.0, sq[d] / count - p.mean[d] * p.mean[d]);
    p.scale[d] = 1.0 / (std::sqrt(var) + 1e-3);
  }

  ClassifierParams grad = p.zeros_like();
  const NamedTensors params = p.tensors(), grads = grad.tensors();
  std::vector<std::size_t> order(train_x.size());
  std::iota(order.begin(), order.end(), 0);
  SeededRng rng = SeededRng(cfg.seed).fork(42);
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    rng.shuffle(std::span(order));
    double loss = 0.0;
    for (std::size_t k : order) {
      for (auto& [name, g] : grads) g->fill(0.0);
      ClassifierForward f;
      classify_event(train_x[k], p, &f);
      loss += classifier_backward(f, train_y[k], p, grad);
      clip_global_norm(grads, cfg.clip);
      sgd_step(params, grads, cfg.lr);
    }
    loss /= static_cast<double>(train_x.size());
    run.epoch_loss.push_back(loss);
    json line{{"epoch", e + 1}, {"loss", loss}};
    if (!test_x.empty()) {
      const double m = evaluate_map(predict_scores(test_x, p), test_y, classes).mean;
      run.epoch_map.push_back(m);
      line["mean_ap"] = m;
    }
    if (metrics) metrics->push_back(line);
  }
  return run;
}

struct TrainResult {
  ErModels models;
  Split split;
  std::vector<json> metrics;
  ClassifierRun classifier;
  MapResult test_map;
};

/// Classifier inputs and labels for one split; multi-label training samples
/// are duplicated once per label.
inline void build_split(const std::vector<EventSample>& samples, const std::vector<std::size_t>& idx,
                        const std::vector<SceneAnalysis>& analyses, double lambda, std::size_t pool, bool duplicate,
                        std::vector<Sequence>& xs, std::vector<std::size_t>& ys,
                        std::vector<std::vector<std::size_t>>& label_sets) {
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const EventSample& s = samples[idx[k]];
    Sequence seq = attended_input(s, analyses[k], lambda, pool);
    if (duplicate) {
      for (std::size_t l : s.labels) {
        xs.push_back(seq);
        ys.push_back(l);
      }
    } else {
      xs.push_back(std::move(seq));
      ys.push_back(s.label);
      label_sets.push_back(s.labels);
    }
  }
}

inline TrainResult train_er(const Dataset& d, const ErConfig& cfg) {
  TrainResult r;
  r.split = split_dataset(d.samples.size(), cfg.train_fraction, cfg.seed);
  r.models = fit_perception(d.samples, r.split.train, cfg, &r.metrics);
  const auto train_a = analyze_samples(d.samples, r.split.train, r.models, cfg);
  const auto test_a = analyze_samples(d.samples, r.split.test, r.models, cfg);
  std::vector<Sequence> tx, vx;
  std::vector<std::size_t> ty, vy;
  std::vector<std::vector<std::size_t>> unused, vsets;
  build_split(d.samples, r.split.train, train_a, cfg.lambda, cfg.pool, true, tx, ty, unused);
  build_split(d.samples, r.split.test, test_a, cfg.lambda, cfg.pool, false, vx, vy, vsets);
  r.classifier = train_classifier(tx, ty, vx, vsets, d.classes.size(), cfg, &r.metrics);
  r.models.classifier = r.classifier.params;
  r.test_map = evaluate_map(predict_scores(vx, r.models.classifier), vsets, d.classes.size());
  return r;
}

}  // namespace pdn
