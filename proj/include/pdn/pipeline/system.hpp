#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "pdn/amp/library.hpp"
#include "pdn/features/histograms.hpp"
#include "pdn/numerics/log.hpp"
#include "pdn/numerics/parallel.hpp"
#include "pdn/pdn/network.hpp"
#include "pdn/pipeline/attention.hpp"
#include "pdn/pipeline/classifier.hpp"
#include "pdn/pipeline/synth.hpp"
#include "pdn/planrec/affinity.hpp"

namespace pdn {

struct ErConfig {
  FeatureKind feature = FeatureKind::Hod;
  FeatureParams features;
  std::size_t clusters = 512;     // A
  std::size_t distribution = 3;   // top-Ã AMP indices per observation
  std::size_t K = 5;
  std::size_t tube = 16;          // side of the square video tube around a glimpse
  AffinityParams plan;
  PdnConfig pdn;                  // grid and amp_dim are taken from the data
  double lambda = 1.0;
  double z = 1.0;
  double bua_sigma = 1.5;
  double glimpse_threshold = 0.5;
  std::size_t min_area = 9;
  std::size_t object_size = 5;    // footprint side used by dynamics pretraining
  std::size_t hidden = 32;        // classifier LSTM
  std::size_t pool = 8;           // attended feature map pooled to pool x pool
  std::size_t epochs = 60;
  double lr = 0.05;
  double clip = 5.0;
  double train_fraction = 0.7;
  std::size_t dynamics_epochs = 30;  // 0 keeps the ACF path at its random init
  double dynamics_lr = 0.05;
  std::size_t kmeans_iter = 100;
  std::size_t threads = 1;
  std::uint64_t seed = 0;
};

struct ErModels {
  AmpLibrary lib;
  AffinityModel plan;
  PdnParams pdn;
  ClassifierParams classifier;
};

/// Square tube of side cfg.tube centred on the glimpse, shifted to fit.
inline Rect glimpse_tube(const Glimpse& g, std::size_t height, std::size_t width, std::size_t side) {
  side = std::min({side, height, width});
  const Rect b = g.bbox();
  auto place = [side](std::size_t lo, std::size_t len, std::size_t limit) {
    const long c = static_cast<long>(lo) + static_cast<long>(len) / 2;
    const long start = std::clamp(c - static_cast<long>(side) / 2, 0L, static_cast<long>(limit - side));
    return static_cast<std::size_t>(start);
  };
  return {place(b.x, b.width, width), place(b.y, b.height, height), side, side};
}

inline std::vector<std::vector<double>> glimpse_features(std::span<const Frame> frames, const Glimpse& g,
                                                         const ErConfig& cfg) {
  const Rect r = glimpse_tube(g, frames[0].height(), frames[0].width(), cfg.tube);
  std::vector<std::vector<double>> out;
  for (auto& f : tube_features(VideoTube{frames, r}, cfg.feature, cfg.features)) out.push_back(std::move(f.values));
  return out;
}

inline PlanTrace observe_trace(std::span<const Frame> frames, const Glimpse& g, const AmpLibrary& lib,
                               const ErConfig& cfg) {
  PlanTrace trace;
  for (const auto& f : glimpse_features(frames, g, cfg)) trace.push_back(assign_distribution(f, lib, cfg.distribution));
  return trace;
}

/// Batch-span temporal difference anchored on the first frame.
inline Tensor batch_bua(const EventSample& s, const ErConfig& cfg) {
  return compute_bua(s.frames.back(), s.frames.front(), cfg.bua_sigma);
}

/// One pass of the attention loop on a sample's batch.
struct SceneAnalysis {
  Tensor bua;
  std::vector<Glimpse> glimpses;
  std::vector<PlanTrace> observed;
  std::vector<RecognizedPlan> plans;
  MaskedImage masked;
  Tensor prda;  // empty when there are no glimpses
};

inline SceneAnalysis analyze_scene(const EventSample& s, const ErModels& models, const ErConfig& cfg,
                                   std::size_t threads = 1, bool with_prda = true) {
  SceneAnalysis a;
  a.bua = batch_bua(s, cfg);
  a.glimpses = segment_glimpses(a.bua, cfg.glimpse_threshold, cfg.min_area);
  const std::size_t M = a.glimpses.size();
  a.observed.resize(M);
  a.plans.resize(M);
  parallel_for(M, threads, [&](std::size_t m) {
    a.observed[m] = observe_trace(s.frames, a.glimpses[m], models.lib, cfg);
    a.plans[m] = recognize(models.plan, a.observed[m], cfg.K, a.glimpses[m].plan);
  });
  a.masked = build_masked_image(s.frames.front(), glimpse_regions(a.glimpses));
  if (M > 0 && with_prda) a.prda = pdn_forward(a.masked, a.plans, models.lib, models.pdn, cfg.z, threads);
  return a;
}

/// Per step t >= 1: |gray_t - gray_{t-1}| through a fixed 3 x 3 box filter,
/// weighted by the attention map and average-pooled to pool x pool.
inline std::vector<std::vector<double>> attended_sequence(const EventSample& s, const Tensor& attention,
                                                          std::size_t pool) {
  const std::size_t h = s.frames[0].height(), w = s.frames[0].width();
  require_shape(attention, {h, w}, "attention map");
  if (pool == 0 || h % pool != 0 || w % pool != 0) throw ShapeError("attended_sequence: pool must divide the frame");
  const Tensor box = Tensor::matrix(3, 3, 1.0 / 9.0);
  const std::size_t bh = h / pool, bw = w / pool;
  std::vector<std::vector<double>> seq;
  for (std::size_t t = 1; t < s.frames.size(); ++t) {
    Tensor d({h, w});
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) d(i, j) = std::abs(s.frames[t].gray(i, j) - s.frames[t - 1].gray(i, j));
    const Tensor fmap = conv2d(d, box, Padding::Same);
    std::vector<double> v(pool * pool, 0.0);
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) v[(i / bh) * pool + j / bw] += fmap(i, j) * attention(i, j);
    for (double& x : v) x /= static_cast<double>(bh * bw);
    seq.push_back(std::move(v));
  }
  return seq;
}

struct Split {
  std::vector<std::size_t> train, test;
};

inline Split split_dataset(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw DataError("train fraction must be in (0, 1)");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  SeededRng(seed).fork(11).shuffle(std::span(idx));
  const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(n)));
  Split s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<long>(std::min(n_train, n)));
  s.test.assign(idx.begin() + static_cast<long>(std::min(n_train, n)), idx.end());
  if (s.train.empty() || s.test.empty()) throw DataError("dataset split leaves an empty train or test set");
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

/// Glimpses of a training sample with the full frame sequence (batch then
/// future) for AMP fitting and plan-corpus traces.
inline std::vector<std::vector<std::vector<double>>> training_tube_features(const EventSample& s, const ErConfig& cfg) {
  std::vector<Frame> all = s.frames;
  all.insert(all.end(), s.future.begin(), s.future.end());
  std::vector<std::vector<std::vector<double>>> out;
  for (const auto& g : segment_glimpses(batch_bua(s, cfg), cfg.glimpse_threshold, cfg.min_area)) {
    out.push_back(glimpse_features(all, g, cfg));
  }
  return out;
}

inline AmpLibrary fit_amp_library(const std::vector<std::vector<std::vector<std::vector<double>>>>& tubes,
                                  const ErConfig& cfg) {
  std::vector<std::vector<double>> points;
  for (const auto& sample : tubes)
    for (const auto& tube : sample) points.insert(points.end(), tube.begin(), tube.end());
  if (points.empty()) throw DataError("no glimpses in the training split; cannot fit AMPs");
  std::size_t clusters = cfg.clusters;
  if (points.size() < clusters) {
    log::error("warning: " + std::to_string(points.size()) + " motion features for " + std::to_string(clusters) +
               " clusters; using " + std::to_string(points.size()));
    clusters = points.size();
  }
  if (clusters < cfg.distribution) throw DataError("fewer AMP clusters than the distribution size");
  AmpLibrary lib = build_library(points, clusters, cfg.feature, SeededRng(cfg.seed).fork(21).next(), cfg.kmeans_iter,
                                 cfg.threads);
  lib.distribution_size = cfg.distribution;
  return lib;
}

inline std::vector<PlanTrace> build_plan_corpus(const std::vector<std::vector<std::vector<std::vector<double>>>>& tubes,
                                                const AmpLibrary& lib, const ErConfig& cfg) {
  std::vector<PlanTrace> corpus;
  for (const auto& sample : tubes)
    for (const auto& tube : sample) {
      PlanTrace t;
      for (const auto& f : tube) t.push_back(assign_distribution(f, lib, cfg.distribution));
      corpus.push_back(merge_consecutive(t));
    }
  return corpus;
}

/// mean(PRDA on trajectory cells) / mean(PRDA elsewhere); 0 without a PRDA.
inline double prda_concentration(const Tensor& prda, const std::vector<Pixel>& cells) {
  if (prda.empty()) return 0.0;
  const std::size_t n = prda.dim(1);
  std::vector<char> on(prda.size(), 0);
  for (const auto& c : cells) on.at(c.i * n + c.j) = 1;
  double a = 0.0, b = 0.0;
  std::size_t na = 0, nb = 0;
  for (std::size_t q = 0; q < prda.size(); ++q) {
    if (on[q]) {
      a += prda[q];
      ++na;
    } else {
      b += prda[q];
      ++nb;
    }
  }
  if (na == 0 || nb == 0) throw DataError("prda_concentration: need cells on and off the trajectory");
  const double off = b / static_cast<double>(nb);
  if (off == 0.0) return std::numeric_limits<double>::infinity();
  return (a / static_cast<double>(na)) / off;
}

}  // namespace pdn
