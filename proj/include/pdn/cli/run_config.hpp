#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "pdn/amp/io.hpp"
#include "pdn/pipeline/synth.hpp"
#include "pdn/pipeline/system.hpp"

namespace pdn {

/// Every hyperparameter and path of a CLI run, flat so that each key is
/// both a JSON key and a --flag.
struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string data;     // dataset directory
  std::string out = "out";
  std::string models;   // directory holding saved models
  std::string sample;   // sample id for single-sample commands
  std::string trace;    // JSON plan trace for plan-recognize
  std::string corpus;   // JSON plan corpus for plan-train
  std::string map = "attention";  // export-map: bua | prda | attention

  // synthetic scenes
  std::size_t grid = 64;  // N
  std::size_t scenes = 200;
  std::vector<double> ratios{1.0, 1.0, 1.0, 1.0};

  // perception
  std::string feature = "hod";
  std::size_t clusters = 512;  // A
  std::size_t distribution = 3;
  std::size_t K = 5;
  std::size_t tube = 16;
  std::size_t kmeans_iter = 100;
  std::size_t plan_dim = 32;
  std::size_t plan_window = 2;
  std::size_t plan_epochs = 60;
  double plan_lr = 0.05;
  std::size_t plan_negatives = 5;
  std::size_t pdn_hidden = 16;
  std::size_t pdn_kmax = 8;
  std::size_t pdn_code = 8;
  std::size_t pdn_filter = 5;
  std::size_t dynamics_epochs = 30;
  double dynamics_lr = 0.05;
  std::size_t object_size = 5;

  // attention and classifier
  double lambda = 1.0;
  double z = 1.0;
  double bua_sigma = 1.5;
  double glimpse_threshold = 0.5;
  std::size_t min_area = 9;
  std::size_t hidden = 32;
  std::size_t pool = 8;
  std::size_t epochs = 60;
  double lr = 0.05;
  double clip = 5.0;
  double train_fraction = 0.7;
};

/// One key: JSON read/write, and copy from another config (flag overrides).
struct RunField {
  std::string key;
  std::string help;
  std::function<json(const RunConfig&)> get;
  std::function<void(RunConfig&, const json&)> set;
  std::function<void(RunConfig&, const RunConfig&)> copy;
  // type-erased pointer-to-member, used by the CLI to bind flags
  std::function<void*(RunConfig&)> address;
  enum class Kind { U64, Size, Double, String, Doubles } kind;
};

namespace detail {

template <class T>
RunField::Kind field_kind() {
  if constexpr (std::is_same_v<T, std::string>) return RunField::Kind::String;
  else if constexpr (std::is_same_v<T, double>) return RunField::Kind::Double;
  else if constexpr (std::is_same_v<T, std::vector<double>>) return RunField::Kind::Doubles;
  else if constexpr (std::is_same_v<T, std::uint64_t>) return RunField::Kind::U64;
  else return RunField::Kind::Size;
}

template <class T>
RunField field(std::string key, T RunConfig::*member, std::string help) {
  RunField f;
  f.key = std::move(key);
  f.help = std::move(help);
  f.get = [member](const RunConfig& c) { return json(c.*member); };
  f.set = [member, k = f.key](RunConfig& c, const json& j) {
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!j.is_number()) throw DataError("expected a number");
      } else if constexpr (std::is_integral_v<T>) {
        if (!j.is_number_unsigned()) throw DataError("expected a non-negative integer");
      }
      c.*member = j.get<T>();
    } catch (const json::exception& e) {
      throw DataError("config key '" + k + "': " + e.what());
    } catch (const DataError& e) {
      throw DataError("config key '" + k + "': " + e.what());
    }
  };
  f.copy = [member](RunConfig& dst, const RunConfig& src) { dst.*member = src.*member; };
  f.address = [member](RunConfig& c) -> void* { return &(c.*member); };
  f.kind = field_kind<T>();
  return f;
}

}  // namespace detail

inline const std::vector<RunField>& run_fields() {
  using detail::field;
  static const std::vector<RunField> fields = {
      field("seed", &RunConfig::seed, "master seed"),
      field("threads", &RunConfig::threads, "worker threads"),
      field("data", &RunConfig::data, "dataset directory"),
      field("out", &RunConfig::out, "output directory"),
      field("models", &RunConfig::models, "directory with saved models"),
      field("sample", &RunConfig::sample, "sample id (default: first sample)"),
      field("trace", &RunConfig::trace, "JSON plan trace file"),
      field("corpus", &RunConfig::corpus, "JSON plan corpus file"),
      field("map", &RunConfig::map, "map to export: bua, prda or attention"),
      field("grid", &RunConfig::grid, "frame side N of synthetic scenes"),
      field("scenes", &RunConfig::scenes, "number of synthetic scenes"),
      field("ratios", &RunConfig::ratios, "class ratios approach meet loiter disperse"),
      field("feature", &RunConfig::feature, "motion feature: hod or hod+hog"),
      field("clusters", &RunConfig::clusters, "AMP library size A"),
      field("distribution", &RunConfig::distribution, "AMP distribution size"),
      field("K", &RunConfig::K, "recognized plan length"),
      field("tube", &RunConfig::tube, "glimpse tube side in pixels"),
      field("kmeans_iter", &RunConfig::kmeans_iter, "k-means iteration cap"),
      field("plan_dim", &RunConfig::plan_dim, "plan embedding dimension"),
      field("plan_window", &RunConfig::plan_window, "plan context window"),
      field("plan_epochs", &RunConfig::plan_epochs, "plan embedding epochs"),
      field("plan_lr", &RunConfig::plan_lr, "plan embedding learning rate"),
      field("plan_negatives", &RunConfig::plan_negatives, "negative samples per context"),
      field("pdn_hidden", &RunConfig::pdn_hidden, "PDN LSTM width"),
      field("pdn_kmax", &RunConfig::pdn_kmax, "PDN k-max pooling size"),
      field("pdn_code", &RunConfig::pdn_code, "PDN encoder code size"),
      field("pdn_filter", &RunConfig::pdn_filter, "ACF side (odd)"),
      field("dynamics_epochs", &RunConfig::dynamics_epochs, "ACF pretraining epochs (0 keeps random init)"),
      field("dynamics_lr", &RunConfig::dynamics_lr, "ACF pretraining learning rate"),
      field("object_size", &RunConfig::object_size, "object footprint side for ACF pretraining"),
      field("lambda", &RunConfig::lambda, "PRDA weight in the attention map"),
      field("z", &RunConfig::z, "PRDA normalization constant"),
      field("bua_sigma", &RunConfig::bua_sigma, "bottom-up attention blur sigma"),
      field("glimpse_threshold", &RunConfig::glimpse_threshold, "glimpse threshold in (0,1)"),
      field("min_area", &RunConfig::min_area, "minimum glimpse area"),
      field("hidden", &RunConfig::hidden, "classifier LSTM width"),
      field("pool", &RunConfig::pool, "attended map pooled to pool x pool"),
      field("epochs", &RunConfig::epochs, "classifier epochs"),
      field("lr", &RunConfig::lr, "classifier learning rate"),
      field("clip", &RunConfig::clip, "gradient norm clip"),
      field("train_fraction", &RunConfig::train_fraction, "training share of the split"),
  };
  return fields;
}

inline const RunField& run_field(std::string_view key) {
  for (const auto& f : run_fields())
    if (f.key == key) return f;
  throw std::logic_error("unknown run field " + std::string(key));
}

inline json run_config_to_json(const RunConfig& c) {
  json j = json::object();
  for (const auto& f : run_fields()) j[f.key] = f.get(c);
  return j;
}

/// Starts from `base`; unknown keys are rejected.
inline RunConfig run_config_from_json(const json& j, RunConfig base = {}) {
  if (!j.is_object()) throw DataError("run config must be a JSON object");
  std::set<std::string> known;
  for (const auto& f : run_fields()) known.insert(f.key);
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw DataError("unknown config key '" + key + "'");
    run_field(key).set(base, value);
  }
  return base;
}

inline SceneConfig scene_config(const RunConfig& c) {
  SceneConfig s;
  s.grid = c.grid;
  s.scenes = c.scenes;
  if (c.ratios.size() != s.ratios.size()) throw DataError("ratios needs one value per event class (4)");
  std::copy(c.ratios.begin(), c.ratios.end(), s.ratios.begin());
  s.validate();
  return s;
}

inline ErConfig er_config(const RunConfig& c) {
  ErConfig e;
  e.feature = parse_feature_kind(c.feature);
  e.clusters = c.clusters;
  e.distribution = c.distribution;
  e.K = c.K;
  e.tube = c.tube;
  e.kmeans_iter = c.kmeans_iter;
  e.plan.dim = c.plan_dim;
  e.plan.window = c.plan_window;
  e.plan.epochs = c.plan_epochs;
  e.plan.lr = c.plan_lr;
  e.plan.negatives = c.plan_negatives;
  e.pdn.hidden = c.pdn_hidden;
  e.pdn.kmax = c.pdn_kmax;
  e.pdn.code = c.pdn_code;
  e.pdn.filter = c.pdn_filter;
  e.dynamics_epochs = c.dynamics_epochs;
  e.dynamics_lr = c.dynamics_lr;
  e.object_size = c.object_size;
  e.lambda = c.lambda;
  e.z = c.z;
  e.bua_sigma = c.bua_sigma;
  e.glimpse_threshold = c.glimpse_threshold;
  e.min_area = c.min_area;
  e.hidden = c.hidden;
  e.pool = c.pool;
  e.epochs = c.epochs;
  e.lr = c.lr;
  e.clip = c.clip;
  e.train_fraction = c.train_fraction;
  e.threads = std::max<std::size_t>(1, c.threads);
  e.seed = c.seed;
  if (e.K == 0 || e.distribution == 0 || e.clusters < 2) throw DataError("K, distribution must be > 0 and clusters >= 2");
  if (!(e.lambda >= 0.0)) throw DataError("lambda must be >= 0");
  if (!(e.z > 0.0)) throw DataError("z must be positive");
  if (!(e.glimpse_threshold > 0.0 && e.glimpse_threshold < 1.0)) throw DataError("glimpse_threshold must be in (0, 1)");
  return e;
}

}  // namespace pdn
