// pdn: single binary driving the event-recognition toolchain.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "pdn/cli/run_config.hpp"
#include "pdn/pipeline/io.hpp"
#include "pdn/pipeline/train.hpp"

namespace fs = std::filesystem;
using namespace pdn;

namespace {

constexpr int kOk = 0, kUsage = 1, kData = 2;

struct Command {
  std::string name;
  std::string help;
  std::vector<std::string> keys;  // RunConfig keys exposed as flags
  std::function<void(const RunConfig&)> run;
};

void write_lines(const fs::path& path, const std::vector<json>& lines) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (const auto& l : lines) out << l.dump() << '\n';
}

fs::path out_dir(const RunConfig& c) {
  fs::create_directories(c.out);
  return c.out;
}

Dataset need_data(const RunConfig& c) {
  if (c.data.empty()) throw DataError("--data is required");
  return load_dataset(c.data);
}

fs::path need_models(const RunConfig& c) {
  if (c.models.empty()) throw DataError("--models is required");
  return c.models;
}

std::size_t sample_index(const Dataset& d, const std::string& id) {
  if (d.samples.empty()) throw DataError("dataset has no samples");
  if (id.empty()) return 0;
  for (std::size_t k = 0; k < d.samples.size(); ++k)
    if (d.samples[k].id == id) return k;
  throw DataError("no sample '" + id + "' in the dataset");
}

json rect_json(const Rect& r) { return json::array({r.x, r.y, r.width, r.height}); }

json plan_json(const RecognizedPlan& p) { return {{"plan", p.plan}, {"steps", p.steps}}; }

// Tube features of every training-split glimpse, as fit_perception sees them.
std::vector<std::vector<std::vector<std::vector<double>>>> train_tubes(const Dataset& d, const ErConfig& cfg) {
  const Split split = split_dataset(d.samples.size(), cfg.train_fraction, cfg.seed);
  std::vector<std::vector<std::vector<std::vector<double>>>> tubes(split.train.size());
  parallel_for(split.train.size(), cfg.threads,
               [&](std::size_t k) { tubes[k] = training_tube_features(d.samples[split.train[k]], cfg); });
  return tubes;
}

// Library, plan model and PDN for single-sample commands; an absent pdn.json
// falls back to a freshly initialized PDN.
ErModels perception_models(const RunConfig& c, const ErConfig& cfg, std::size_t grid) {
  const fs::path dir = need_models(c);
  ErModels m;
  m.lib = load_library(dir / model_files::kLibrary);
  m.plan = load_affinity(dir / model_files::kPlan);
  if (fs::exists(dir / model_files::kPdn)) {
    m.pdn = load_pdn_params(dir / model_files::kPdn);
  } else {
    log::info("no " + std::string(model_files::kPdn) + " in " + dir.string() + "; using a seeded initial PDN");
    PdnConfig pc = cfg.pdn;
    pc.grid = grid;
    pc.amp_dim = m.lib.feature_length();
    m.pdn = PdnParams::create(pc, SeededRng(cfg.seed).fork(23).next());
  }
  if (m.pdn.config.grid != grid) throw DataError("PDN grid does not match the dataset frames");
  return m;
}

void cmd_synth(const RunConfig& c) {
  const SceneConfig sc = scene_config(c);
  save_dataset(out_dir(c), make_synthetic_dataset(sc, c.seed));
}

void cmd_features(const RunConfig& c) {
  const ErConfig cfg = er_config(c);
  const Dataset d = need_data(c);
  json samples = json::array();
  for (const auto& s : d.samples) {
    std::vector<Frame> all = s.frames;
    all.insert(all.end(), s.future.begin(), s.future.end());
    json gs = json::array();
    for (const auto& g : segment_glimpses(batch_bua(s, cfg), cfg.glimpse_threshold, cfg.min_area)) {
      gs.push_back({{"plan", g.plan},
                    {"tube", rect_json(glimpse_tube(g, all[0].height(), all[0].width(), cfg.tube))},
                    {"features", glimpse_features(all, g, cfg)}});
    }
    samples.push_back({{"id", s.id}, {"glimpses", gs}});
  }
  write_json(out_dir(c) / "features.json", {{"feature", std::string(to_string(cfg.feature))}, {"samples", samples}});
}

void cmd_amp_fit(const RunConfig& c) {
  const ErConfig cfg = er_config(c);
  const Dataset d = need_data(c);
  const auto tubes = train_tubes(d, cfg);
  const AmpLibrary lib = fit_amp_library(tubes, cfg);
  const fs::path out = out_dir(c);
  save_library(out / model_files::kLibrary, lib);
  write_json(out / "plan_corpus.json", corpus_to_json(build_plan_corpus(tubes, lib, cfg)));
}

void cmd_plan_train(const RunConfig& c) {
  const ErConfig cfg = er_config(c);
  std::vector<PlanTrace> corpus;
  std::size_t vocab = 0;
  if (!c.corpus.empty()) {
    corpus = corpus_from_json(read_json(c.corpus));
    for (const auto& t : corpus)
      for (const auto& dist : t)
        for (const auto& e : dist.entries) vocab = std::max(vocab, e.index + 1);
    if (!c.models.empty()) vocab = std::max(vocab, load_library(fs::path(c.models) / model_files::kLibrary).size());
  } else {
    const AmpLibrary lib = load_library(need_models(c) / model_files::kLibrary);
    corpus = build_plan_corpus(train_tubes(need_data(c), cfg), lib, cfg);
    vocab = lib.size();
  }
  AffinityParams ap = cfg.plan;
  ap.seed = SeededRng(cfg.seed).fork(22).next();
  std::vector<double> loss;
  const AffinityModel model = train_affinity(corpus, vocab, ap, &loss);
  const fs::path out = out_dir(c);
  save_affinity(out / model_files::kPlan, model);
  std::vector<json> lines;
  for (std::size_t e = 0; e < loss.size(); ++e) lines.push_back({{"epoch", e + 1}, {"loss", loss[e]}});
  write_lines(out / "plan_metrics.jsonl", lines);
}

void cmd_plan_recognize(const RunConfig& c) {
  const ErConfig cfg = er_config(c);
  const fs::path dir = need_models(c);
  const AffinityModel model = load_affinity(dir / model_files::kPlan);
  json result;
  if (!c.trace.empty()) {
    const PlanTrace trace = trace_from_json(read_json(c.trace));
    result = {{"observed", trace_to_json(trace)}, {"plans", json::array({plan_json(recognize(model, trace, cfg.K, 1))})}};
  } else {
    const Dataset d = need_data(c);
    const EventSample& s = d.samples[sample_index(d, c.sample)];
    const AmpLibrary lib = load_library(dir / model_files::kLibrary);
    json plans = json::array();
    for (const auto& g : segment_glimpses(batch_bua(s, cfg), cfg.glimpse_threshold, cfg.min_area)) {
      const PlanTrace t = observe_trace(s.frames, g, lib, cfg);
      json p = plan_json(recognize(model, t, cfg.K, g.plan));
      p["observed"] = trace_to_json(t);
      p["bbox"] = rect_json(g.bbox());
      plans.push_back(std::move(p));
    }
    result = {{"sample", s.id}, {"plans", plans}};
  }
  write_json(out_dir(c) / "plans.json", result);
}

void cmd_prda(const RunConfig& c) {
  const ErConfig cfg = er_config(c);
  const Dataset d = need_data(c);
  const EventSample& s = d.samples[sample_index(d, c.sample)];
  const ErModels m = perception_models(c, cfg, frame_grid(d.samples));
  const SceneAnalysis a = analyze_scene(s, m, cfg, cfg.threads, false);
  const fs::path out = out_dir(c);
  const std::size_t M = a.glimpses.size();
  const double n2 = static_cast<double>(m.pdn.config.grid * m.pdn.config.grid);
  Tensor prda({m.pdn.config.grid, m.pdn.config.grid});
  std::vector<Tensor> spms;
  if (M > 0) prda = pdn_forward(a.masked, a.plans, m.lib, m.pdn, cfg.z, cfg.threads, &spms);
  else log::info(s.id + ": no glimpses, PRDA is all zero");
  export_map(out / "prda", prda);
  json spm_files = json::array();
  for (std::size_t k = 0; k < spms.size(); ++k) {
    const std::string name = "spm_" + std::to_string(k / cfg.K + 1) + "_" + std::to_string(k % cfg.K + 1);
    export_map(out / name, spms[k]);
    spm_files.push_back(name);
  }
  double sum = 0.0;
  for (double v : prda.values()) sum += v;
  json plans = json::array();
  for (const auto& p : a.plans) plans.push_back(plan_json(p));
  write_json(out / "prda.json", {{"sample", s.id},
                                 {"glimpses", M},
                                 {"K", cfg.K},
                                 {"z", cfg.z},
                                 {"sum", sum},
                                 {"expected_sum", static_cast<double>(M * cfg.K) * n2 / cfg.z},
                                 {"plans", plans},
                                 {"spms", spm_files}});
}

void cmd_train(const RunConfig& c) {
  const ErConfig cfg = er_config(c);
  const Dataset d = need_data(c);
  const TrainResult r = train_er(d, cfg);
  const fs::path out = out_dir(c);
  save_models(out, r.models);
  write_lines(out / "metrics.jsonl", r.metrics);
  write_json(out / "split.json", {{"train", r.split.train}, {"test", r.split.test}});
  write_json(out / "config.json", run_config_to_json(c));
  json ap = json::object();
  for (std::size_t k = 0; k < d.classes.size(); ++k)
    ap[d.classes[k]] = r.test_map.ap[k] ? json(*r.test_map.ap[k]) : json(nullptr);
  write_json(out / "eval.json", {{"mean_ap", r.test_map.mean}, {"ap", ap}, {"test_samples", r.split.test.size()}});
}

void cmd_eval(const RunConfig& c) {
  const ErConfig cfg = er_config(c);
  const Dataset d = need_data(c);
  const ErModels m = load_models(need_models(c));
  const Split split = split_dataset(d.samples.size(), cfg.train_fraction, cfg.seed);
  const auto analyses = analyze_samples(d.samples, split.test, m, cfg);
  std::vector<Sequence> xs;
  std::vector<std::size_t> ys;
  std::vector<std::vector<std::size_t>> sets;
  build_split(d.samples, split.test, analyses, cfg.lambda, cfg.pool, false, xs, ys, sets);
  const auto scores = predict_scores(xs, m.classifier);
  const MapResult r = evaluate_map(scores, sets, d.classes.size());
  const fs::path out = out_dir(c);
  std::vector<json> lines;
  for (std::size_t k = 0; k < scores.size(); ++k)
    lines.push_back({{"id", d.samples[split.test[k]].id}, {"labels", sets[k]}, {"scores", scores[k]}});
  write_lines(out / "scores.jsonl", lines);
  json ap = json::object();
  for (std::size_t k = 0; k < d.classes.size(); ++k) ap[d.classes[k]] = r.ap[k] ? json(*r.ap[k]) : json(nullptr);
  write_json(out / "eval.json", {{"mean_ap", r.mean}, {"ap", ap}, {"test_samples", split.test.size()}});
}

void cmd_export_map(const RunConfig& c) {
  const ErConfig cfg = er_config(c);
  const Dataset d = need_data(c);
  const EventSample& s = d.samples[sample_index(d, c.sample)];
  Tensor map;
  if (c.map == "bua") {
    map = batch_bua(s, cfg);
  } else if (c.map == "prda" || c.map == "attention") {
    const ErModels m = perception_models(c, cfg, frame_grid(d.samples));
    const SceneAnalysis a = analyze_scene(s, m, cfg, cfg.threads);
    if (c.map == "attention") map = combine_attention(a.bua, a.prda, cfg.lambda);
    else map = a.prda.empty() ? Tensor({m.pdn.config.grid, m.pdn.config.grid}) : a.prda;
  } else {
    throw DataError("--map must be bua, prda or attention");
  }
  export_map(out_dir(c) / (s.id + "_" + c.map), map);
}

const std::vector<std::string> kGlimpse = {"feature", "tube", "bua_sigma", "glimpse_threshold", "min_area"};
const std::vector<std::string> kAmp = {"clusters", "distribution", "kmeans_iter", "train_fraction"};
const std::vector<std::string> kPlan = {"plan_dim", "plan_window", "plan_epochs", "plan_lr", "plan_negatives"};
const std::vector<std::string> kPdn = {"K", "z", "pdn_hidden", "pdn_kmax", "pdn_code", "pdn_filter"};
const std::vector<std::string> kDynamics = {"dynamics_epochs", "dynamics_lr", "object_size"};
const std::vector<std::string> kClassifier = {"lambda", "hidden", "pool", "epochs", "lr", "clip"};

std::vector<std::string> join(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::vector<Command> commands() {
  return {
      {"synth", "generate a synthetic event dataset into --out", {"grid", "scenes", "ratios"}, cmd_synth},
      {"features", "glimpse tube features of every sample (features.json)", join({{"data"}, kGlimpse}), cmd_features},
      {"amp-fit", "fit the AMP library on the training split (amp_library.json, plan_corpus.json)",
       join({{"data"}, kGlimpse, kAmp}), cmd_amp_fit},
      {"plan-train", "train plan embeddings from --corpus or from --data with the library in --models",
       join({{"data", "models", "corpus"}, kGlimpse, {"distribution", "train_fraction"}, kPlan}), cmd_plan_train},
      {"plan-recognize", "recognize plans for a --trace file or for every glimpse of --sample (plans.json)",
       join({{"data", "models", "sample", "trace", "K", "distribution"}, kGlimpse}), cmd_plan_recognize},
      {"prda", "PRDA and SPM maps of one sample (prda.pgm/.pdnt, prda.json)",
       join({{"data", "models", "sample", "distribution"}, kGlimpse, kPdn}), cmd_prda},
      {"train", "train the full pipeline; models, metrics.jsonl and eval.json go to --out",
       join({{"data"}, kGlimpse, kAmp, kPlan, kPdn, kDynamics, kClassifier}), cmd_train},
      {"eval", "mean AP of saved --models on the test split (eval.json, scores.jsonl)",
       join({{"data", "models", "distribution", "train_fraction", "K", "z", "lambda", "pool"}, kGlimpse}), cmd_eval},
      {"export-map", "write one attention map of --sample as PGM and PDNT",
       join({{"data", "models", "sample", "map", "distribution", "lambda"}, kGlimpse, kPdn}), cmd_export_map},
  };
}

CLI::Option* add_flag(CLI::App* app, const RunField& f, RunConfig& target) {
  const std::string name = "--" + f.key;
  void* p = f.address(target);
  switch (f.kind) {
    case RunField::Kind::U64: return app->add_option(name, *static_cast<std::uint64_t*>(p), f.help);
    case RunField::Kind::Size: return app->add_option(name, *static_cast<std::size_t*>(p), f.help);
    case RunField::Kind::Double: return app->add_option(name, *static_cast<double*>(p), f.help);
    case RunField::Kind::String: return app->add_option(name, *static_cast<std::string*>(p), f.help);
    case RunField::Kind::Doubles: return app->add_option(name, *static_cast<std::vector<double>*>(p), f.help);
  }
  return nullptr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pdn: event recognition with predictive attention"};
  app.require_subcommand(1);
  RunConfig flags;
  std::string config_path;
  struct Bound {
    CLI::App* sub;
    const Command* cmd;
    std::vector<std::pair<const RunField*, CLI::Option*>> options;
  };
  const std::vector<Command> cmds = commands();
  std::vector<Bound> bound;
  for (const auto& cmd : cmds) {
    Bound b{app.add_subcommand(cmd.name, cmd.help), &cmd, {}};
    b.sub->add_option("--config", config_path, "JSON run config; flags override its values");
    std::vector<std::string> keys = {"seed", "out", "threads"};
    keys.insert(keys.end(), cmd.keys.begin(), cmd.keys.end());
    for (const auto& k : keys) {
      const RunField& f = run_field(k);
      b.options.emplace_back(&f, add_flag(b.sub, f, flags));
    }
    bound.push_back(std::move(b));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    for (const auto& b : bound) {
      if (!b.sub->parsed()) continue;
      RunConfig cfg;
      if (!config_path.empty()) cfg = run_config_from_json(read_json(config_path));
      for (const auto& [field, opt] : b.options)
        if (opt->count() > 0) field->copy(cfg, flags);
      b.cmd->run(cfg);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
