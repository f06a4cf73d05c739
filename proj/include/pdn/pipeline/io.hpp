#pragma once

#include <filesystem>
#include <string>

#include "pdn/amp/io.hpp"
#include "pdn/pdn/io.hpp"
#include "pdn/pipeline/system.hpp"
#include "pdn/planrec/io.hpp"

namespace pdn {

/// JSON header with the normalization statistics, one <stem>.<name>.pdnt per tensor.
inline void save_classifier(const std::filesystem::path& path, ClassifierParams p) {
  const std::string stem = path.stem().string();
  json files = json::object();
  for (auto& [name, t] : p.tensors()) {
    const std::string file = stem + "." + name + ".pdnt";
    save_tensor(path.parent_path() / file, *t);
    files[name] = file;
  }
  write_json(path, {{"inputs", p.inputs()},
                    {"hidden", p.lstm.hidden_size},
                    {"classes", p.classes()},
                    {"mean", p.mean},
                    {"scale", p.scale},
                    {"tensors", files}});
}

inline ClassifierParams load_classifier(const std::filesystem::path& path) {
  const json j = read_json(path);
  try {
    ClassifierParams p = ClassifierParams::create(j.at("inputs").get<std::size_t>(), j.at("hidden").get<std::size_t>(),
                                                  j.at("classes").get<std::size_t>(), 0);
    p.mean = j.at("mean").get<std::vector<double>>();
    p.scale = j.at("scale").get<std::vector<double>>();
    for (auto& [name, t] : p.tensors()) *t = load_tensor(path.parent_path() / j.at("tensors").at(name).get<std::string>());
    p.check_consistent();
    return p;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const ShapeError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

namespace model_files {
inline constexpr const char* kLibrary = "amp_library.json";
inline constexpr const char* kPlan = "plan_model.json";
inline constexpr const char* kPdn = "pdn.json";
inline constexpr const char* kClassifier = "classifier.json";
}  // namespace model_files

inline void save_models(const std::filesystem::path& dir, const ErModels& m) {
  std::filesystem::create_directories(dir);
  save_library(dir / model_files::kLibrary, m.lib);
  save_affinity(dir / model_files::kPlan, m.plan);
  save_pdn_params(dir / model_files::kPdn, m.pdn);
  save_classifier(dir / model_files::kClassifier, m.classifier);
}

inline ErModels load_models(const std::filesystem::path& dir) {
  ErModels m;
  m.lib = load_library(dir / model_files::kLibrary);
  m.plan = load_affinity(dir / model_files::kPlan);
  m.pdn = load_pdn_params(dir / model_files::kPdn);
  m.classifier = load_classifier(dir / model_files::kClassifier);
  return m;
}

}  // namespace pdn
