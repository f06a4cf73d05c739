#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "pdn/amp/library.hpp"
#include "pdn/numerics/tensor_io.hpp"

namespace pdn {

using json = nlohmann::json;

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

/// Library header `path` (JSON) plus its centroid matrix next to it
/// (same stem, .pdnt).
inline void save_library(const std::filesystem::path& path, const AmpLibrary& lib) {
  auto matrix = path;
  matrix.replace_extension(".pdnt");
  save_tensor(matrix, lib.centroids);
  json j{{"clusters", lib.size()},
         {"feature_length", lib.feature_length()},
         {"kind", std::string(to_string(lib.kind))},
         {"seed", lib.seed},
         {"distribution_size", lib.distribution_size},
         {"centroids", matrix.filename().string()}};
  write_json(path, j);
}

inline AmpLibrary load_library(const std::filesystem::path& path) {
  const json j = read_json(path);
  AmpLibrary lib;
  try {
    lib.kind = parse_feature_kind(j.at("kind").get<std::string>());
    lib.seed = j.at("seed").get<std::uint64_t>();
    lib.distribution_size = j.at("distribution_size").get<std::size_t>();
    lib.centroids = load_tensor(path.parent_path() / j.at("centroids").get<std::string>());
    if (lib.centroids.rank() != 2 || lib.size() != j.at("clusters").get<std::size_t>()) {
      throw DataError("centroid matrix does not match header");
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (lib.size() < 2) throw DataError(path.string() + ": library needs at least 2 clusters");
  return lib;
}

inline json trace_to_json(const PlanTrace& trace) {
  json out = json::array();
  for (const auto& d : trace) {
    json dist = json::array();
    for (const auto& e : d.entries) dist.push_back(json::array({e.index, e.probability}));
    out.push_back(std::move(dist));
  }
  return out;
}

inline PlanTrace trace_from_json(const json& j) {
  PlanTrace trace;
  try {
    for (const auto& dist : j) {
      AmpDistribution d;
      for (const auto& pair : dist) {
        d.entries.push_back({pair.at(0).get<std::size_t>(), pair.at(1).get<double>()});
        if (!(d.entries.back().probability > 0.0)) throw DataError("non-positive probability in trace");
      }
      if (d.entries.empty()) throw DataError("empty distribution in trace");
      trace.push_back(std::move(d));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("plan trace: ") + e.what());
  }
  return trace;
}

inline json corpus_to_json(const std::vector<PlanTrace>& corpus) {
  json out = json::array();
  for (const auto& t : corpus) out.push_back(trace_to_json(t));
  return out;
}

inline std::vector<PlanTrace> corpus_from_json(const json& j) {
  std::vector<PlanTrace> corpus;
  for (const auto& t : j) corpus.push_back(trace_from_json(t));
  return corpus;
}

}  // namespace pdn
