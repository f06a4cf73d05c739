#pragma once

#include <filesystem>

#include "pdn/amp/io.hpp"
#include "pdn/planrec/affinity.hpp"

namespace pdn {

/// JSON header at `path`; embeddings in <stem>.input.pdnt and <stem>.output.pdnt.
inline void save_affinity(const std::filesystem::path& path, const AffinityModel& m) {
  const std::string stem = path.stem().string();
  const auto dir = path.parent_path();
  save_tensor(dir / (stem + ".input.pdnt"), m.input);
  save_tensor(dir / (stem + ".output.pdnt"), m.output);
  write_json(path, json{{"vocab", m.vocab()},
                        {"dim", m.dim()},
                        {"window", m.window},
                        {"seed", m.seed},
                        {"input", stem + ".input.pdnt"},
                        {"output", stem + ".output.pdnt"}});
}

inline AffinityModel load_affinity(const std::filesystem::path& path) {
  const json j = read_json(path);
  AffinityModel m;
  try {
    m.window = j.at("window").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.input = load_tensor(path.parent_path() / j.at("input").get<std::string>());
    m.output = load_tensor(path.parent_path() / j.at("output").get<std::string>());
    m.check_consistent();
    if (m.vocab() != j.at("vocab").get<std::size_t>() || m.dim() != j.at("dim").get<std::size_t>()) {
      throw DataError("embedding matrices do not match header");
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const ShapeError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return m;
}

}  // namespace pdn
