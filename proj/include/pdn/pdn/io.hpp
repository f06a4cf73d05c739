#pragma once

#include <filesystem>
#include <string>

#include "pdn/amp/io.hpp"
#include "pdn/features/frame.hpp"
#include "pdn/pdn/network.hpp"

namespace pdn {

inline json pdn_config_to_json(const PdnConfig& c) {
  return {{"grid", c.grid}, {"amp_dim", c.amp_dim}, {"hidden", c.hidden},
          {"kmax", c.kmax}, {"code", c.code},       {"filter", c.filter}};
}

inline PdnConfig pdn_config_from_json(const json& j) {
  PdnConfig c;
  c.grid = j.at("grid").get<std::size_t>();
  c.amp_dim = j.at("amp_dim").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.kmax = j.at("kmax").get<std::size_t>();
  c.code = j.at("code").get<std::size_t>();
  c.filter = j.at("filter").get<std::size_t>();
  return c;
}

/// JSON header at `path`, one <stem>.<name>.pdnt per parameter tensor.
inline void save_pdn_params(const std::filesystem::path& path, PdnParams p) {
  const std::string stem = path.stem().string();
  json files = json::object();
  for (auto& [name, t] : p.tensors()) {
    const std::string file = stem + "." + name + ".pdnt";
    save_tensor(path.parent_path() / file, *t);
    files[name] = file;
  }
  write_json(path, {{"config", pdn_config_to_json(p.config)}, {"tensors", files}});
}

inline PdnParams load_pdn_params(const std::filesystem::path& path) {
  const json j = read_json(path);
  try {
    PdnParams p = PdnParams::create(pdn_config_from_json(j.at("config")), 0);
    for (auto& [name, t] : p.tensors()) *t = load_tensor(path.parent_path() / j.at("tensors").at(name).get<std::string>());
    p.check_consistent();
    return p;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const ShapeError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

/// Writes <base>.pgm (16-bit, max-scaled) and <base>.pdnt (exact values).
inline void export_map(const std::filesystem::path& base, const Tensor& map) {
  auto pgm = base, raw = base;
  pgm += ".pgm";
  raw += ".pdnt";
  write_pgm16(pgm, map);
  save_tensor(raw, map);
}

}  // namespace pdn
