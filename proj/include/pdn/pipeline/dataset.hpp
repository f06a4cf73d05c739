#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "pdn/amp/io.hpp"
#include "pdn/pipeline/synth.hpp"

namespace pdn {

struct Dataset {
  std::vector<std::string> classes;
  std::vector<EventSample> samples;
};

inline Dataset make_synthetic_dataset(const SceneConfig& cfg, std::uint64_t seed) {
  Dataset d;
  for (const char* c : kEventClasses) d.classes.emplace_back(c);
  d.samples = synth_generate(cfg, seed);
  return d;
}

/// Layout: <dir>/index.json lists classes and sample ids; each sample lives
/// in <dir>/<id>/ with frame_XX.ppm files and manifest.json.
inline void save_dataset(const std::filesystem::path& dir, const Dataset& d) {
  std::filesystem::create_directories(dir);
  json ids = json::array();
  for (const auto& s : d.samples) {
    const auto sdir = dir / s.id;
    std::filesystem::create_directories(sdir);
    json frames = json::array();
    std::size_t e = 0;
    for (const auto* list : {&s.frames, &s.future})
      for (const auto& f : *list) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%02zu.ppm", e++);
        write_ppm(sdir / name, f);
        frames.push_back(name);
      }
    json labels = json::array();
    for (std::size_t l : s.labels) labels.push_back(d.classes.at(l));
    json traj = json::array();
    for (const auto& t : s.trajectories) {
      json pts = json::array();
      for (const auto& p : t) pts.push_back({p.i, p.j});
      traj.push_back(pts);
    }
    write_json(sdir / "manifest.json", {{"id", s.id},
                                        {"labels", labels},
                                        {"seed", s.seed},
                                        {"batch", s.frames.size()},
                                        {"frames", frames},
                                        {"trajectories", traj}});
    ids.push_back(s.id);
  }
  write_json(dir / "index.json", {{"classes", d.classes}, {"samples", ids}});
}

/// Also accepts hand-made folders of pre-extracted frames: `trajectories`
/// and `seed` are optional, `batch` defaults to 4.
inline Dataset load_dataset(const std::filesystem::path& dir) {
  const json index = read_json(dir / "index.json");
  Dataset d;
  try {
    d.classes = index.at("classes").get<std::vector<std::string>>();
    if (d.classes.empty()) throw DataError("no classes");
    for (const auto& id : index.at("samples")) {
      const auto sdir = dir / id.get<std::string>();
      const json m = read_json(sdir / "manifest.json");
      EventSample s;
      s.id = id.get<std::string>();
      s.seed = m.value("seed", std::uint64_t{0});
      for (const auto& name : m.at("labels")) {
        const auto it = std::find(d.classes.begin(), d.classes.end(), name.get<std::string>());
        if (it == d.classes.end()) throw DataError(s.id + ": unknown label " + name.get<std::string>());
        s.labels.push_back(static_cast<std::size_t>(it - d.classes.begin()));
      }
      if (s.labels.empty()) throw DataError(s.id + ": no labels");
      s.label = s.labels[0];
      const std::size_t batch = m.value("batch", std::size_t{4});
      const auto frames = m.at("frames").get<std::vector<std::string>>();
      if (frames.size() < batch || batch < 2) throw DataError(s.id + ": fewer frames than the batch");
      for (std::size_t e = 0; e < frames.size(); ++e) {
        Frame f = read_ppm(sdir / frames[e]);
        (e < batch ? s.frames : s.future).push_back(std::move(f));
      }
      for (const auto& f : s.frames)
        if (!f.same_size(s.frames[0])) throw DataError(s.id + ": frame sizes differ");
      if (m.contains("trajectories")) {
        for (const auto& t : m.at("trajectories")) {
          std::vector<Pixel> pts;
          for (const auto& p : t) pts.push_back({p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>()});
          s.trajectories.push_back(std::move(pts));
        }
      }
      d.samples.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw DataError((dir / "index.json").string() + ": " + e.what());
  }
  return d;
}

/// One single-label copy per label of a multi-label sample.
inline std::vector<EventSample> duplicate_multilabel(const std::vector<EventSample>& samples) {
  std::vector<EventSample> out;
  for (const auto& s : samples) {
    if (s.labels.size() <= 1) {
      out.push_back(s);
      continue;
    }
    for (std::size_t l : s.labels) {
      EventSample copy = s;
      copy.label = l;
      copy.labels = {l};
      out.push_back(std::move(copy));
    }
  }
  return out;
}

}  // namespace pdn
