#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "pdn/features/frame.hpp"
#include "pdn/numerics/rng.hpp"
#include "pdn/pdn/masked_image.hpp"

namespace pdn {

inline constexpr std::array<const char*, 4> kEventClasses = {"approach", "meet", "loiter", "disperse"};

struct SceneConfig {
  std::size_t grid = 64;
  std::size_t scenes = 200;
  std::array<double, 4> ratios{1.0, 1.0, 1.0, 1.0};  // per event class
  std::size_t batch = 4;
  std::size_t future = 5;  // frames emitted after the batch
  std::size_t stride = 6;  // raw frames per emitted frame
  std::size_t agent_size = 5;
  double speed_min = 0.15;  // pixels per raw frame
  double speed_max = 0.20;
  double approach_speed_min = 0.25;  // >= 1.5 px per emitted frame keeps rounded distances decreasing
  double approach_speed_max = 0.30;
  double background = 0.0;
  double noise = 0.0;  // static background texture amplitude

  void validate() const {
    if (grid < 48) throw DataError("scene grid must be >= 48");
    if (scenes == 0) throw DataError("scene count must be positive");
    double total = 0.0;
    for (double r : ratios) {
      if (!(r >= 0.0) || !std::isfinite(r)) throw DataError("class ratios must be finite and >= 0");
      total += r;
    }
    if (!(total > 0.0)) throw DataError("class ratios must not all be zero");
    if (batch < 2) throw DataError("batch must hold at least 2 frames");
    if (future == 0 || stride == 0) throw DataError("future and stride must be positive");
    if (agent_size == 0 || agent_size % 2 == 0 || agent_size > 7) throw DataError("agent size must be odd and <= 7");
    if (!(speed_min > 0.0) || speed_max < speed_min) throw DataError("invalid speed range");
    if (!(approach_speed_min > 0.0) || approach_speed_max < approach_speed_min) {
      throw DataError("invalid approach speed range");
    }
    if (!(background >= 0.0 && background <= 0.5)) throw DataError("background must be in [0, 0.5]");
    if (!(noise >= 0.0) || noise > 0.2) throw DataError("noise must be in [0, 0.2]");
  }

  std::size_t frames() const { return batch + future; }
};

struct EventSample {
  std::string id;
  std::vector<Frame> frames;  // the observed batch
  std::vector<Frame> future;  // later frames, ground truth only
  std::size_t label = 0;
  std::vector<std::size_t> labels;  // every class present; labels[0] == label
  // Agent centre per emitted frame (batch then future), one list per agent.
  std::vector<std::vector<Pixel>> trajectories;
  std::uint64_t seed = 0;
};

/// Integer count per class: largest-remainder apportionment of `total`.
inline std::vector<std::size_t> class_counts(const std::array<double, 4>& ratios, std::size_t total) {
  double sum = 0.0;
  for (double r : ratios) sum += r;
  std::vector<std::size_t> counts(ratios.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t c = 0; c < ratios.size(); ++c) {
    const double exact = ratios[c] / sum * static_cast<double>(total);
    counts[c] = static_cast<std::size_t>(std::floor(exact));
    used += counts[c];
    rem.push_back({exact - std::floor(exact), c});
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t n = 0; used < total; ++n, ++used) ++counts[rem[n].second];
  return counts;
}

namespace detail {

struct Vec2 {
  double i = 0.0, j = 0.0;
};

inline double quantize(double v) { return static_cast<double>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)) / 255.0; }

// 8-bit agent colours; every one sums to 459 over the three channels.
inline constexpr std::array<std::array<int, 3>, 6> kPalette = {
    {{230, 204, 25}, {25, 204, 230}, {230, 25, 204}, {204, 230, 25}, {153, 153, 153}, {230, 115, 114}}};

class SceneScript {
 public:
  SceneScript(const SceneConfig& cfg, SeededRng& rng) : cfg_(cfg), rng_(rng) {
    lo_ = static_cast<double>(cfg.agent_size / 2 + 1);
    hi_ = static_cast<double>(cfg.grid) - 1.0 - lo_;
    raw_ = (cfg.frames() - 1) * cfg.stride;
  }

  /// Agent positions per raw frame, one list per agent, and the goal centre.
  std::vector<std::vector<Vec2>> run(std::size_t label, Vec2& goal) {
    goal = {std::round(rng_.uniform(10.0, n() - 11.0)), std::round(rng_.uniform(10.0, n() - 11.0))};
    switch (label) {
      case 0: return approach(goal);
      case 1: return meet();
      case 2: return loiter();
      default: return disperse();
    }
  }

 private:
  double n() const { return static_cast<double>(cfg_.grid); }
  static void give_up(std::size_t tries) {
    if (tries > 10000) throw DataError("scene layout: no valid placement found");
  }
  double speed() { return rng_.uniform(cfg_.speed_min, cfg_.speed_max); }
  bool inside(Vec2 p) const { return p.i >= lo_ && p.i <= hi_ && p.j >= lo_ && p.j <= hi_; }
  Vec2 clamp(Vec2 p) const { return {std::clamp(p.i, lo_, hi_), std::clamp(p.j, lo_, hi_)}; }

  std::vector<Vec2> straight(Vec2 start, double angle, double s) const {
    std::vector<Vec2> path;
    for (std::size_t r = 0; r <= raw_; ++r) {
      const double t = static_cast<double>(r) * s;
      path.push_back(clamp({start.i + t * std::sin(angle), start.j + t * std::cos(angle)}));
    }
    return path;
  }

  // One agent walks straight at the goal and stops short of it.
  std::vector<std::vector<Vec2>> approach(Vec2 goal) {
    const double travel = static_cast<double>(raw_);
    for (std::size_t tries = 0;; ++tries) {
      give_up(tries);
      const double angle = rng_.uniform(0.0, 2.0 * std::numbers::pi);
      const double d = rng_.uniform(0.4, 0.53) * n();
      const Vec2 start{goal.i + d * std::sin(angle), goal.j + d * std::cos(angle)};
      if (!inside(start)) continue;
      const double s = std::min(rng_.uniform(cfg_.approach_speed_min, cfg_.approach_speed_max), (d - 6.0) / travel);
      return {straight(start, angle + std::numbers::pi, s)};
    }
  }

  // Two agents head for a common point from opposite sides.
  std::vector<std::vector<Vec2>> meet() {
    const double travel = static_cast<double>(raw_);
    for (std::size_t tries = 0;; ++tries) {
      give_up(tries);
      const Vec2 p{rng_.uniform(16.0, n() - 17.0), rng_.uniform(16.0, n() - 17.0)};
      const double angle = rng_.uniform(0.0, 2.0 * std::numbers::pi);
      const double d = rng_.uniform(0.25, 0.3) * n();
      const Vec2 a{p.i + d * std::sin(angle), p.j + d * std::cos(angle)};
      const Vec2 b{p.i - d * std::sin(angle), p.j - d * std::cos(angle)};
      if (!inside(a) || !inside(b)) continue;
      const double s = std::min(speed(), (d - 5.0) / travel);
      return {straight(a, angle + std::numbers::pi, s), straight(b, angle, s)};
    }
  }

  // One or two agents wander around fixed spots.
  std::vector<std::vector<Vec2>> loiter() {
    const std::size_t agents = 1 + rng_.index(2);
    std::vector<Vec2> anchors;
    for (std::size_t tries = 0; anchors.size() < agents; ++tries) {
      give_up(tries);
      const Vec2 a{rng_.uniform(12.0, n() - 13.0), rng_.uniform(12.0, n() - 13.0)};
      bool far = true;
      for (const auto& o : anchors) far = far && std::hypot(a.i - o.i, a.j - o.j) >= 16.0;
      if (far) anchors.push_back(a);
    }
    std::vector<std::vector<Vec2>> out;
    for (const auto& anchor : anchors) {
      const double s = speed();
      double heading = rng_.uniform(0.0, 2.0 * std::numbers::pi);
      Vec2 p{anchor.i + rng_.uniform(-2.0, 2.0), anchor.j + rng_.uniform(-2.0, 2.0)};
      std::vector<Vec2> path{clamp(p)};
      for (std::size_t r = 1; r <= raw_; ++r) {
        if (std::hypot(p.i - anchor.i, p.j - anchor.j) > 6.0) {
          heading = std::atan2(anchor.i - p.i, anchor.j - p.j) + rng_.uniform(-0.5, 0.5);
        } else {
          heading += rng_.uniform(-0.35, 0.35);
        }
        p = clamp({p.i + s * std::sin(heading), p.j + s * std::cos(heading)});
        path.push_back(p);
      }
      out.push_back(std::move(path));
    }
    return out;
  }

  // Two or three agents leave a common spot in spread-out directions.
  std::vector<std::vector<Vec2>> disperse() {
    const std::size_t agents = 2 + rng_.index(2);
    const Vec2 c{rng_.uniform(20.0, n() - 21.0), rng_.uniform(20.0, n() - 21.0)};
    const double base = rng_.uniform(0.0, 2.0 * std::numbers::pi);
    std::vector<std::vector<Vec2>> out;
    for (std::size_t a = 0; a < agents; ++a) {
      const double angle = base + 2.0 * std::numbers::pi * static_cast<double>(a) / static_cast<double>(agents) +
                           rng_.uniform(-0.3, 0.3);
      const Vec2 start{c.i + 6.0 * std::sin(angle), c.j + 6.0 * std::cos(angle)};
      out.push_back(straight(start, angle, speed()));
    }
    return out;
  }

  const SceneConfig& cfg_;
  SeededRng& rng_;
  double lo_ = 0.0, hi_ = 0.0;
  std::size_t raw_ = 0;
};

inline Pixel to_pixel(Vec2 p) {
  return {static_cast<std::size_t>(std::lround(p.i)), static_cast<std::size_t>(std::lround(p.j))};
}

}  // namespace detail

/// One synthetic scene of the given class. Values are multiples of 1/255 so
/// a PPM round trip is lossless.
inline EventSample synth_scene(const SceneConfig& cfg, std::size_t label, std::uint64_t seed) {
  cfg.validate();
  if (label >= kEventClasses.size()) throw DataError("synth_scene: unknown class " + std::to_string(label));
  SeededRng rng(seed);
  const std::size_t n = cfg.grid;

  Frame background(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t c = 0; c < 3; ++c) {
        background.at(i, j, c) = cfg.background + (cfg.noise > 0.0 ? rng.uniform(-cfg.noise, cfg.noise) : 0.0);
      }

  detail::Vec2 goal;
  detail::SceneScript script(cfg, rng);
  const auto paths = script.run(label, goal);

  // Static goal marker: a 5 x 5 grey ring.
  const auto gp = detail::to_pixel(goal);
  for (long di = -2; di <= 2; ++di)
    for (long dj = -2; dj <= 2; ++dj) {
      if (std::max(std::labs(di), std::labs(dj)) != 2) continue;
      const auto i = static_cast<std::size_t>(static_cast<long>(gp.i) + di);
      const auto j = static_cast<std::size_t>(static_cast<long>(gp.j) + dj);
      background.set_rgb(i, j, 0.35, 0.35, 0.35);
    }

  std::vector<std::size_t> colours(paths.size());
  for (auto& c : colours) c = rng.index(detail::kPalette.size());

  EventSample s;
  s.label = label;
  s.labels = {label};
  s.seed = seed;
  s.trajectories.assign(paths.size(), {});
  const long half = static_cast<long>(cfg.agent_size / 2);
  for (std::size_t e = 0; e < cfg.frames(); ++e) {
    Frame f = background;
    for (std::size_t a = 0; a < paths.size(); ++a) {
      const Pixel c = detail::to_pixel(paths[a][e * cfg.stride]);
      s.trajectories[a].push_back(c);
      const auto& rgb = detail::kPalette[colours[a]];
      for (long di = -half; di <= half; ++di)
        for (long dj = -half; dj <= half; ++dj)
          f.set_rgb(static_cast<std::size_t>(static_cast<long>(c.i) + di),
                    static_cast<std::size_t>(static_cast<long>(c.j) + dj), rgb[0] / 255.0, rgb[1] / 255.0,
                    rgb[2] / 255.0);
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t c = 0; c < 3; ++c) f.at(i, j, c) = detail::quantize(f.at(i, j, c));
    (e < cfg.batch ? s.frames : s.future).push_back(std::move(f));
  }
  return s;
}

/// `cfg.scenes` scenes with class counts fixed by the ratios, in shuffled order.
inline std::vector<EventSample> synth_generate(const SceneConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto counts = class_counts(cfg.ratios, cfg.scenes);
  std::vector<std::size_t> labels;
  for (std::size_t c = 0; c < counts.size(); ++c) labels.insert(labels.end(), counts[c], c);
  SeededRng rng(seed);
  rng.shuffle(std::span<std::size_t>(labels));
  std::vector<EventSample> out;
  out.reserve(labels.size());
  for (std::size_t k = 0; k < labels.size(); ++k) {
    EventSample s = synth_scene(cfg, labels[k], rng.fork(k + 1).next());
    char id[32];
    std::snprintf(id, sizeof id, "sample_%04zu", k);
    s.id = id;
    out.push_back(std::move(s));
  }
  return out;
}

/// Cells on the straight segments joining each agent's centres from emitted
/// frame `anchor` through `anchor + steps`.
inline std::vector<Pixel> trajectory_cells(const EventSample& s, std::size_t anchor, std::size_t steps) {
  std::vector<Pixel> cells;
  for (const auto& traj : s.trajectories) {
    if (anchor + steps >= traj.size()) throw DataError("trajectory_cells: trajectory too short");
    for (std::size_t e = anchor; e < anchor + steps; ++e) {
      const long i0 = static_cast<long>(traj[e].i), j0 = static_cast<long>(traj[e].j);
      const long i1 = static_cast<long>(traj[e + 1].i), j1 = static_cast<long>(traj[e + 1].j);
      const long len = std::max({std::labs(i1 - i0), std::labs(j1 - j0), 1L});
      for (long t = 0; t <= len; ++t) {
        const double u = static_cast<double>(t) / static_cast<double>(len);
        cells.push_back({static_cast<std::size_t>(std::lround(static_cast<double>(i0) + u * static_cast<double>(i1 - i0))),
                         static_cast<std::size_t>(std::lround(static_cast<double>(j0) + u * static_cast<double>(j1 - j0)))});
      }
    }
  }
  std::sort(cells.begin(), cells.end(), [](const Pixel& a, const Pixel& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
  cells.erase(std::unique(cells.begin(), cells.end(), [](const Pixel& a, const Pixel& b) { return a.i == b.i && a.j == b.j; }),
              cells.end());
  return cells;
}

}  // namespace pdn
