#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pdn/numerics/tensor.hpp"

namespace pdn {

/// RGB frame with values in [0,1], stored interleaved row-major (H, W, 3).
class Frame {
 public:
  static constexpr std::size_t kMinSide = 8;

  Frame() = default;
  Frame(std::size_t height, std::size_t width, double fill = 0.0)
      : height_(height), width_(width), rgb_(height * width * 3, fill) {
    if (height < kMinSide || width < kMinSide) {
      throw ShapeError("frame must be at least 8x8, got " + std::to_string(height) + "x" +
                       std::to_string(width));
    }
  }

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }

  double& at(std::size_t i, std::size_t j, std::size_t c) { return rgb_[(i * width_ + j) * 3 + c]; }
  double at(std::size_t i, std::size_t j, std::size_t c) const {
    return rgb_[(i * width_ + j) * 3 + c];
  }

  void set_rgb(std::size_t i, std::size_t j, double r, double g, double b) {
    at(i, j, 0) = r;
    at(i, j, 1) = g;
    at(i, j, 2) = b;
  }

  /// (R+G+B)/3.
  double gray(std::size_t i, std::size_t j) const {
    const double* p = &rgb_[(i * width_ + j) * 3];
    return (p[0] + p[1] + p[2]) / 3.0;
  }

  Tensor gray_tensor() const {
    Tensor t({height_, width_});
    for (std::size_t i = 0; i < height_; ++i)
      for (std::size_t j = 0; j < width_; ++j) t(i, j) = gray(i, j);
    return t;
  }

  const std::vector<double>& data() const { return rgb_; }

  /// Clamps every channel into [0,1].
  void clamp() {
    for (double& v : rgb_) v = std::clamp(v, 0.0, 1.0);
  }

  bool same_size(const Frame& o) const { return height_ == o.height_ && width_ == o.width_; }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> rgb_;
};

struct Rect {
  std::size_t x = 0, y = 0, width = 0, height = 0;

  bool inside(const Frame& f) const {
    return width > 0 && height > 0 && x + width <= f.width() && y + height <= f.height();
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

inline Frame crop(const Frame& f, const Rect& r) {
  if (!r.inside(f)) throw ShapeError("crop rectangle outside frame");
  Frame out(r.height, r.width);
  for (std::size_t i = 0; i < r.height; ++i)
    for (std::size_t j = 0; j < r.width; ++j)
      for (std::size_t c = 0; c < 3; ++c) out.at(i, j, c) = f.at(r.y + i, r.x + j, c);
  return out;
}

// ---- Netpbm I/O -----------------------------------------------------------

namespace detail {

inline std::size_t read_pnm_int(std::istream& in) {
  int ch = in.get();
  for (;;) {
    while (ch != EOF && std::isspace(ch)) ch = in.get();
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
      continue;
    }
    break;
  }
  if (ch == EOF || !std::isdigit(ch)) throw DataError("PNM: malformed header");
  std::size_t v = 0;
  while (ch != EOF && std::isdigit(ch)) {
    v = v * 10 + static_cast<std::size_t>(ch - '0');
    ch = in.get();
  }
  // ch is the single whitespace that terminates the header field.
  return v;
}

}  // namespace detail

/// Reads a binary PPM (P6) with maxval up to 65535.
inline Frame read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[2];
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '6') throw DataError(path.string() + ": not a P6 PPM");
  const std::size_t w = detail::read_pnm_int(in);
  const std::size_t h = detail::read_pnm_int(in);
  const std::size_t maxval = detail::read_pnm_int(in);
  if (maxval == 0 || maxval > 65535) throw DataError(path.string() + ": bad maxval");
  Frame f(h, w);
  const bool wide = maxval > 255;
  std::vector<unsigned char> buf(h * w * 3 * (wide ? 2 : 1));
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size()) throw DataError(path.string() + ": truncated");
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j)
      for (std::size_t c = 0; c < 3; ++c) {
        const std::size_t k = (i * w + j) * 3 + c;
        const double v = wide ? (buf[2 * k] << 8 | buf[2 * k + 1]) : buf[k];
        f.at(i, j, c) = v / static_cast<double>(maxval);
      }
  return f;
}

/// Writes an 8-bit binary PPM (P6).
inline void write_ppm(const std::filesystem::path& path, const Frame& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "P6\n" << f.width() << ' ' << f.height() << "\n255\n";
  std::vector<unsigned char> buf(f.data().size());
  for (std::size_t k = 0; k < buf.size(); ++k) {
    buf[k] = static_cast<unsigned char>(std::lround(std::clamp(f.data()[k], 0.0, 1.0) * 255.0));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

/// Writes a 2-D tensor as a 16-bit PGM (P5), scaled so the maximum maps to
/// 65535. Negative values clamp to 0; an all-zero map stays black.
inline void write_pgm16(const std::filesystem::path& path, const Tensor& map) {
  if (map.rank() != 2) throw ShapeError("write_pgm16 expects a 2-D tensor");
  map.check_finite("write_pgm16");
  double mx = 0.0;
  for (double v : map.values()) mx = std::max(mx, v);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "P5\n" << map.dim(1) << ' ' << map.dim(0) << "\n65535\n";
  for (double v : map.values()) {
    const auto q = mx > 0.0 ? static_cast<std::uint16_t>(std::lround(std::max(v, 0.0) / mx * 65535.0))
                            : std::uint16_t{0};
    const char bytes[2] = {static_cast<char>(q >> 8), static_cast<char>(q & 0xFF)};
    out.write(bytes, 2);
  }
}

/// Reads a P5 PGM (8 or 16 bit) into raw integer sample values.
inline Tensor read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[2];
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') throw DataError(path.string() + ": not a P5 PGM");
  const std::size_t w = detail::read_pnm_int(in);
  const std::size_t h = detail::read_pnm_int(in);
  const std::size_t maxval = detail::read_pnm_int(in);
  if (maxval == 0 || maxval > 65535) throw DataError(path.string() + ": bad maxval");
  const bool wide = maxval > 255;
  std::vector<unsigned char> buf(h * w * (wide ? 2 : 1));
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size()) throw DataError(path.string() + ": truncated");
  Tensor t({h, w});
  for (std::size_t k = 0; k < h * w; ++k) t[k] = wide ? (buf[2 * k] << 8 | buf[2 * k + 1]) : buf[k];
  return t;
}

}  // namespace pdn
