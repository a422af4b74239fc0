#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dctscene {

/// 8-bit single-channel image.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const GrayImage&) const = default;
};

inline void write_pgm(std::ostream& os, const GrayImage& img) {
  os << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!os) throw std::runtime_error("failed writing PGM");
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_pgm(os, img);
}

namespace detail {

inline int pgm_header_int(std::istream& is) {
  int c = is.get();
  for (;;) {
    while (c != EOF && std::isspace(c)) c = is.get();
    if (c != '#') break;
    while (c != EOF && c != '\n') c = is.get();
  }
  if (c == EOF || !std::isdigit(c)) throw std::runtime_error("malformed PGM header");
  int v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    if (v > (1 << 24)) throw std::runtime_error("PGM header value too large");
    c = is.get();
  }
  return v;  // the single whitespace after the value has been consumed
}

}  // namespace detail

/// Reads binary (P5) or ASCII (P2) 8-bit PGM.
inline GrayImage read_pgm(std::istream& is) {
  char magic[2];
  if (!is.read(magic, 2) || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '2')) {
    throw std::runtime_error("not a PGM image");
  }
  const int w = detail::pgm_header_int(is);
  const int h = detail::pgm_header_int(is);
  const int maxval = detail::pgm_header_int(is);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) throw std::runtime_error("unsupported PGM dimensions or depth");
  GrayImage img(w, h);
  if (magic[1] == '5') {
    if (!is.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()))) {
      throw std::runtime_error("truncated PGM data");
    }
  } else {
    for (auto& p : img.pixels) {
      int v = 0;
      if (!(is >> v)) throw std::runtime_error("truncated PGM data");
      p = static_cast<std::uint8_t>(v);
    }
  }
  return img;
}

inline GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_pgm(is);
}

}  // namespace dctscene
