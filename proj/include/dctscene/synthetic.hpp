#pragma once

// Synthetic surveillance-like sequences with exact ground truth.
//
// A static textured background is crossed by rectangles with a random cell
// texture that move, bounce off the frame edges, pause, and sometimes
// vanish. A moving object redraws its texture every frame, like an
// articulated body; a paused one keeps it. Every frame gets per-pixel
// sensor noise and occasional flat luma offsets on whole blocks.
// Ground truth per frame: object mask, object boxes, and per-block content
// labels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dctscene/corpus_io.hpp"
#include "dctscene/evaluation.hpp"
#include "dctscene/features.hpp"
#include "dctscene/jpeg_decoder.hpp"
#include "dctscene/jpeg_encoder.hpp"
#include "dctscene/pgm.hpp"
#include "dctscene/training.hpp"

namespace dctscene {

struct SyntheticSpec {
  int width = 320;
  int height = 240;
  int frames = 200;
  std::uint64_t seed = 1;
  int quiet_frames = 60;  // frames before the first object appears
  int min_objects = 2;
  int max_objects = 4;
  int min_size = 24;
  int max_size = 72;
  double min_speed = 1.5;  // pixels per frame
  double max_speed = 4.0;
  double pause_probability = 0.6;
  int max_pause = 30;  // frames
  double vanish_probability = 0.3;
  double sensor_noise = 3.0;  // uniform amplitude, grey levels
  double block_noise_probability = 0.004;
  int block_noise_amplitude = 40;
  bool articulated = true;  // moving objects change texture every frame; paused ones keep it
  EncodeOptions encode{.subsampling = Subsampling::s444};
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Uniform [0, 1) from the top 53 bits; independent of the library's
/// distribution implementations.
inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit(rng); }
inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(unit(rng) * (hi - lo + 1));
}

inline std::uint8_t clamp_u8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 255l)); }

}  // namespace detail

class SyntheticSequence {
 public:
  struct Object {
    int id = 0;
    int w = 0, h = 0;
    double color[3]{};
    int cell = 4;                  // texture cell size, pixels
    double amplitude = 30;         // texture luma offset range
    std::uint64_t texture_seed = 0;
    int enter = 0;
    int leave = 0;                 // first frame without the object
    std::vector<int> xs, ys;       // integer position per frame in [enter, leave)
    std::vector<int> phases;       // texture variant per frame
  };

  explicit SyntheticSequence(const SyntheticSpec& spec) : spec_(spec) {
    if (spec.width < 8 || spec.height < 8 || spec.frames < 1) throw std::invalid_argument("synthetic: bad dimensions");
    std::mt19937_64 rng(detail::splitmix64(spec.seed));
    build_background(rng);
    const int count = detail::uniform_int(rng, spec.min_objects, spec.max_objects);
    for (int k = 0; k < count; ++k) objects_.push_back(make_object(rng, k + 1));
  }

  const SyntheticSpec& spec() const noexcept { return spec_; }
  int frame_count() const noexcept { return spec_.frames; }
  int width_blocks() const noexcept { return (spec_.width + 7) / 8; }
  int height_blocks() const noexcept { return (spec_.height + 7) / 8; }
  const std::vector<Object>& objects() const noexcept { return objects_; }

  bool visible(const Object& o, int frame) const noexcept { return frame >= o.enter && frame < o.leave; }

  /// Frame content before noise.
  ColorImage render_clean(int frame) const {
    ColorImage img(spec_.width, spec_.height, 3);
    img.data = background_;
    for (const Object& o : objects_) {
      if (!visible(o, frame)) continue;
      const int ox = o.xs[frame - o.enter], oy = o.ys[frame - o.enter];
      for (int y = std::max(0, oy); y < std::min(spec_.height, oy + o.h); ++y) {
        for (int x = std::max(0, ox); x < std::min(spec_.width, ox + o.w); ++x) {
          const double s = texture(o, o.phases[frame - o.enter], (x - ox) / o.cell, (y - oy) / o.cell);
          std::uint8_t* p = img.pixel(x, y);
          for (int c = 0; c < 3; ++c) p[c] = detail::clamp_u8(o.color[c] + s);
        }
      }
    }
    return img;
  }

  /// Blocks that get a flat luma offset in `frame`, with the offset.
  std::vector<std::pair<std::size_t, double>> block_noise(int frame) const {
    std::vector<std::pair<std::size_t, double>> out;
    std::mt19937_64 rng(frame_seed(frame, 0x5A5A5A5Aull));
    for (std::size_t b = 0; b < static_cast<std::size_t>(width_blocks() * height_blocks()); ++b) {
      if (detail::unit(rng) >= spec_.block_noise_probability) continue;
      out.emplace_back(b, detail::unit(rng) < 0.5 ? -spec_.block_noise_amplitude : spec_.block_noise_amplitude);
    }
    return out;
  }

  /// Frame content with sensor and block noise.
  ColorImage render(int frame) const {
    ColorImage img = render_clean(frame);
    std::mt19937_64 rng(frame_seed(frame, 0xA5A5A5A5ull));
    const double a = spec_.sensor_noise;
    if (a > 0) {
      for (auto& v : img.data) v = detail::clamp_u8(v + detail::uniform(rng, -a, a));
    }
    for (const auto& [b, off] : block_noise(frame)) {
      const int bx = static_cast<int>(b) % width_blocks(), by = static_cast<int>(b) / width_blocks();
      for (int y = by * 8; y < std::min(spec_.height, by * 8 + 8); ++y) {
        for (int x = bx * 8; x < std::min(spec_.width, bx * 8 + 8); ++x) {
          std::uint8_t* p = img.pixel(x, y);
          for (int c = 0; c < 3; ++c) p[c] = detail::clamp_u8(p[c] + off);
        }
      }
    }
    return img;
  }

  std::vector<std::uint8_t> jpeg(int frame) const { return encode_jpeg(render(frame), spec_.encode); }

  std::vector<GtBox> boxes(int frame) const {
    std::vector<GtBox> out;
    for (const Object& o : objects_) {
      if (!visible(o, frame)) continue;
      const int ox = o.xs[frame - o.enter], oy = o.ys[frame - o.enter];
      const int x0 = std::max(0, ox), y0 = std::max(0, oy);
      const int x1 = std::min(spec_.width, ox + o.w), y1 = std::min(spec_.height, oy + o.h);
      if (x1 > x0 && y1 > y0) out.push_back({o.id, x0, y0, x1 - x0, y1 - y0});
    }
    return out;
  }

  GrayImage mask(int frame) const {
    GrayImage m(spec_.width, spec_.height, 0);
    for (const GtBox& b : boxes(frame)) {
      for (int y = b.y; y < b.y + b.h; ++y) {
        for (int x = b.x; x < b.x + b.w; ++x) m.at(x, y) = 255;
      }
    }
    return m;
  }

  /// Content label per block. A block's features depend on its own pixels
  /// and, through subsampled chroma, on the surrounding chroma footprint.
  /// The label hashes the block position with every object overlapping
  /// that footprint (identity, texture phase, offset), so sensor noise never
  /// changes a label while any change of what covers the block does. A block
  /// hit by block noise gets a label of its own for that frame.
  LabelGrid labels(int frame) const {
    const auto [fw, fh] = chroma_footprint();
    LabelGrid g(width_blocks(), height_blocks(), 0);
    for (int by = 0; by < height_blocks(); ++by) {
      for (int bx = 0; bx < width_blocks(); ++bx) {
        const int rx = bx * 8 / fw * fw, ry = by * 8 / fh * fh;
        std::uint64_t h = detail::splitmix64(0x243F6A8885A308D3ull ^ static_cast<std::uint64_t>(by * width_blocks() + bx));
        for (const Object& o : objects_) {
          if (!visible(o, frame)) continue;
          const int ox = o.xs[frame - o.enter], oy = o.ys[frame - o.enter];
          if (ox >= rx + fw || oy >= ry + fh || ox + o.w <= rx || oy + o.h <= ry) continue;
          h = detail::splitmix64(h ^ static_cast<std::uint64_t>(o.id));
          h = detail::splitmix64(h ^ static_cast<std::uint64_t>(o.phases[frame - o.enter]));
          h = detail::splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(ox - rx)));
          h = detail::splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(oy - ry)));
        }
        g(bx, by) = h;
      }
    }
    for (const auto& [b, off] : block_noise(frame)) {
      g[b] = detail::splitmix64(g[b] ^ frame_seed(frame, 0x3C3C3C3Cull));
    }
    return g;
  }

  FeatureGrid features(int frame) const { return extract_features(decode_jpeg_dct(jpeg(frame))); }

  /// Writes frames, labels and ground truth in the corpus layout.
  void write(const std::filesystem::path& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "frames");
    fs::create_directories(dir / "labels");
    fs::create_directories(dir / "gt" / "masks");
    std::ofstream boxes_out(dir / "gt" / "boxes.txt");
    boxes_out << "# frame id x y w h\n";
    for (int f = 0; f < spec_.frames; ++f) {
      const std::string stem = frame_file_stem(static_cast<std::size_t>(f));
      const std::vector<std::uint8_t> bytes = jpeg(f);
      std::ofstream(dir / "frames" / (stem + ".jpg"), std::ios::binary)
          .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
      std::ofstream ls(dir / "labels" / (stem + ".txt"));
      write_label_grid(ls, labels(f));
      write_pgm(dir / "gt" / "masks" / (stem + ".pgm"), mask(f));
      write_gt_boxes(boxes_out, static_cast<FrameIndex>(f), boxes(f));
    }
  }

 private:
  std::uint64_t frame_seed(int frame, std::uint64_t salt) const {
    return detail::splitmix64(spec_.seed ^ (salt + static_cast<std::uint64_t>(frame) * 0x100000001B3ull));
  }

  /// Pixel extent of the area feeding one block's chroma DC.
  std::pair<int, int> chroma_footprint() const {
    switch (spec_.encode.subsampling) {
      case Subsampling::s444: return {8, 8};
      case Subsampling::s422: return {16, 8};
      case Subsampling::s420: return {16, 16};
      case Subsampling::s440: return {8, 16};
    }
    return {16, 16};
  }

  void build_background(std::mt19937_64& rng) {
    background_.assign(static_cast<std::size_t>(spec_.width) * spec_.height * 3, 0);
    double base[3], fx[3], fy[3], ph[3];
    for (int c = 0; c < 3; ++c) {
      base[c] = detail::uniform(rng, 70, 150);
      fx[c] = detail::uniform(rng, 0.01, 0.06);
      fy[c] = detail::uniform(rng, 0.01, 0.06);
      ph[c] = detail::uniform(rng, 0, 6.28);
    }
    for (int y = 0; y < spec_.height; ++y) {
      for (int x = 0; x < spec_.width; ++x) {
        const double grain = detail::uniform(rng, -12, 12);
        for (int c = 0; c < 3; ++c) {
          const double v = base[c] + 25 * std::sin(fx[c] * x + ph[c]) * std::cos(fy[c] * y) + grain;
          background_[(static_cast<std::size_t>(y) * spec_.width + x) * 3 + c] = detail::clamp_u8(v);
        }
      }
    }
  }

  static double texture(const Object& o, int phase, int cx, int cy) {
    const std::uint64_t h = detail::splitmix64(o.texture_seed ^ detail::splitmix64(
        (static_cast<std::uint64_t>(phase) << 40) ^ (static_cast<std::uint64_t>(cy) << 20) ^ static_cast<std::uint64_t>(cx)));
    return o.amplitude * (static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0);
  }

  Object make_object(std::mt19937_64& rng, int id) const {
    Object o;
    o.id = id;
    o.w = detail::uniform_int(rng, spec_.min_size, std::min(spec_.max_size, spec_.width));
    o.h = detail::uniform_int(rng, spec_.min_size, std::min(spec_.max_size, spec_.height));
    // Saturated colours keep objects distinguishable from the muted background.
    const int strong = detail::uniform_int(rng, 0, 2);
    for (int c = 0; c < 3; ++c) o.color[c] = c == strong ? detail::uniform(rng, 190, 235) : detail::uniform(rng, 20, 70);
    o.cell = detail::uniform_int(rng, 3, 6);
    o.amplitude = detail::uniform(rng, 20, 40);
    o.texture_seed = rng();

    const int span = std::max(1, spec_.frames - spec_.quiet_frames);
    o.enter = std::min(spec_.frames, spec_.quiet_frames + detail::uniform_int(rng, 0, span / 3));
    o.leave = spec_.frames;
    if (detail::unit(rng) < spec_.vanish_probability) {
      o.leave = std::min(spec_.frames, o.enter + detail::uniform_int(rng, span / 3, std::max(span / 3, span - 10)));
    }
    double x = detail::uniform(rng, 0, spec_.width - o.w);
    double y = detail::uniform(rng, 0, spec_.height - o.h);
    const double speed = detail::uniform(rng, spec_.min_speed, spec_.max_speed);
    const double dir = detail::uniform(rng, 0, 6.283185307179586);
    double vx = speed * std::cos(dir), vy = speed * std::sin(dir);
    int pause_start = -1, pause_len = 0;
    if (detail::unit(rng) < spec_.pause_probability) {
      pause_start = o.enter + detail::uniform_int(rng, 5, std::max(5, (o.leave - o.enter) / 2));
      pause_len = detail::uniform_int(rng, 5, std::max(5, spec_.max_pause));
    }
    int phase = o.enter;
    for (int f = o.enter; f < o.leave; ++f) {
      const bool paused = f >= pause_start && f < pause_start + pause_len;
      if (!paused && spec_.articulated) phase = f;
      o.xs.push_back(static_cast<int>(std::lround(x)));
      o.ys.push_back(static_cast<int>(std::lround(y)));
      o.phases.push_back(phase);
      if (paused) continue;
      x += vx;
      y += vy;
      if (x < 0) { x = -x; vx = -vx; }
      if (y < 0) { y = -y; vy = -vy; }
      if (x > spec_.width - o.w) { x = 2.0 * (spec_.width - o.w) - x; vx = -vx; }
      if (y > spec_.height - o.h) { y = 2.0 * (spec_.height - o.h) - y; vy = -vy; }
    }
    return o;
  }

  SyntheticSpec spec_;
  std::vector<std::uint8_t> background_;
  std::vector<Object> objects_;
};

/// Sequences generated on the fly for training.
class SyntheticCorpus : public TrainingCorpus {
 public:
  explicit SyntheticCorpus(std::vector<SyntheticSpec> specs) {
    for (const SyntheticSpec& s : specs) sequences_.emplace_back(s);
  }

  std::size_t sequence_count() const override { return sequences_.size(); }
  const SyntheticSequence& sequence(std::size_t i) const { return sequences_.at(i); }

  void replay(std::size_t s, const FrameVisitor& visit) const override {
    const SyntheticSequence& seq = sequences_.at(s);
    for (int f = 0; f < seq.frame_count(); ++f) visit(seq.features(f), seq.labels(f));
  }

 private:
  std::vector<SyntheticSequence> sequences_;
};

/// `count` sequence specs derived from one base spec with seeds base.seed + i.
inline std::vector<SyntheticSpec> synthetic_specs(const SyntheticSpec& base, int count) {
  std::vector<SyntheticSpec> out;
  for (int i = 0; i < count; ++i) {
    SyntheticSpec s = base;
    s.seed = base.seed + static_cast<std::uint64_t>(i);
    out.push_back(s);
  }
  return out;
}

}  // namespace dctscene
