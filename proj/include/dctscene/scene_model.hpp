#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dctscene/decision.hpp"
#include "dctscene/features.hpp"

namespace dctscene {

/// Tunables of the scene model, classifier and blob stages.
struct ModelConfig {
  int alpha_amf = 2;               // AMF step, coefficient units per frame
  std::uint32_t c_s = 30;          // minimum survival, frames
  double c_v = 1.0;                // survival frames granted per hit
  int max_modes = 5;
  std::uint32_t t_similar = 1;     // creation-frame distance counted as similar
  double bonus_value = 0.0;        // added to scores of recently matched modes
  std::uint32_t bonus_window = 2;  // frames
  std::uint32_t n_bg = 30;         // age horizon separating background from foreground
  int iterations = 3;              // spatial classifier passes
  int min_blob_blocks = 1;

  void validate() const {
    if (alpha_amf <= 0) throw std::invalid_argument("alpha_amf must be > 0");
    if (c_s == 0) throw std::invalid_argument("c_s must be > 0");
    if (!(c_v >= 0.0)) throw std::invalid_argument("c_v must be >= 0");
    if (max_modes < 1 || max_modes > 255) throw std::invalid_argument("max_modes must be in [1, 255]");
    if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
    if (min_blob_blocks < 1) throw std::invalid_argument("min_blob_blocks must be >= 1");
    if (!std::isfinite(bonus_value)) throw std::invalid_argument("bonus_value must be finite");
  }

  bool operator==(const ModelConfig&) const = default;
};

/// One stored appearance of a block plus its temporal bookkeeping.
struct ModeModel {
  std::array<std::int16_t, kFeatureCount> coeffs{};
  FrameIndex creation_frame = 0;
  std::uint32_t hit_count = 0;
  FrameIndex last_matched_frame = 0;
  FrameIndex removal_frame = 0;

  bool operator==(const ModeModel&) const = default;
};

inline constexpr std::size_t kModeRecordBytes = 32;
static_assert(sizeof(ModeModel) == kModeRecordBytes);

/// Approximated median step: move toward x by at most alpha; snap onto x
/// when it is within alpha.
template <typename T>
constexpr T amf_update(T x, T y, T alpha) noexcept {
  if (x > y + alpha) return y + alpha;
  if (x < y - alpha) return y - alpha;
  return x;
}

template <typename T>
constexpr T ema_update(T x, T y, T alpha_ema) noexcept {
  return (T{1} - alpha_ema) * y + alpha_ema * x;
}

inline FrameIndex compute_removal_frame(FrameIndex current, std::uint32_t c_s, double c_v,
                                        std::uint32_t hit_count) noexcept {
  const double extra = std::floor(c_v * static_cast<double>(hit_count));
  const double total = static_cast<double>(current) + static_cast<double>(c_s) + extra;
  constexpr double kMax = static_cast<double>(std::numeric_limits<FrameIndex>::max());
  return total >= kMax ? std::numeric_limits<FrameIndex>::max() : static_cast<FrameIndex>(total);
}

inline std::int16_t to_model_coefficient(double v) noexcept {
  const double r = std::nearbyint(v);
  if (r >= 32767.0) return 32767;
  if (r <= -32768.0) return -32768;
  return static_cast<std::int16_t>(r);
}

/// Grid of per-block mode lists. Storage is a flat array with max_modes slots
/// per block; slots [0, count) are live and kept in insertion order.
class SceneModel {
 public:
  SceneModel(int width_blocks, int height_blocks, ModelConfig config)
      : width_(width_blocks), height_(height_blocks), config_(config) {
    config_.validate();
    if (width_blocks <= 0 || height_blocks <= 0) throw std::invalid_argument("empty scene grid");
    const std::size_t blocks = block_count();
    modes_.resize(blocks * static_cast<std::size_t>(config_.max_modes));
    counts_.assign(blocks, 0);
  }

  int width_blocks() const noexcept { return width_; }
  int height_blocks() const noexcept { return height_; }
  std::size_t block_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  std::size_t block_index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }
  const ModelConfig& config() const noexcept { return config_; }
  int max_modes() const noexcept { return config_.max_modes; }

  FrameIndex current_frame() const noexcept { return current_frame_; }
  void advance_frame() noexcept { ++current_frame_; }
  void set_current_frame(FrameIndex f) noexcept { current_frame_ = f; }

  std::size_t mode_count(std::size_t block) const noexcept { return counts_[block]; }
  std::span<const ModeModel> modes(std::size_t block) const noexcept {
    return {modes_.data() + block * config_.max_modes, counts_[block]};
  }
  std::span<ModeModel> modes(std::size_t block) noexcept {
    return {modes_.data() + block * config_.max_modes, counts_[block]};
  }

  void append_mode(std::size_t block, const ModeModel& m) {
    if (counts_[block] >= config_.max_modes) throw std::logic_error("block mode list is full");
    modes_[block * config_.max_modes + counts_[block]] = m;
    ++counts_[block];
  }

  void erase_mode(std::size_t block, std::size_t index) {
    auto live = modes(block);
    if (index >= live.size()) throw std::out_of_range("mode index");
    std::copy(live.begin() + static_cast<std::ptrdiff_t>(index) + 1, live.end(),
              live.begin() + static_cast<std::ptrdiff_t>(index));
    --counts_[block];
  }

  std::size_t total_modes() const noexcept {
    std::size_t n = 0;
    for (std::uint8_t c : counts_) n += c;
    return n;
  }

  /// Bytes held by live mode records (the persistent model between frames).
  std::size_t persistent_bytes() const noexcept { return total_modes() * kModeRecordBytes; }

  bool operator==(const SceneModel& o) const {
    if (width_ != o.width_ || height_ != o.height_ || current_frame_ != o.current_frame_ ||
        counts_ != o.counts_ || config_.max_modes != o.config_.max_modes) {
      return false;
    }
    for (std::size_t b = 0; b < block_count(); ++b) {
      if (!std::ranges::equal(modes(b), o.modes(b))) return false;
    }
    return true;
  }

 private:
  int width_;
  int height_;
  ModelConfig config_;
  FrameIndex current_frame_ = 0;
  std::vector<ModeModel> modes_;
  std::vector<std::uint8_t> counts_;
};

/// Slot evicted when a full block must admit a new mode: earliest
/// removal_frame, then lower hit_count, then older creation_frame.
inline std::size_t eviction_index(std::span<const ModeModel> modes) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < modes.size(); ++i) {
    const ModeModel& a = modes[i];
    const ModeModel& b = modes[best];
    if (a.removal_frame != b.removal_frame ? a.removal_frame < b.removal_frame
        : a.hit_count != b.hit_count       ? a.hit_count < b.hit_count
                                           : a.creation_frame < b.creation_frame) {
      best = i;
    }
  }
  return best;
}

inline ModeModel make_mode(const FeatureBlock& f, FrameIndex current, const ModelConfig& cfg) {
  ModeModel m;
  for (std::size_t i = 0; i < kFeatureCount; ++i) m.coeffs[i] = to_model_coefficient(f[i]);
  m.creation_frame = current;
  m.hit_count = 1;
  m.last_matched_frame = current;
  m.removal_frame = compute_removal_frame(current, cfg.c_s, cfg.c_v, 1);
  return m;
}

inline void update_matched_mode(ModeModel& m, const FeatureBlock& f, FrameIndex current,
                                const ModelConfig& cfg) {
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    const int x = to_model_coefficient(f[i]);
    m.coeffs[i] = static_cast<std::int16_t>(amf_update<int>(x, m.coeffs[i], cfg.alpha_amf));
  }
  if (m.hit_count < std::numeric_limits<std::uint32_t>::max()) ++m.hit_count;
  m.last_matched_frame = current;
  m.removal_frame = compute_removal_frame(current, cfg.c_s, cfg.c_v, m.hit_count);
}

/// Applies one block's decision. on_evict(slot) is called before a slot is
/// erased to make room for a new mode.
template <typename OnEvict>
void apply_block_update(SceneModel& scene, std::size_t block, const MatchDecision& d,
                        const FeatureBlock& f, OnEvict&& on_evict) {
  const FrameIndex now = scene.current_frame();
  if (d.matched()) {
    auto modes = scene.modes(block);
    update_matched_mode(modes[static_cast<std::size_t>(d.mode_index)], f, now, scene.config());
    return;
  }
  if (scene.mode_count(block) >= static_cast<std::size_t>(scene.max_modes())) {
    const std::size_t victim = eviction_index(scene.modes(block));
    on_evict(victim);
    scene.erase_mode(block, victim);
  }
  scene.append_mode(block, make_mode(f, now, scene.config()));
}

inline void apply_updates(SceneModel& scene, const DecisionGrid& decisions, const FeatureGrid& features) {
  if (decisions.size() != scene.block_count() || features.size() != scene.block_count()) {
    throw std::invalid_argument("decision/feature grid does not match scene dimensions");
  }
  for (std::size_t b = 0; b < scene.block_count(); ++b) {
    apply_block_update(scene, b, decisions[b], features[b], [](std::size_t) {});
  }
}

/// Removes expired modes of one block, never the last one. on_erase(slot) is
/// called for each slot before it is removed (highest slot first).
template <typename OnErase>
std::size_t expire_block(SceneModel& scene, std::size_t block, OnErase&& on_erase) {
  const FrameIndex now = scene.current_frame();
  auto modes = scene.modes(block);
  if (modes.empty()) return 0;
  std::size_t expired = 0;
  for (const ModeModel& m : modes) expired += m.removal_frame <= now ? 1 : 0;
  if (expired == 0) return 0;

  std::size_t keep = modes.size();  // slot spared when everything expired
  if (expired == modes.size()) {
    keep = 0;
    for (std::size_t i = 1; i < modes.size(); ++i) {
      const ModeModel& a = modes[i];
      const ModeModel& k = modes[keep];
      if (a.last_matched_frame != k.last_matched_frame ? a.last_matched_frame > k.last_matched_frame
                                                       : a.removal_frame > k.removal_frame) {
        keep = i;
      }
    }
  }
  std::size_t removed = 0;
  for (std::size_t i = modes.size(); i-- > 0;) {
    if (i != keep && scene.modes(block)[i].removal_frame <= now) {
      on_erase(i);
      scene.erase_mode(block, i);
      ++removed;
    }
  }
  return removed;
}

inline std::size_t expire_modes(SceneModel& scene) {
  std::size_t removed = 0;
  for (std::size_t b = 0; b < scene.block_count(); ++b) {
    removed += expire_block(scene, b, [](std::size_t) {});
  }
  return removed;
}

// Snapshot file, little-endian:
//   "DCSM" | u32 version | u32 width_blocks | u32 height_blocks | u32 max_modes
//   | u32 current_frame, then per block: u8 count + count * 32-byte records
//   (8 x i16 coefficients, u32 creation, u32 hits, u32 last matched, u32 removal).

inline constexpr char kSnapshotMagic[4] = {'D', 'C', 'S', 'M'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  os.write(b, 4);
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("truncated scene snapshot");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace detail

inline void write_snapshot(std::ostream& os, const SceneModel& scene) {
  os.write(kSnapshotMagic, 4);
  detail::put_u32(os, kSnapshotVersion);
  detail::put_u32(os, static_cast<std::uint32_t>(scene.width_blocks()));
  detail::put_u32(os, static_cast<std::uint32_t>(scene.height_blocks()));
  detail::put_u32(os, static_cast<std::uint32_t>(scene.max_modes()));
  detail::put_u32(os, scene.current_frame());
  for (std::size_t b = 0; b < scene.block_count(); ++b) {
    const auto modes = scene.modes(b);
    os.put(static_cast<char>(modes.size()));
    for (const ModeModel& m : modes) {
      for (std::int16_t c : m.coeffs) {
        const auto u = static_cast<std::uint16_t>(c);
        os.put(static_cast<char>(u & 0xFF));
        os.put(static_cast<char>(u >> 8));
      }
      detail::put_u32(os, m.creation_frame);
      detail::put_u32(os, m.hit_count);
      detail::put_u32(os, m.last_matched_frame);
      detail::put_u32(os, m.removal_frame);
    }
  }
  if (!os) throw std::runtime_error("failed writing scene snapshot");
}

/// Reads a snapshot. max_modes comes from the file and overrides config.
inline SceneModel read_snapshot(std::istream& is, ModelConfig config) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kSnapshotMagic, 4) != 0) {
    throw std::runtime_error("not a scene snapshot");
  }
  if (detail::get_u32(is) != kSnapshotVersion) throw std::runtime_error("unsupported snapshot version");
  const auto w = detail::get_u32(is);
  const auto h = detail::get_u32(is);
  const auto max_modes = detail::get_u32(is);
  const auto current = detail::get_u32(is);
  if (w == 0 || h == 0 || w > 65536 || h > 65536) throw std::runtime_error("bad snapshot dimensions");
  config.max_modes = static_cast<int>(max_modes);
  SceneModel scene(static_cast<int>(w), static_cast<int>(h), config);
  scene.set_current_frame(current);
  for (std::size_t b = 0; b < scene.block_count(); ++b) {
    const int count = is.get();
    if (count == std::char_traits<char>::eof()) throw std::runtime_error("truncated scene snapshot");
    if (count > static_cast<int>(max_modes)) throw std::runtime_error("snapshot block exceeds max_modes");
    for (int k = 0; k < count; ++k) {
      ModeModel m;
      for (auto& c : m.coeffs) {
        unsigned char lo_hi[2];
        if (!is.read(reinterpret_cast<char*>(lo_hi), 2)) throw std::runtime_error("truncated scene snapshot");
        c = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo_hi[0] | (lo_hi[1] << 8)));
      }
      m.creation_frame = detail::get_u32(is);
      m.hit_count = detail::get_u32(is);
      m.last_matched_frame = detail::get_u32(is);
      m.removal_frame = detail::get_u32(is);
      scene.append_mode(b, m);
    }
  }
  return scene;
}

}  // namespace dctscene
