#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <ostream>
#include <vector>

#include "dctscene/decision.hpp"
#include "dctscene/grid.hpp"

namespace dctscene {

/// Creation frame of each block's selected mode.
using AgeImage = BlockGrid<FrameIndex>;

inline AgeImage make_age_image(const DecisionGrid& decisions) {
  AgeImage age(decisions.width(), decisions.height());
  for (std::size_t i = 0; i < decisions.size(); ++i) age[i] = decisions[i].matched_creation_frame;
  return age;
}

enum class AgeClass : std::uint8_t { old_side, young };

struct PixelBox {
  int x = 0, y = 0, w = 0, h = 0;
  bool operator==(const PixelBox&) const = default;
};

struct Blob {
  std::vector<std::size_t> blocks;  // row-major block indices, ascending
  int bx = 0, by = 0, bw = 0, bh = 0;  // bounding box in blocks
  AgeClass age_class = AgeClass::old_side;
  FrameIndex min_creation = 0;
  FrameIndex max_creation = 0;
  double mean_creation = 0.0;

  std::size_t block_count() const noexcept { return blocks.size(); }
  bool young() const noexcept { return age_class == AgeClass::young; }
  PixelBox pixel_box() const noexcept { return {bx * 8, by * 8, bw * 8, bh * 8}; }

  bool operator==(const Blob&) const = default;
};

inline bool is_young(FrameIndex creation, std::int64_t t_age) noexcept {
  return static_cast<std::int64_t>(creation) > t_age;
}

/// Maximal 4-connected components whose blocks all lie on the same side of
/// t_age (young: creation > t_age). Blobs are ordered by their first block
/// in row-major order.
inline std::vector<Blob> connected_components(const AgeImage& age, std::int64_t t_age) {
  std::vector<Blob> blobs;
  const int w = age.width();
  const int h = age.height();
  std::vector<std::uint8_t> seen(age.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t seed = 0; seed < age.size(); ++seed) {
    if (seen[seed]) continue;
    const bool side = is_young(age[seed], t_age);
    Blob blob;
    blob.age_class = side ? AgeClass::young : AgeClass::old_side;
    int x0 = w, y0 = h, x1 = -1, y1 = -1;
    FrameIndex lo = std::numeric_limits<FrameIndex>::max(), hi = 0;
    double sum = 0.0;

    seen[seed] = 1;
    stack.assign(1, seed);
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      blob.blocks.push_back(cur);
      const int cx = static_cast<int>(cur % static_cast<std::size_t>(w));
      const int cy = static_cast<int>(cur / static_cast<std::size_t>(w));
      x0 = std::min(x0, cx);
      x1 = std::max(x1, cx);
      y0 = std::min(y0, cy);
      y1 = std::max(y1, cy);
      lo = std::min(lo, age[cur]);
      hi = std::max(hi, age[cur]);
      sum += static_cast<double>(age[cur]);
      for (int k = 0; k < 4; ++k) {
        const int nx = cx + kNeighbourDx[k];
        const int ny = cy + kNeighbourDy[k];
        if (!age.contains(nx, ny)) continue;
        const std::size_t n = age.index(nx, ny);
        if (!seen[n] && is_young(age[n], t_age) == side) {
          seen[n] = 1;
          stack.push_back(n);
        }
      }
    }
    std::sort(blob.blocks.begin(), blob.blocks.end());
    blob.bx = x0;
    blob.by = y0;
    blob.bw = x1 - x0 + 1;
    blob.bh = y1 - y0 + 1;
    blob.min_creation = lo;
    blob.max_creation = hi;
    blob.mean_creation = sum / static_cast<double>(blob.blocks.size());
    blobs.push_back(std::move(blob));
  }
  return blobs;
}

/// Young blobs of at least min_blocks blocks; nothing while
/// current_frame < n_bg.
inline std::vector<Blob> foreground_blobs(const std::vector<Blob>& blobs, FrameIndex current_frame,
                                          FrameIndex n_bg, std::size_t min_blocks = 1) {
  std::vector<Blob> out;
  if (current_frame < n_bg) return out;
  for (const Blob& b : blobs) {
    if (b.young() && b.block_count() >= min_blocks) out.push_back(b);
  }
  return out;
}

/// Block mask (1 = foreground) covering the given blobs.
inline BlockGrid<std::uint8_t> blob_mask(const std::vector<Blob>& blobs, int width_blocks, int height_blocks) {
  BlockGrid<std::uint8_t> mask(width_blocks, height_blocks, 0);
  for (const Blob& b : blobs) {
    for (std::size_t i : b.blocks) mask[i] = 1;
  }
  return mask;
}

inline constexpr const char* kBlobReportHeader =
    "# frame blob x y w h blocks min_creation max_creation age_class";

/// One text record per blob; bounding box in pixels.
inline void write_blob_record(std::ostream& os, FrameIndex frame, std::size_t id, const Blob& b) {
  const PixelBox p = b.pixel_box();
  os << frame << ' ' << id << ' ' << p.x << ' ' << p.y << ' ' << p.w << ' ' << p.h << ' ' << b.block_count()
     << ' ' << b.min_creation << ' ' << b.max_creation << ' ' << (b.young() ? "young" : "old") << '\n';
}

}  // namespace dctscene
