#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dctscene {

/// Frame counter type. Mode records store it in 4 bytes.
using FrameIndex = std::uint32_t;

/// Row-major 2-D grid with one value per 8x8 block.
template <typename T>
class BlockGrid {
 public:
  BlockGrid() = default;
  BlockGrid(int width, int height, const T& fill = T{})
      : width_(width), height_(height),
        cells_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return cells_.size(); }
  bool empty() const noexcept { return cells_.empty(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  std::size_t index(int x, int y) const noexcept {
    assert(contains(x, y));
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  T& operator()(int x, int y) noexcept { return cells_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return cells_[index(x, y)]; }
  T& operator[](std::size_t i) noexcept { return cells_[i]; }
  const T& operator[](std::size_t i) const noexcept { return cells_[i]; }

  std::span<T> cells() noexcept { return cells_; }
  std::span<const T> cells() const noexcept { return cells_; }

  auto begin() noexcept { return cells_.begin(); }
  auto end() noexcept { return cells_.end(); }
  auto begin() const noexcept { return cells_.begin(); }
  auto end() const noexcept { return cells_.end(); }

  bool operator==(const BlockGrid&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> cells_;
};

/// 4-connected neighbour offsets: up, left, right, down.
inline constexpr int kNeighbourDx[4] = {0, -1, 1, 0};
inline constexpr int kNeighbourDy[4] = {-1, 0, 0, 1};

}  // namespace dctscene
