#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>

#include "dctscene/grid.hpp"
#include "dctscene/jpeg_decoder.hpp"

namespace dctscene {

inline constexpr std::size_t kFeatureCount = 8;
inline constexpr std::size_t kLumaFeatureCount = 6;

/// Per-block feature vector: the first six luma coefficients in zigzag order
/// followed by the I and Q chroma DC terms.
struct FeatureBlock {
  std::array<double, kFeatureCount> f{};

  double& operator[](std::size_t i) noexcept { return f[i]; }
  double operator[](std::size_t i) const noexcept { return f[i]; }
  bool operator==(const FeatureBlock&) const = default;
};

using FeatureGrid = BlockGrid<FeatureBlock>;

/// Rotation of the Cb/Cr plane onto the I/Q axes, in degrees.
inline constexpr double kChromaRotationDegrees = 33.0;

struct ChromaIQ {
  double i;
  double q;
};

inline ChromaIQ rotate_chroma(double cb, double cr) noexcept {
  static const double s = std::sin(kChromaRotationDegrees * std::numbers::pi / 180.0);
  static const double c = std::cos(kChromaRotationDegrees * std::numbers::pi / 180.0);
  return {-cb * s + cr * c, cb * c + cr * s};
}

inline FeatureGrid extract_features(const CoefficientPlanes& planes) {
  FeatureGrid grid(planes.width_blocks, planes.height_blocks);
  for (std::size_t b = 0; b < grid.size(); ++b) {
    const auto y = planes.y_block(b);
    FeatureBlock& fb = grid[b];
    for (std::size_t i = 0; i < kLumaFeatureCount; ++i) fb[i] = static_cast<double>(y[i]);
    const ChromaIQ iq = rotate_chroma(planes.cb_dc[b], planes.cr_dc[b]);
    fb[6] = iq.i;
    fb[7] = iq.q;
  }
  return grid;
}

}  // namespace dctscene
