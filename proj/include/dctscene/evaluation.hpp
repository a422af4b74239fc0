#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dctscene/blobs.hpp"
#include "dctscene/pgm.hpp"
#include "dctscene/scene_model.hpp"

namespace dctscene {

/// Pixel confusion counts; accumulate with += for micro-averaging.
struct PixelCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  double precision() const noexcept { return tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0; }
  double recall() const noexcept { return tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0; }
  double f1() const noexcept {
    const double p = precision(), r = recall();
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  }
  PixelCounts& operator+=(const PixelCounts& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Nonzero pixels are foreground in both masks.
inline PixelCounts pixel_counts(const GrayImage& detection, const GrayImage& truth) {
  if (detection.width != truth.width || detection.height != truth.height) {
    throw std::invalid_argument("detection mask is " + std::to_string(detection.width) + "x" +
                                std::to_string(detection.height) + ", ground truth is " +
                                std::to_string(truth.width) + "x" + std::to_string(truth.height));
  }
  PixelCounts c;
  for (std::size_t i = 0; i < truth.pixels.size(); ++i) {
    const bool d = detection.pixels[i] != 0;
    const bool g = truth.pixels[i] != 0;
    c.tp += d && g;
    c.fp += d && !g;
    c.fn += !d && g;
  }
  return c;
}

inline PrecisionRecall pixel_f1(const GrayImage& detection, const GrayImage& truth) {
  const PixelCounts c = pixel_counts(detection, truth);
  return {c.precision(), c.recall(), c.f1()};
}

/// Rasterises a block mask to 8x8 pixel squares, cropped to width x height.
inline GrayImage expand_block_mask(const BlockGrid<std::uint8_t>& blocks, int width, int height) {
  GrayImage out(width, height, 0);
  for (int y = 0; y < height; ++y) {
    const int by = y / 8;
    if (by >= blocks.height()) break;
    for (int x = 0; x < width; ++x) {
      const int bx = x / 8;
      if (bx >= blocks.width()) break;
      out.at(x, y) = blocks(bx, by) ? 255 : 0;
    }
  }
  return out;
}

/// Ground-truth object box in pixels.
struct GtBox {
  int id = 0;
  int x = 0, y = 0, w = 0, h = 0;
  bool operator==(const GtBox&) const = default;
};

struct SuitabilityCounts {
  std::uint64_t associated = 0;
  std::uint64_t detected = 0;

  /// 0 when nothing was detected.
  double ratio() const noexcept {
    return detected ? static_cast<double>(associated) / static_cast<double>(detected) : 0.0;
  }
  SuitabilityCounts& operator+=(const SuitabilityCounts& o) noexcept {
    associated += o.associated;
    detected += o.detected;
    return *this;
  }
};

/// Pixels shared by a blob's member blocks and a box.
inline std::int64_t blob_box_overlap(const Blob& blob, int width_blocks, const GtBox& box) {
  std::int64_t area = 0;
  for (std::size_t b : blob.blocks) {
    const int px = static_cast<int>(b % static_cast<std::size_t>(width_blocks)) * 8;
    const int py = static_cast<int>(b / static_cast<std::size_t>(width_blocks)) * 8;
    const int ox = std::min(px + 8, box.x + box.w) - std::max(px, box.x);
    const int oy = std::min(py + 8, box.y + box.h) - std::max(py, box.y);
    if (ox > 0 && oy > 0) area += static_cast<std::int64_t>(ox) * oy;
  }
  return area;
}

/// Greedy association for one frame: pairs with positive overlap are taken
/// largest-overlap first (ties: lower box index, then lower blob index);
/// each box and each blob is used at most once.
inline SuitabilityCounts associate_frame(const std::vector<Blob>& blobs, const std::vector<GtBox>& boxes,
                                         int width_blocks) {
  struct Pair {
    std::int64_t overlap;
    std::size_t box, blob;
  };
  std::vector<Pair> pairs;
  for (std::size_t g = 0; g < boxes.size(); ++g) {
    for (std::size_t k = 0; k < blobs.size(); ++k) {
      const std::int64_t o = blob_box_overlap(blobs[k], width_blocks, boxes[g]);
      if (o > 0) pairs.push_back({o, g, k});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    if (a.box != b.box) return a.box < b.box;
    return a.blob < b.blob;
  });
  std::vector<std::uint8_t> box_used(boxes.size(), 0), blob_used(blobs.size(), 0);
  SuitabilityCounts c;
  c.detected = blobs.size();
  for (const Pair& p : pairs) {
    if (box_used[p.box] || blob_used[p.blob]) continue;
    box_used[p.box] = blob_used[p.blob] = 1;
    ++c.associated;
  }
  return c;
}

/// Associated blobs over detected blobs, summed over frames.
inline double tracking_suitability(const std::vector<std::vector<Blob>>& blobs_per_frame,
                                   const std::vector<std::vector<GtBox>>& boxes_per_frame, int width_blocks) {
  if (blobs_per_frame.size() != boxes_per_frame.size()) throw std::invalid_argument("frame count mismatch");
  SuitabilityCounts total;
  for (std::size_t f = 0; f < blobs_per_frame.size(); ++f) {
    total += associate_frame(blobs_per_frame[f], boxes_per_frame[f], width_blocks);
  }
  return total.ratio();
}

/// Persistent model size: live modes x 32 bytes.
inline std::size_t scene_model_bytes(const SceneModel& scene) noexcept { return scene.persistent_bytes(); }

inline std::size_t scene_model_bytes(std::span<const std::size_t> modes_per_block) noexcept {
  std::size_t n = 0;
  for (std::size_t m : modes_per_block) n += m;
  return n * kModeRecordBytes;
}

struct ResourceReport {
  std::size_t frames = 0;
  double seconds = 0.0;
  std::size_t scene_bytes = 0;

  double fps() const noexcept { return seconds > 0 ? static_cast<double>(frames) / seconds : 0.0; }
};

struct SequenceEvaluation {
  std::string name;
  std::size_t frames = 0;
  PixelCounts pixels;
  SuitabilityCounts suitability;
  ResourceReport resources;
};

/// Per-sequence rows plus a micro-averaged aggregate row.
struct EvalReport {
  std::vector<SequenceEvaluation> sequences;

  SequenceEvaluation aggregate() const {
    SequenceEvaluation a;
    a.name = "all";
    for (const SequenceEvaluation& s : sequences) {
      a.frames += s.frames;
      a.pixels += s.pixels;
      a.suitability += s.suitability;
      a.resources.frames += s.resources.frames;
      a.resources.seconds += s.resources.seconds;
      a.resources.scene_bytes = std::max(a.resources.scene_bytes, s.resources.scene_bytes);
    }
    return a;
  }

  void write_csv(std::ostream& os) const {
    os << "sequence,frames,tp,fp,fn,precision,recall,f1,associated_blobs,detected_blobs,tracking_suitability,fps,"
          "scene_model_bytes\n";
    auto row = [&](const SequenceEvaluation& s) {
      os << s.name << ',' << s.frames << ',' << s.pixels.tp << ',' << s.pixels.fp << ',' << s.pixels.fn << ','
         << s.pixels.precision() << ',' << s.pixels.recall() << ',' << s.pixels.f1() << ','
         << s.suitability.associated << ',' << s.suitability.detected << ',' << s.suitability.ratio() << ','
         << s.resources.fps() << ',' << s.resources.scene_bytes << '\n';
    };
    for (const SequenceEvaluation& s : sequences) row(s);
    row(aggregate());
  }

  void write_summary(std::ostream& os) const {
    const SequenceEvaluation a = aggregate();
    os << "sequences:            " << sequences.size() << "\n"
       << "frames:               " << a.frames << "\n"
       << "precision:            " << a.pixels.precision() << "\n"
       << "recall:               " << a.pixels.recall() << "\n"
       << "F1:                   " << a.pixels.f1() << "\n"
       << "tracking suitability: " << a.suitability.ratio() << " (" << a.suitability.associated << "/"
       << a.suitability.detected << " blobs)\n";
    if (a.resources.frames) os << "frames per second:    " << a.resources.fps() << "\n";
    if (a.resources.scene_bytes) os << "scene model bytes:    " << a.resources.scene_bytes << "\n";
  }
};

/// Box file: one "frame id x y w h" record per line; '#' comments.
inline std::map<FrameIndex, std::vector<GtBox>> read_gt_boxes(std::istream& is) {
  std::map<FrameIndex, std::vector<GtBox>> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long long frame = 0;
    GtBox b;
    if (!(ls >> frame)) continue;
    if (!(ls >> b.id >> b.x >> b.y >> b.w >> b.h) || frame < 0 || b.w < 0 || b.h < 0) {
      throw std::runtime_error("box file line " + std::to_string(line_no) + ": expected 'frame id x y w h'");
    }
    out[static_cast<FrameIndex>(frame)].push_back(b);
  }
  return out;
}

inline void write_gt_boxes(std::ostream& os, FrameIndex frame, const std::vector<GtBox>& boxes) {
  for (const GtBox& b : boxes) os << frame << ' ' << b.id << ' ' << b.x << ' ' << b.y << ' ' << b.w << ' ' << b.h << '\n';
}

}  // namespace dctscene
