#pragma once

// On-disk layout of labelled sequences and ground truth.
//
//   <sequence>/frames/000000.jpg ...     input frames
//   <sequence>/labels/000000.txt ...     per-block content labels
//   <sequence>/gt/masks/000000.pgm ...   object masks (0 / 255)
//   <sequence>/gt/boxes.txt              "frame id x y w h" records
//
// A corpus directory is either one sequence or a directory of sequences.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dctscene/features.hpp"
#include "dctscene/jpeg_decoder.hpp"
#include "dctscene/mjpeg_stream.hpp"
#include "dctscene/training.hpp"

namespace dctscene {

namespace fs = std::filesystem;

inline std::string frame_file_stem(std::size_t frame) {
  std::ostringstream os;
  os << std::setw(6) << std::setfill('0') << frame;
  return os.str();
}

/// Label file: "W H" then H rows of W unsigned labels.
inline void write_label_grid(std::ostream& os, const LabelGrid& labels) {
  os << labels.width() << ' ' << labels.height() << '\n';
  for (int y = 0; y < labels.height(); ++y) {
    for (int x = 0; x < labels.width(); ++x) os << (x ? " " : "") << labels(x, y);
    os << '\n';
  }
}

inline LabelGrid read_label_grid(std::istream& is) {
  int w = 0, h = 0;
  if (!(is >> w >> h) || w <= 0 || h <= 0) throw std::runtime_error("label file: bad dimensions");
  LabelGrid g(w, h);
  for (auto& v : g) {
    if (!(is >> v)) throw std::runtime_error("label file: truncated");
  }
  return g;
}

inline std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& ext) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline bool is_sequence_dir(const fs::path& dir) { return fs::is_directory(dir / "frames"); }

/// Sequence directories under `root`, in name order.
inline std::vector<fs::path> find_sequences(const fs::path& root) {
  if (is_sequence_dir(root)) return {root};
  std::vector<fs::path> out;
  if (fs::is_directory(root)) {
    for (const auto& e : fs::directory_iterator(root)) {
      if (e.is_directory() && is_sequence_dir(e.path())) out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Training corpus read from disk. Every frame needs a label file of the
/// same stem.
class DirectoryCorpus : public TrainingCorpus {
 public:
  explicit DirectoryCorpus(const fs::path& root) : sequences_(find_sequences(root)) {
    if (sequences_.empty()) throw std::runtime_error("no sequences (directories with frames/) under " + root.string());
  }

  std::size_t sequence_count() const override { return sequences_.size(); }
  const fs::path& sequence_path(std::size_t s) const { return sequences_.at(s); }

  void replay(std::size_t s, const FrameVisitor& visit) const override {
    const fs::path& dir = sequences_.at(s);
    for (const fs::path& frame : sorted_files(dir / "frames", ".jpg")) {
      const fs::path label_path = dir / "labels" / (frame.stem().string() + ".txt");
      std::ifstream ls(label_path);
      if (!ls) throw std::runtime_error("missing label file " + label_path.string());
      const LabelGrid labels = read_label_grid(ls);
      const std::vector<std::uint8_t> bytes = read_file_bytes(frame);
      const FeatureGrid features = extract_features(decode_jpeg_dct(bytes));
      if (labels.width() != features.width() || labels.height() != features.height()) {
        throw std::runtime_error(label_path.string() + ": label grid does not match frame blocks");
      }
      visit(features, labels);
    }
  }

 private:
  std::vector<fs::path> sequences_;
};

}  // namespace dctscene
