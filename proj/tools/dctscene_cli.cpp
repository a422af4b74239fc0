// dctscene command-line tool: detect, train, eval, bench, synth.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>

#include "dctscene/dctscene.hpp"
#include "dctscene/synthetic.hpp"

namespace fs = std::filesystem;
using namespace dctscene;

#ifndef DCTSCENE_DATA_DIR
#define DCTSCENE_DATA_DIR "."
#endif

namespace {

const fs::path kDefaultModel = fs::path(DCTSCENE_DATA_DIR) / "models" / "default.model";
const fs::path kDefaultConfig = fs::path(DCTSCENE_DATA_DIR) / "config" / "default.conf";

class CliError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ClassifierModel load_model(const fs::path& path) {
  if (!fs::is_regular_file(path)) {
    throw CliError("model file '" + path.string() + "' not found. Train one with\n  dctscene train --corpus <dir> " +
                   "--iterations 3 --out <model>\nor use the shipped defaults: --model " + kDefaultModel.string());
  }
  std::ifstream is(path);
  return read_classifier_model(is);
}

ModelConfig load_config(const std::string& path) {
  if (path.empty()) return fs::is_regular_file(kDefaultConfig) ? read_model_config(kDefaultConfig) : ModelConfig{};
  return read_model_config(fs::path(path));
}

GrayImage upscale_blocks(const BlockGrid<std::uint8_t>& blocks, int width, int height) {
  GrayImage img(width, height, 0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) img.at(x, y) = blocks(x / 8, y / 8);
  }
  return img;
}

/// Creation frames mapped onto 0..255 relative to the current frame, so
/// older content is darker.
GrayImage age_image_pgm(const AgeImage& age, FrameIndex now, int width, int height) {
  BlockGrid<std::uint8_t> scaled(age.width(), age.height(), 0);
  for (std::size_t i = 0; i < age.size(); ++i) {
    scaled[i] = now ? static_cast<std::uint8_t>(std::lround(255.0 * age[i] / now)) : 0;
  }
  return upscale_blocks(scaled, width, height);
}

/// Feeds `on_frame` every JPEG of an http MJPEG stream until it returns
/// false or the stream ends.
void stream_url(const std::string& url, const std::function<bool(std::vector<std::uint8_t>&)>& on_frame) {
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string origin = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
  httplib::Client client(origin);
  client.set_read_timeout(30, 0);
  MjpegFramer framer;
  std::vector<std::uint8_t> frame;
  bool stop = false;
  auto res = client.Get(path, [&](const char* data, std::size_t n) {
    framer.push({reinterpret_cast<const std::uint8_t*>(data), n});
    while (!stop && framer.next(frame)) stop = !on_frame(frame);
    return !stop;
  });
  if (!res && !stop) throw CliError("cannot read " + url + ": " + httplib::to_string(res.error()));
  if (res && res->status != 200) throw CliError(url + ": HTTP status " + std::to_string(res->status));
}

bool is_url(const std::string& s) { return s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0; }

struct DetectOptions {
  std::string input;
  std::string model = kDefaultModel.string();
  std::string config;
  std::string out;
  bool emit_age = false;
  bool emit_scores = false;
  std::size_t max_frames = 0;
};

int run_detect(const DetectOptions& o) {
  Pipeline pipeline(load_config(o.config), load_model(o.model));
  const fs::path out(o.out);
  fs::create_directories(out / "masks");
  if (o.emit_age) fs::create_directories(out / "age");
  if (o.emit_scores) fs::create_directories(out / "scores");
  std::ofstream report(out / "blobs.txt");
  report << kBlobReportHeader << '\n';

  std::chrono::duration<double> busy{0};
  std::size_t processed = 0, skipped = 0, blobs_total = 0, peak_bytes = 0;
  auto handle = [&](std::vector<std::uint8_t>& jpeg) {
    const auto t0 = std::chrono::steady_clock::now();
    const FrameResult r = pipeline.process_jpeg(jpeg);
    busy += std::chrono::steady_clock::now() - t0;
    const std::string stem = frame_file_stem(r.input_index);
    if (r.skipped) {
      ++skipped;
      return o.max_frames == 0 || r.input_index + 1 < o.max_frames;
    }
    ++processed;
    peak_bytes = std::max(peak_bytes, pipeline.scene().persistent_bytes());
    for (std::size_t i = 0; i < r.blobs.size(); ++i) write_blob_record(report, r.frame, i, r.blobs[i]);
    blobs_total += r.blobs.size();
    write_pgm(out / "masks" / (stem + ".pgm"),
              expand_block_mask(blob_mask(r.blobs, r.age.width(), r.age.height()), r.width, r.height));
    if (o.emit_age) write_pgm(out / "age" / (stem + ".pgm"), age_image_pgm(r.age, r.frame, r.width, r.height));
    if (o.emit_scores) {
      std::ofstream s(out / "scores" / (stem + ".txt"));
      s << r.decisions.width() << ' ' << r.decisions.height() << '\n' << std::setprecision(6);
      for (int y = 0; y < r.decisions.height(); ++y) {
        for (int x = 0; x < r.decisions.width(); ++x) s << (x ? " " : "") << r.decisions(x, y).score;
        s << '\n';
      }
    }
    return o.max_frames == 0 || r.input_index + 1 < o.max_frames;
  };

  if (is_url(o.input)) {
    stream_url(o.input, handle);
  } else {
    if (!fs::exists(o.input)) throw CliError("input '" + o.input + "' does not exist");
    for (auto& frame : load_frames(o.input)) {
      if (!handle(frame)) break;
    }
  }
  std::ofstream events(out / "events.txt");
  for (const std::string& e : pipeline.events()) events << e << '\n';
  std::ofstream stats(out / "stats.txt");
  stats << "frames " << processed << "\nskipped " << skipped << "\nseconds " << busy.count()
        << "\nscene_model_bytes " << peak_bytes << '\n';
  std::cout << processed << " frames (" << skipped << " skipped), " << blobs_total << " foreground blobs -> "
            << out.string() << '\n';
  return 0;
}

struct TrainOptions {
  std::string corpus;
  int iterations = 3;
  std::string out;
  std::string config;
  int stride = 1;
};

int run_train(const TrainOptions& o) {
  TrainingOptions opt;
  opt.config = load_config(o.config);
  opt.iterations = o.iterations;
  opt.sample_stride = o.stride;
  const DirectoryCorpus corpus(o.corpus);
  const TrainingReport rep = train_model(corpus, opt);
  for (const std::string& w : rep.warnings) std::cerr << "warning: " << w << '\n';
  if (const fs::path parent = fs::path(o.out).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream os(o.out);
  if (!os) throw CliError("cannot write " + o.out);
  write_classifier_model(os, rep.model);
  std::cout << corpus.sequence_count() << " sequences, " << rep.pair_count << " block/mode pairs; t_match "
            << rep.model.weights.t_match << " (TPR " << rep.match_tpr << ", FPR " << rep.match_fpr << ")\n";
  for (int it = 1; it <= rep.model.lambda.iterations(); ++it) {
    std::cout << "lambda(" << it << ", 0..4):";
    for (double v : rep.model.lambda.row(it)) std::cout << ' ' << v;
    std::cout << '\n';
  }
  std::cout << "model written to " << o.out << '\n';
  return 0;
}

/// Foreground blocks of a detection mask (pixel at each block origin).
BlockGrid<std::uint8_t> mask_blocks(const GrayImage& mask) {
  BlockGrid<std::uint8_t> blocks((mask.width + 7) / 8, (mask.height + 7) / 8, 0);
  for (int by = 0; by < blocks.height(); ++by) {
    for (int bx = 0; bx < blocks.width(); ++bx) blocks(bx, by) = mask.at(bx * 8, by * 8) ? 1 : 0;
  }
  return blocks;
}

/// Foreground blobs of one frame. Young components never touch, so the
/// components of the mask are the blobs.
std::vector<Blob> blobs_from_mask(const BlockGrid<std::uint8_t>& blocks) {
  AgeImage age(blocks.width(), blocks.height(), 0);
  for (std::size_t i = 0; i < blocks.size(); ++i) age[i] = blocks[i];
  std::vector<Blob> out;
  for (Blob& b : connected_components(age, 0)) {
    if (b.young()) out.push_back(std::move(b));
  }
  return out;
}

/// Ground-truth directory holding masks/ and boxes.txt for a sequence.
fs::path gt_dir(const fs::path& p) { return fs::is_directory(p / "gt") ? p / "gt" : p; }

SequenceEvaluation evaluate_sequence(const std::string& name, const fs::path& det, const fs::path& gt_root) {
  const fs::path gt = gt_dir(gt_root);
  if (!fs::is_directory(gt / "masks")) throw CliError("no ground-truth masks under " + gt.string());
  std::map<FrameIndex, std::vector<GtBox>> boxes;
  if (std::ifstream bs(gt / "boxes.txt"); bs) boxes = read_gt_boxes(bs);

  SequenceEvaluation ev;
  ev.name = name;
  for (const fs::path& gt_mask : sorted_files(gt / "masks", ".pgm")) {
    const fs::path det_mask = det / "masks" / gt_mask.filename();
    if (!fs::exists(det_mask)) continue;
    const GrayImage truth = read_pgm(gt_mask);
    const GrayImage detection = read_pgm(det_mask);
    ev.pixels += pixel_counts(detection, truth);
    const BlockGrid<std::uint8_t> blocks = mask_blocks(detection);
    const auto frame = static_cast<FrameIndex>(std::stoul(gt_mask.stem().string()));
    const auto it = boxes.find(frame);
    ev.suitability += associate_frame(blobs_from_mask(blocks), it == boxes.end() ? std::vector<GtBox>{} : it->second,
                                      blocks.width());
    ++ev.frames;
  }
  if (ev.frames == 0) throw CliError("no detection masks in " + (det / "masks").string() + " match the ground truth");
  if (std::ifstream st(det / "stats.txt"); st) {
    std::string key;
    double v = 0;
    while (st >> key >> v) {
      if (key == "frames") ev.resources.frames = static_cast<std::size_t>(v);
      else if (key == "seconds") ev.resources.seconds = v;
      else if (key == "scene_model_bytes") ev.resources.scene_bytes = static_cast<std::size_t>(v);
    }
  }
  return ev;
}

struct EvalOptions {
  std::string detections;
  std::string gt;
  std::string csv;
};

int run_eval(const EvalOptions& o) {
  const fs::path det(o.detections), gt(o.gt);
  EvalReport report;
  if (fs::is_directory(det / "masks")) {
    report.sequences.push_back(evaluate_sequence(det.filename().string(), det, gt));
  } else {
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(det)) {
      if (e.is_directory() && fs::is_directory(e.path() / "masks")) dirs.push_back(e.path());
    }
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw CliError("no detection output (masks/) under " + det.string());
    for (const fs::path& d : dirs) {
      report.sequences.push_back(evaluate_sequence(d.filename().string(), d, gt / d.filename()));
    }
  }
  report.write_summary(std::cout);
  if (!o.csv.empty()) {
    std::ofstream os(o.csv);
    if (!os) throw CliError("cannot write " + o.csv);
    report.write_csv(os);
  } else {
    report.write_csv(std::cout);
  }
  return 0;
}

struct BenchOptions {
  std::string input;
  std::size_t frames = 200;
  std::string model = kDefaultModel.string();
  std::string config;
  std::uint64_t seed = 7;
};

int run_bench(const BenchOptions& o) {
  std::vector<std::vector<std::uint8_t>> frames;
  std::string source;
  if (o.input.empty()) {
    SyntheticSpec spec;
    spec.width = 768;
    spec.height = 576;
    spec.frames = static_cast<int>(o.frames);
    spec.seed = o.seed;
    spec.quiet_frames = std::min(spec.quiet_frames, spec.frames / 4);
    spec.min_size = 48;
    spec.max_size = 160;
    const SyntheticSequence seq(spec);
    for (int f = 0; f < spec.frames; ++f) frames.push_back(seq.jpeg(f));
    source = "synthetic 768x576 MJPEG";
  } else {
    frames = load_frames(o.input);
    source = o.input;
  }
  if (frames.empty()) throw CliError("no frames in " + (o.input.empty() ? std::string("input") : o.input));
  Pipeline pipeline(load_config(o.config), load_model(o.model));
  std::size_t n = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < o.frames; ++i) {
    pipeline.process_jpeg(frames[i % frames.size()]);
    ++n;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!pipeline.has_scene()) throw CliError("no decodable frames");
  const SceneModel& scene = pipeline.scene();
  std::vector<std::size_t> counts(scene.block_count());
  for (std::size_t b = 0; b < counts.size(); ++b) counts[b] = scene.mode_count(b);
  const std::size_t bytes = scene_model_bytes(scene);
  const std::size_t summed = scene_model_bytes(counts);
  const std::size_t ceiling = scene.block_count() * static_cast<std::size_t>(scene.max_modes()) * kModeRecordBytes;
  std::cout << "input:              " << source << " (" << scene.width_blocks() * 8 << "x" << scene.height_blocks() * 8
            << ")\n"
            << "frames:             " << n << "\n"
            << "seconds:            " << seconds << "\n"
            << "frames per second:  " << (seconds > 0 ? n / seconds : 0.0) << "\n"
            << "scene model bytes:  " << bytes << " (" << bytes / 1024.0 << " KB, " << scene.total_modes()
            << " modes)\n"
            << "per-block sum:      " << summed << (summed == bytes ? " (consistent)" : " (MISMATCH)") << "\n"
            << "at max_modes:       " << ceiling << " (" << ceiling / 1024.0 << " KB)\n";
  return summed == bytes ? 0 : 1;
}

struct SynthOptions {
  std::string out;
  int sequences = 8;
  std::uint64_t seed = 1000;
  int frames = 200;
  int width = 320;
  int height = 240;
};

int run_synth(const SynthOptions& o) {
  SyntheticSpec base;
  base.seed = o.seed;
  base.frames = o.frames;
  base.width = o.width;
  base.height = o.height;
  const auto specs = synthetic_specs(base, o.sequences);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    std::ostringstream name;
    name << "seq" << std::setw(3) << std::setfill('0') << i;
    SyntheticSequence(specs[i]).write(fs::path(o.out) / name.str());
  }
  std::cout << specs.size() << " sequences written to " << o.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block-level background modelling on JPEG DCT coefficients"};
  app.require_subcommand(1);

  DetectOptions det;
  auto* detect = app.add_subcommand("detect", "Detect foreground blobs in a JPEG/MJPEG input");
  detect->add_option("--input", det.input, "JPEG file, MJPEG file, directory of JPEGs, or http MJPEG URL")->required();
  detect->add_option("--model", det.model, "Classifier model file")->capture_default_str();
  detect->add_option("--config", det.config, "Model configuration file (default: shipped config)");
  detect->add_option("--out", det.out, "Output directory")->required();
  detect->add_flag("--emit-age-images", det.emit_age, "Write age images (PGM) per frame");
  detect->add_flag("--emit-scores", det.emit_scores, "Write per-block decision scores per frame");
  detect->add_option("--max-frames", det.max_frames, "Stop after this many input frames (0 = all)");

  TrainOptions tr;
  auto* train = app.add_subcommand("train", "Train a classifier model from a labelled corpus");
  train->add_option("--corpus", tr.corpus, "Sequence directory or directory of sequences")->required();
  train->add_option("--iterations", tr.iterations, "Spatial iterations to train lambda for")
      ->capture_default_str()
      ->check(CLI::Range(0, 64));
  train->add_option("--out", tr.out, "Model file to write")->required();
  train->add_option("--config", tr.config, "Model configuration file (default: shipped config)");
  train->add_option("--stride", tr.stride, "Sample every n-th frame")->capture_default_str()->check(CLI::PositiveNumber);

  EvalOptions ev;
  auto* eval = app.add_subcommand("eval", "Score detections against ground truth");
  eval->add_option("--detections", ev.detections, "detect output directory (or a directory of them)")->required();
  eval->add_option("--gt", ev.gt, "Ground-truth sequence directory (or a directory of them)")->required();
  eval->add_option("--csv", ev.csv, "Write the CSV report here instead of stdout");

  BenchOptions be;
  auto* bench = app.add_subcommand("bench", "Measure throughput and scene-model memory");
  bench->add_option("--input", be.input, "JPEG/MJPEG input (default: synthetic 768x576 sequence)");
  bench->add_option("--frames", be.frames, "Frames to process")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--model", be.model, "Classifier model file")->capture_default_str();
  bench->add_option("--config", be.config, "Model configuration file (default: shipped config)");
  bench->add_option("--seed", be.seed, "Seed of the synthetic input")->capture_default_str();

  SynthOptions sy;
  auto* synth = app.add_subcommand("synth", "Write a synthetic labelled corpus");
  synth->add_option("--out", sy.out, "Output directory")->required();
  synth->add_option("--sequences", sy.sequences, "Number of sequences")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--seed", sy.seed, "Seed of the first sequence")->capture_default_str();
  synth->add_option("--frames", sy.frames, "Frames per sequence")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--width", sy.width, "Frame width")->capture_default_str()->check(CLI::Range(8, 8192));
  synth->add_option("--height", sy.height, "Frame height")->capture_default_str()->check(CLI::Range(8, 8192));

  CLI11_PARSE(app, argc, argv);
  try {
    if (*detect) return run_detect(det);
    if (*train) return run_train(tr);
    if (*eval) return run_eval(ev);
    if (*bench) return run_bench(be);
    if (*synth) return run_synth(sy);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
