#pragma once

// Per-frame processing: decode to DCT coefficients, classify against the
// scene model, run the spatial passes, build the age image, update and
// expire modes, and extract foreground blobs.

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dctscene/blobs.hpp"
#include "dctscene/classifier.hpp"
#include "dctscene/features.hpp"
#include "dctscene/jpeg_decoder.hpp"
#include "dctscene/scene_model.hpp"

namespace dctscene {

struct FrameResult {
  std::size_t input_index = 0;  // position in the input stream
  FrameIndex frame = 0;         // scene model frame the result belongs to
  int width = 0;                // pixels
  int height = 0;
  bool skipped = false;  // undecodable input; the model was left untouched
  bool reset = false;    // the model was rebuilt before this frame
  std::string error;

  DecisionGrid decisions;
  AgeImage age;
  std::vector<Blob> components;  // every same-side component
  std::vector<Blob> blobs;       // foreground blobs
};

class Pipeline {
 public:
  Pipeline(ModelConfig config, ClassifierModel model) : config_(config), model_(std::move(model)) {
    config_.validate();
    if (config_.iterations > model_.lambda.iterations()) {
      throw std::invalid_argument("model provides " + std::to_string(model_.lambda.iterations()) +
                                  " lambda rows but the configuration asks for " +
                                  std::to_string(config_.iterations) + " iterations");
    }
  }

  const ModelConfig& config() const noexcept { return config_; }
  const ClassifierModel& model() const noexcept { return model_; }
  bool has_scene() const noexcept { return scene_ != nullptr; }
  const SceneModel& scene() const { return *scene_; }
  const FrameScores& last_scores() const noexcept { return scores_; }
  const std::vector<std::string>& events() const noexcept { return events_; }
  std::size_t frames_seen() const noexcept { return inputs_; }

  /// Decodes and processes one JPEG frame. Malformed or unsupported input
  /// yields a skipped result; the stream continues with the next frame.
  FrameResult process_jpeg(std::span<const std::uint8_t> jpeg) {
    CoefficientPlanes planes;
    try {
      planes = decode_jpeg_dct(jpeg);
    } catch (const JpegError& e) {
      FrameResult r;
      r.input_index = inputs_++;
      r.skipped = true;
      r.error = e.what();
      if (scene_) r.frame = scene_->current_frame();
      events_.push_back("frame " + std::to_string(r.input_index) + " skipped: " + r.error);
      return r;
    }
    return process_features(extract_features(planes), planes.width, planes.height);
  }

  /// Processes one frame given its block features.
  FrameResult process_features(const FeatureGrid& features, int width_px = 0, int height_px = 0) {
    FrameResult r;
    r.input_index = inputs_++;
    r.width = width_px ? width_px : features.width() * 8;
    r.height = height_px ? height_px : features.height() * 8;
    if (!scene_ || scene_->width_blocks() != features.width() || scene_->height_blocks() != features.height()) {
      if (scene_) {
        events_.push_back("frame " + std::to_string(r.input_index) + ": dimensions changed to " +
                          std::to_string(r.width) + "x" + std::to_string(r.height) + "; scene model reset");
        r.reset = true;
      }
      scene_ = std::make_unique<SceneModel>(features.width(), features.height(), config_);
    }
    SceneModel& scene = *scene_;
    const FrameIndex now = scene.current_frame();
    r.frame = now;

    r.decisions = classify_frame(scene, features, model_.weights, BonusConfig::from(config_), scores_);
    r.decisions = spatial_iterate(scene, scores_, std::move(r.decisions), model_.lambda, model_.weights.t_match,
                                  config_.t_similar, config_.iterations);
    r.age = make_age_image(r.decisions);
    apply_updates(scene, r.decisions, features);
    expire_modes(scene);
    r.components = connected_components(r.age, static_cast<std::int64_t>(now) - config_.n_bg);
    r.blobs = foreground_blobs(r.components, now, config_.n_bg, static_cast<std::size_t>(config_.min_blob_blocks));
    scene.advance_frame();
    return r;
  }

 private:
  ModelConfig config_;
  ClassifierModel model_;
  std::unique_ptr<SceneModel> scene_;
  FrameScores scores_;
  std::vector<std::string> events_;
  std::size_t inputs_ = 0;
};

}  // namespace dctscene
