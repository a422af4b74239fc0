#pragma once

// Offline estimation of the classifier model.
//
// Weights: per coefficient, histogram Naive Bayes densities of |c_i| for the
// match and no-match classes give a per-bin log-odds; the weight is the slope
// of a least-squares line through those log-odds (bins weighted by
// occupancy). The match threshold and every lambda entry are ROC operating
// points where TPR + FPR = 1.
//
// Ground truth comes from per-block content labels. The training scene is
// teacher-forced: each block is updated with the mode whose creation-time
// label equals the block's current label, or a new mode when none does.
// Every mode of every block is a lambda sample, positive for the mode whose
// label matches.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dctscene/classifier.hpp"
#include "dctscene/features.hpp"
#include "dctscene/roc.hpp"
#include "dctscene/scene_model.hpp"

namespace dctscene {

/// Absolute coefficient differences between an input block and a mode.
struct LabeledPair {
  std::array<double, kFeatureCount> c{};
  bool match = false;
};

struct WeightTraining {
  std::array<double, kFeatureCount> weights{};
  std::vector<std::string> warnings;
};

inline constexpr int kDefaultHistogramBins = 64;

/// Relative pseudo-mass spread over the bins of each class density. Being a
/// fraction of the class total, it leaves duplication of the data set
/// without effect.
inline constexpr double kDensityFloor = 0.01;

inline WeightTraining train_weights(std::span<const LabeledPair> data, int bins = kDefaultHistogramBins) {
  if (bins < 2) throw TrainingError("need at least 2 histogram bins");
  double n_match = 0, n_other = 0;
  for (const LabeledPair& p : data) (p.match ? n_match : n_other) += 1;
  if (n_match == 0 || n_other == 0) throw TrainingError("weight training needs both match and no-match pairs");

  WeightTraining out;
  const double prior = std::log(n_match / n_other);
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    double lo = data[0].c[i], hi = data[0].c[i];
    for (const LabeledPair& p : data) {
      lo = std::min(lo, p.c[i]);
      hi = std::max(hi, p.c[i]);
    }
    if (!(hi > lo)) {
      out.warnings.push_back("coefficient " + std::to_string(i) + " has zero variance; weight set to 0");
      continue;
    }
    const double width = (hi - lo) / bins;
    std::vector<double> hm(static_cast<std::size_t>(bins), 0.0), ho(static_cast<std::size_t>(bins), 0.0);
    for (const LabeledPair& p : data) {
      const auto b = std::min<std::size_t>(static_cast<std::size_t>((p.c[i] - lo) / width), bins - 1);
      (p.match ? hm : ho)[b] += 1;
    }
    // Weighted least squares of log-odds on bin centre.
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int b = 0; b < bins; ++b) {
      const double occupancy = (hm[b] + ho[b]) / (n_match + n_other);
      if (occupancy == 0) continue;
      const double pm = (hm[b] / n_match + kDensityFloor / bins) / (1 + kDensityFloor);
      const double po = (ho[b] / n_other + kDensityFloor / bins) / (1 + kDensityFloor);
      const double y = prior + std::log(pm / po);
      const double x = lo + (b + 0.5) * width;
      sw += occupancy;
      sx += occupancy * x;
      sy += occupancy * y;
      sxx += occupancy * x * x;
      sxy += occupancy * x * y;
    }
    const double mx = sx / sw;
    const double var = sxx / sw - mx * mx;
    if (!(var > 0)) {
      out.warnings.push_back("coefficient " + std::to_string(i) + " occupies a single bin; weight set to 0");
      continue;
    }
    out.weights[i] = (sxy / sw - mx * (sy / sw)) / var;
  }
  return out;
}

/// One candidate mode seen during spatial training.
struct LambdaSample {
  int similar = 0;     // A, 0..4
  double score = 0.0;  // kappa + bonus
  bool correct = false;
};

/// lambda(I, A) = t_match - theta_A, where theta_A is the ROC threshold of the
/// candidates with A similar neighbours. Adding lambda moves that group's
/// operating point onto t_match.
inline LambdaTable::Row fit_lambda_row(std::span<const LambdaSample> samples, double t_match, int iteration,
                                       std::vector<std::string>& warnings) {
  LambdaTable::Row row{};
  for (int a = 0; a <= kMaxSimilarNeighbours; ++a) {
    std::vector<ScoredSample> group;
    bool has_pos = false, has_neg = false;
    for (const LambdaSample& s : samples) {
      if (s.similar != a) continue;
      group.push_back({s.score, s.correct});
      (s.correct ? has_pos : has_neg) = true;
    }
    const std::string cell = "lambda(" + std::to_string(iteration) + ", " + std::to_string(a) + ")";
    if (group.empty()) {
      warnings.push_back(cell + ": no samples; set to 0");
      continue;
    }
    if (!has_pos || !has_neg) {
      warnings.push_back(cell + ": only one class among " + std::to_string(group.size()) + " samples; set to 0");
      continue;
    }
    const RocSelection sel = roc_threshold(group);
    if (sel.degenerate) warnings.push_back(cell + ": all scores identical");
    row[static_cast<std::size_t>(a)] = t_match - sel.point.threshold;
  }
  return row;
}

/// Per-block content identity. Equal labels mean equal appearance.
using LabelGrid = BlockGrid<std::uint64_t>;

using FrameVisitor = std::function<void(const FeatureGrid&, const LabelGrid&)>;

/// Ordered labelled sequences, replayed frame by frame.
class TrainingCorpus {
 public:
  virtual ~TrainingCorpus() = default;
  virtual std::size_t sequence_count() const = 0;
  virtual void replay(std::size_t sequence, const FrameVisitor& visit) const = 0;
};

/// Scene model driven by ground truth, with a content label per mode slot.
class TeacherScene {
 public:
  TeacherScene(int width_blocks, int height_blocks, const ModelConfig& cfg)
      : scene_(width_blocks, height_blocks, cfg),
        tags_(scene_.block_count() * static_cast<std::size_t>(cfg.max_modes), 0) {}

  const SceneModel& scene() const noexcept { return scene_; }

  /// Slot whose label equals `label`, or -1.
  int correct_slot(std::size_t block, std::uint64_t label) const {
    const std::size_t n = scene_.mode_count(block);
    for (std::size_t i = 0; i < n; ++i) {
      if (tag(block, i) == label) return static_cast<int>(i);
    }
    return -1;
  }

  std::uint64_t slot_label(std::size_t block, std::size_t slot) const { return tag(block, slot); }

  void step(const FeatureGrid& features, const LabelGrid& labels) {
    const FrameIndex now = scene_.current_frame();
    for (std::size_t b = 0; b < scene_.block_count(); ++b) {
      const int slot = correct_slot(b, labels[b]);
      const int x = static_cast<int>(b % scene_.width_blocks());
      const int y = static_cast<int>(b / scene_.width_blocks());
      const MatchDecision d = slot >= 0 ? MatchDecision::match(x, y, slot, 0.0, 0)
                                        : MatchDecision::create_new(x, y, 0.0, now);
      apply_block_update(scene_, b, d, features[b], [&](std::size_t victim) { erase_tag(b, victim); });
      if (slot < 0) tag(b, scene_.mode_count(b) - 1) = labels[b];
    }
    for (std::size_t b = 0; b < scene_.block_count(); ++b) {
      expire_block(scene_, b, [&](std::size_t i) { erase_tag(b, i); });
    }
    scene_.advance_frame();
  }

 private:
  std::uint64_t& tag(std::size_t block, std::size_t slot) { return tags_[block * scene_.max_modes() + slot]; }
  std::uint64_t tag(std::size_t block, std::size_t slot) const { return tags_[block * scene_.max_modes() + slot]; }

  void erase_tag(std::size_t block, std::size_t slot) {
    const std::size_t n = scene_.mode_count(block);
    for (std::size_t i = slot; i + 1 < n; ++i) tag(block, i) = tag(block, i + 1);
  }

  SceneModel scene_;
  std::vector<std::uint64_t> tags_;
};

struct TrainingOptions {
  ModelConfig config;
  int iterations = 3;
  int histogram_bins = kDefaultHistogramBins;
  int sample_stride = 1;  // collect samples on every n-th frame
};

struct TrainingReport {
  ClassifierModel model;
  std::vector<std::string> warnings;
  std::size_t pair_count = 0;
  double match_tpr = 0.0;
  double match_fpr = 0.0;
  std::vector<std::size_t> lambda_sample_counts;
};

namespace detail {

template <typename OnFrame>
void replay_teacher(const TrainingCorpus& corpus, const ModelConfig& cfg, OnFrame&& on_frame) {
  for (std::size_t s = 0; s < corpus.sequence_count(); ++s) {
    std::optional<TeacherScene> teacher;
    std::size_t frame = 0;
    corpus.replay(s, [&](const FeatureGrid& f, const LabelGrid& labels) {
      if (!teacher || teacher->scene().width_blocks() != f.width() ||
          teacher->scene().height_blocks() != f.height()) {
        teacher.emplace(f.width(), f.height(), cfg);
      }
      on_frame(*teacher, f, labels, frame++);
      teacher->step(f, labels);
    });
  }
}

}  // namespace detail

/// Trains weights, t_match and `iterations` lambda rows from a corpus.
inline TrainingReport train_model(const TrainingCorpus& corpus, const TrainingOptions& opt) {
  opt.config.validate();
  if (opt.sample_stride < 1) throw TrainingError("sample_stride must be >= 1");
  TrainingReport report;
  const auto stride = static_cast<std::size_t>(opt.sample_stride);

  std::vector<LabeledPair> pairs;
  detail::replay_teacher(corpus, opt.config,
                         [&](const TeacherScene& t, const FeatureGrid& f, const LabelGrid& labels, std::size_t frame) {
                           if (frame % stride != 0) return;
                           const SceneModel& sc = t.scene();
                           for (std::size_t b = 0; b < sc.block_count(); ++b) {
                             const int correct = t.correct_slot(b, labels[b]);
                             const auto modes = sc.modes(b);
                             for (std::size_t i = 0; i < modes.size(); ++i) {
                               LabeledPair p;
                               for (std::size_t k = 0; k < kFeatureCount; ++k) {
                                 p.c[k] = std::abs(f[b][k] - static_cast<double>(modes[i].coeffs[k]));
                               }
                               p.match = static_cast<int>(i) == correct;
                               pairs.push_back(p);
                             }
                           }
                         });
  report.pair_count = pairs.size();
  WeightTraining wt = train_weights(pairs, opt.histogram_bins);
  report.warnings = std::move(wt.warnings);
  MatchWeights& w = report.model.weights;
  w.a = wt.weights;

  std::vector<ScoredSample> kappas;
  kappas.reserve(pairs.size());
  for (const LabeledPair& p : pairs) {
    double k = 0.0;
    for (std::size_t i = 0; i < kFeatureCount; ++i) k += w.a[i] * p.c[i];
    kappas.push_back({k, p.match});
  }
  pairs = {};
  const RocSelection tsel = roc_threshold(kappas);
  if (tsel.degenerate) report.warnings.push_back("t_match: all training scores identical");
  w.t_match = tsel.point.threshold;
  report.match_tpr = tsel.point.tpr;
  report.match_fpr = tsel.point.fpr;
  kappas = {};

  const BonusConfig bonus = BonusConfig::from(opt.config);
  for (int iteration = 1; iteration <= opt.iterations; ++iteration) {
    std::vector<LambdaSample> samples;
    detail::replay_teacher(
        corpus, opt.config, [&](const TeacherScene& t, const FeatureGrid& f, const LabelGrid& labels, std::size_t frame) {
          if (frame % stride != 0) return;
          const SceneModel& sc = t.scene();
          FrameScores scores;
          DecisionGrid decisions = classify_frame(sc, f, w, bonus, scores);
          for (int it = 1; it < iteration; ++it) {
            decisions = spatial_pass(sc, scores, decisions, report.model.lambda, it, w.t_match, opt.config.t_similar);
          }
          for (int y = 0; y < f.height(); ++y) {
            for (int x = 0; x < f.width(); ++x) {
              const std::size_t b = sc.block_index(x, y);
              const int correct = t.correct_slot(b, labels[b]);
              const auto modes = sc.modes(b);
              for (std::size_t i = 0; i < modes.size(); ++i) {
                const int a = count_similar_neighbors(decisions, x, y, modes[i].creation_frame, opt.config.t_similar);
                samples.push_back({a, scores.at(b, i), static_cast<int>(i) == correct});
              }
            }
          }
        });
    report.lambda_sample_counts.push_back(samples.size());
    report.model.lambda.push_row(fit_lambda_row(samples, w.t_match, iteration, report.warnings));
  }
  return report;
}

}  // namespace dctscene
