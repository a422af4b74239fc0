#pragma once

// Block-to-mode matching: the weighted coefficient-difference score, the
// active mode bonus, and the neighbour-based spatial correction passes.
//
// Scores are oriented so that higher means "more likely the same appearance".
// A block whose best score falls below t_match creates a new mode.

#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dctscene/decision.hpp"
#include "dctscene/features.hpp"
#include "dctscene/scene_model.hpp"

namespace dctscene {

struct MatchWeights {
  std::array<double, kFeatureCount> a{};
  double t_match = 0.0;

  bool operator==(const MatchWeights&) const = default;
};

struct BonusConfig {
  double value = 0.0;
  FrameIndex window = 0;

  static BonusConfig from(const ModelConfig& cfg) { return {cfg.bonus_value, cfg.bonus_window}; }
};

inline constexpr int kMaxSimilarNeighbours = 4;

/// Score adjustment indexed by spatial iteration (1-based) and the number of
/// temporally similar neighbours (0..4).
class LambdaTable {
 public:
  using Row = std::array<double, kMaxSimilarNeighbours + 1>;

  LambdaTable() = default;
  explicit LambdaTable(int iterations) : rows_(static_cast<std::size_t>(iterations), Row{}) {}
  explicit LambdaTable(std::vector<Row> rows) : rows_(std::move(rows)) {}

  int iterations() const noexcept { return static_cast<int>(rows_.size()); }

  double operator()(int iteration, int similar) const {
    return rows_.at(static_cast<std::size_t>(iteration - 1)).at(static_cast<std::size_t>(similar));
  }
  Row& row(int iteration) { return rows_.at(static_cast<std::size_t>(iteration - 1)); }
  const Row& row(int iteration) const { return rows_.at(static_cast<std::size_t>(iteration - 1)); }
  void push_row(const Row& r) { rows_.push_back(r); }

  bool operator==(const LambdaTable&) const = default;

 private:
  std::vector<Row> rows_;
};

struct ClassifierModel {
  MatchWeights weights;
  LambdaTable lambda;

  bool operator==(const ClassifierModel&) const = default;
};

inline double kappa(const FeatureBlock& block, const ModeModel& mode, const MatchWeights& w) noexcept {
  double sum = 0.0;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    sum += w.a[i] * std::abs(block[i] - static_cast<double>(mode.coeffs[i]));
  }
  return sum;
}

inline bool bonus_applies(const ModeModel& mode, const BonusConfig& bonus, FrameIndex current) noexcept {
  return current >= mode.last_matched_frame && current - mode.last_matched_frame <= bonus.window;
}

/// kappa plus the active mode bonus.
inline double mode_score(const FeatureBlock& block, const ModeModel& mode, const MatchWeights& w,
                         const BonusConfig& bonus, FrameIndex current) noexcept {
  const double k = kappa(block, mode, w);
  return bonus_applies(mode, bonus, current) ? k + bonus.value : k;
}

namespace detail {

/// True when candidate i beats the incumbent: higher score, then higher hit
/// count, then earlier creation. Full ties keep the incumbent (lower slot).
inline bool beats(double score_i, const ModeModel& mi, double score_b, const ModeModel& mb) noexcept {
  if (score_i != score_b) return score_i > score_b;
  if (mi.hit_count != mb.hit_count) return mi.hit_count > mb.hit_count;
  return mi.creation_frame < mb.creation_frame;
}

template <typename ScoreOf>
MatchDecision select_mode(std::span<const ModeModel> modes, ScoreOf&& score_of, double t_match, int x,
                          int y, FrameIndex current) {
  if (modes.empty()) return MatchDecision::create_new(x, y, t_match, current);
  std::size_t best = 0;
  double best_score = score_of(0);
  for (std::size_t i = 1; i < modes.size(); ++i) {
    const double s = score_of(i);
    if (beats(s, modes[i], best_score, modes[best])) {
      best = i;
      best_score = s;
    }
  }
  if (best_score >= t_match) {
    return MatchDecision::match(x, y, static_cast<int>(best), best_score, modes[best].creation_frame);
  }
  return MatchDecision::create_new(x, y, t_match, current);
}

}  // namespace detail

/// Picks the best mode for one block, or create_new when nothing reaches
/// t_match. A create_new decision carries score = t_match.
inline MatchDecision classify_block(const FeatureBlock& block, std::span<const ModeModel> modes,
                                    const MatchWeights& w, const BonusConfig& bonus, FrameIndex current,
                                    int x = 0, int y = 0) {
  return detail::select_mode(
      modes, [&](std::size_t i) { return mode_score(block, modes[i], w, bonus, current); }, w.t_match, x, y,
      current);
}

/// Base scores (kappa + bonus) of every live mode of every block for one frame.
class FrameScores {
 public:
  FrameScores() = default;
  FrameScores(std::size_t blocks, int max_modes)
      : max_modes_(max_modes), base_(blocks * static_cast<std::size_t>(max_modes), 0.0) {}

  double& at(std::size_t block, std::size_t slot) { return base_[block * max_modes_ + slot]; }
  double at(std::size_t block, std::size_t slot) const { return base_[block * max_modes_ + slot]; }

 private:
  int max_modes_ = 0;
  std::vector<double> base_;
};

inline DecisionGrid classify_frame(const SceneModel& scene, const FeatureGrid& features, const MatchWeights& w,
                                   const BonusConfig& bonus, FrameScores& scores) {
  if (features.width() != scene.width_blocks() || features.height() != scene.height_blocks()) {
    throw std::invalid_argument("feature grid does not match scene dimensions");
  }
  const FrameIndex now = scene.current_frame();
  scores = FrameScores(scene.block_count(), scene.max_modes());
  DecisionGrid out(features.width(), features.height());
  for (int y = 0; y < features.height(); ++y) {
    for (int x = 0; x < features.width(); ++x) {
      const std::size_t b = scene.block_index(x, y);
      const auto modes = scene.modes(b);
      for (std::size_t i = 0; i < modes.size(); ++i) {
        scores.at(b, i) = mode_score(features[b], modes[i], w, bonus, now);
      }
      out[b] = detail::select_mode(
          modes, [&](std::size_t i) { return scores.at(b, i); }, w.t_match, x, y, now);
    }
  }
  return out;
}

/// Number of 4-connected neighbours whose selected mode was created within
/// t_similar frames of candidate_creation.
inline int count_similar_neighbors(const DecisionGrid& decisions, int x, int y, FrameIndex candidate_creation,
                                   FrameIndex t_similar) noexcept {
  int count = 0;
  for (int k = 0; k < 4; ++k) {
    const int nx = x + kNeighbourDx[k];
    const int ny = y + kNeighbourDy[k];
    if (!decisions.contains(nx, ny)) continue;
    const auto diff = static_cast<std::int64_t>(decisions(nx, ny).matched_creation_frame) -
                      static_cast<std::int64_t>(candidate_creation);
    if ((diff < 0 ? -diff : diff) <= static_cast<std::int64_t>(t_similar)) ++count;
  }
  return count;
}

/// One synchronous spatial pass: every block re-ranks its modes by
/// base + lambda(iteration, A), reading A from `previous` only. The
/// create_new option competes at t_match without adjustment.
inline DecisionGrid spatial_pass(const SceneModel& scene, const FrameScores& scores, const DecisionGrid& previous,
                                 const LambdaTable& lambda, int iteration, double t_match,
                                 FrameIndex t_similar) {
  const FrameIndex now = scene.current_frame();
  DecisionGrid out(previous.width(), previous.height());
  for (int y = 0; y < previous.height(); ++y) {
    for (int x = 0; x < previous.width(); ++x) {
      const std::size_t b = scene.block_index(x, y);
      const auto modes = scene.modes(b);
      out[b] = detail::select_mode(
          modes,
          [&](std::size_t i) {
            const int a = count_similar_neighbors(previous, x, y, modes[i].creation_frame, t_similar);
            return scores.at(b, i) + lambda(iteration, a);
          },
          t_match, x, y, now);
    }
  }
  return out;
}

inline DecisionGrid spatial_iterate(const SceneModel& scene, const FrameScores& scores, DecisionGrid decisions,
                                    const LambdaTable& lambda, double t_match, FrameIndex t_similar,
                                    int iterations) {
  if (iterations > lambda.iterations()) {
    throw std::invalid_argument("lambda table has " + std::to_string(lambda.iterations()) +
                                " rows, " + std::to_string(iterations) + " iterations requested");
  }
  for (int it = 1; it <= iterations; ++it) {
    decisions = spatial_pass(scene, scores, decisions, lambda, it, t_match, t_similar);
  }
  return decisions;
}

// Model file: whitespace-separated numbers, '#' starts a comment.
// 8 weights, t_match, then one row of 5 lambda values per iteration.

inline ClassifierModel read_classifier_model(std::istream& is) {
  std::vector<double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || !std::isfinite(v)) {
        throw std::runtime_error("model file line " + std::to_string(line_no) + ": bad number '" + tok + "'");
      }
      values.push_back(v);
    }
  }
  constexpr std::size_t kHead = kFeatureCount + 1;
  constexpr std::size_t kRow = kMaxSimilarNeighbours + 1;
  if (values.size() < kHead || (values.size() - kHead) % kRow != 0) {
    throw std::runtime_error("model file must hold 8 weights, t_match and rows of 5 lambda values; got " +
                             std::to_string(values.size()) + " numbers");
  }
  ClassifierModel m;
  for (std::size_t i = 0; i < kFeatureCount; ++i) m.weights.a[i] = values[i];
  m.weights.t_match = values[kFeatureCount];
  for (std::size_t at = kHead; at < values.size(); at += kRow) {
    LambdaTable::Row r{};
    for (std::size_t a = 0; a < kRow; ++a) r[a] = values[at + a];
    m.lambda.push_row(r);
  }
  return m;
}

inline void write_classifier_model(std::ostream& os, const ClassifierModel& m) {
  const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
  os << "# weights a0..a7\n";
  for (std::size_t i = 0; i < kFeatureCount; ++i) os << (i ? " " : "") << m.weights.a[i];
  os << "\n# t_match\n" << m.weights.t_match << "\n";
  os << "# lambda rows: iteration 1.." << m.lambda.iterations() << ", similar neighbours 0..4\n";
  for (int it = 1; it <= m.lambda.iterations(); ++it) {
    const auto& r = m.lambda.row(it);
    for (std::size_t a = 0; a < r.size(); ++a) os << (a ? " " : "") << r[a];
    os << "\n";
  }
  os.precision(old_precision);
}

}  // namespace dctscene
