#pragma once

#include "dctscene/grid.hpp"

namespace dctscene {

/// Per-block classification outcome.
struct MatchDecision {
  enum class Outcome : std::uint8_t { create_new, matched };

  int x = 0;
  int y = 0;
  Outcome outcome = Outcome::create_new;
  int mode_index = -1;  // valid when matched
  double score = 0.0;
  FrameIndex matched_creation_frame = 0;  // current frame for create_new

  bool matched() const noexcept { return outcome == Outcome::matched; }

  static MatchDecision create_new(int x, int y, double score, FrameIndex current) {
    return {x, y, Outcome::create_new, -1, score, current};
  }
  static MatchDecision match(int x, int y, int mode, double score, FrameIndex creation) {
    return {x, y, Outcome::matched, mode, score, creation};
  }

  bool operator==(const MatchDecision&) const = default;
};

using DecisionGrid = BlockGrid<MatchDecision>;

}  // namespace dctscene
