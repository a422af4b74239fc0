#include "support.hpp"

#include <limits>

using namespace dctscene;
using namespace dctscene::test;

namespace {

struct Oracle {
  std::uint64_t tp = 0, fp = 0;
};

/// Tries every cut "score >= v" over all sample values plus one above the
/// maximum and keeps the best by |TPR + FPR - 1|, exact in integers.
Oracle exhaustive(const std::vector<ScoredSample>& s) {
  std::int64_t P = 0, N = 0;
  for (const auto& x : s) (x.positive ? P : N)++;
  std::vector<double> cuts;
  for (const auto& x : s) cuts.push_back(x.score);
  cuts.push_back(std::numeric_limits<double>::infinity());
  Oracle best{};
  std::int64_t best_obj = std::numeric_limits<std::int64_t>::max();
  for (double c : cuts) {
    std::int64_t tp = 0, fp = 0;
    for (const auto& x : s) {
      if (x.score >= c) (x.positive ? tp : fp)++;
    }
    const std::int64_t obj = std::llabs(tp * N + fp * P - P * N);
    const bool better = obj < best_obj ||
                        (obj == best_obj && (tp > static_cast<std::int64_t>(best.tp) ||
                                             (tp == static_cast<std::int64_t>(best.tp) &&
                                              fp < static_cast<std::int64_t>(best.fp))));
    if (better) {
      best_obj = obj;
      best = {static_cast<std::uint64_t>(tp), static_cast<std::uint64_t>(fp)};
    }
  }
  return best;
}

std::vector<ScoredSample> random_samples(std::mt19937_64& rng, std::size_t n, int levels) {
  std::vector<ScoredSample> s(n);
  for (auto& x : s) {
    x.positive = rng() % 2;
    const int shift = x.positive ? levels / 4 : 0;
    x.score = static_cast<double>(static_cast<int>(rng() % static_cast<unsigned>(levels)) + shift) / 7.0 - 3.0;
  }
  s[0].positive = true;
  s[1].positive = false;
  return s;
}

}  // namespace

TEST(Roc, ThresholdMatchesExhaustiveSweep) {
  std::mt19937_64 rng(51);
  for (int t = 0; t < 400; ++t) {
    const std::size_t n = 2 + rng() % 999;
    const int levels = 2 + static_cast<int>(rng() % 200);
    const auto s = random_samples(rng, n, levels);
    const RocSelection sel = roc_threshold(s);
    const Oracle o = exhaustive(s);
    EXPECT_EQ(sel.point.true_positives, o.tp) << "trial " << t;
    EXPECT_EQ(sel.point.false_positives, o.fp) << "trial " << t;
    std::uint64_t tp = 0, fp = 0;
    for (const auto& x : s) {
      if (x.score >= sel.point.threshold) (x.positive ? tp : fp)++;
    }
    EXPECT_EQ(tp, sel.point.true_positives);
    EXPECT_EQ(fp, sel.point.false_positives);
  }
}

TEST(Roc, CurveRunsFromAllToNone) {
  const std::vector<ScoredSample> s = {{1, true}, {2, false}, {3, true}, {3, false}, {5, true}};
  const auto curve = roc_curve(s);
  ASSERT_EQ(curve.size(), 5u);
  EXPECT_EQ(curve.front().tpr, 1.0);
  EXPECT_EQ(curve.front().fpr, 1.0);
  EXPECT_EQ(curve.back().tpr, 0.0);
  EXPECT_EQ(curve.back().fpr, 0.0);
  EXPECT_DOUBLE_EQ(curve[1].threshold, 1.5);
  EXPECT_DOUBLE_EQ(curve[3].threshold, 4.0);
  for (std::size_t k = 1; k < curve.size(); ++k) {
    EXPECT_LE(curve[k].tpr, curve[k - 1].tpr);
    EXPECT_LE(curve[k].fpr, curve[k - 1].fpr);
    EXPECT_GT(curve[k].threshold, curve[k - 1].threshold);
  }
}

TEST(Roc, SeparableClassesGivePerfectCut) {
  const std::vector<ScoredSample> s = {{-4, false}, {-3, false}, {1, true}, {2, true}};
  const RocSelection sel = roc_threshold(s);
  EXPECT_EQ(sel.point.tpr, 1.0);
  EXPECT_EQ(sel.point.fpr, 0.0);
  EXPECT_DOUBLE_EQ(sel.point.threshold, -1.0);
  EXPECT_FALSE(sel.degenerate);
}

TEST(Roc, TiesPreferHigherTpr) {
  // Cuts above 0 (tpr 1, fpr 0.5) and above 1 (tpr 0, fpr 0.5) are equally
  // far from the diagonal.
  const std::vector<ScoredSample> s = {{0, false}, {1, true}, {2, false}};
  const RocSelection sel = roc_threshold(s);
  EXPECT_EQ(sel.point.true_positives, 1u);
  EXPECT_EQ(sel.point.false_positives, 1u);
  EXPECT_DOUBLE_EQ(sel.point.threshold, 0.5);
}

TEST(Roc, SingleScoreIsDegenerate) {
  const std::vector<ScoredSample> s = {{2, true}, {2, false}, {2, false}};
  EXPECT_TRUE(roc_threshold(s).degenerate);
}

TEST(Roc, OneClassThrows) {
  const std::vector<ScoredSample> s = {{1, true}, {2, true}};
  EXPECT_THROW(roc_threshold(s), TrainingError);
  EXPECT_THROW(roc_curve(std::vector<ScoredSample>{}), TrainingError);
}
