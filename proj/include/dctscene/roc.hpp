#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dctscene {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScoredSample {
  double score = 0.0;
  bool positive = false;
};

/// Operating point for the rule "predict positive when score >= threshold".
struct RocPoint {
  double threshold = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  std::uint64_t true_positives = 0;
  std::uint64_t false_positives = 0;
};

/// Every achievable cut point, from "everything positive" (tpr = fpr = 1)
/// to "nothing positive" (tpr = fpr = 0). Thresholds sit midway between
/// adjacent distinct scores.
inline std::vector<RocPoint> roc_curve(std::span<const ScoredSample> samples) {
  std::uint64_t pos = 0, neg = 0;
  for (const ScoredSample& s : samples) (s.positive ? pos : neg)++;
  if (pos == 0 || neg == 0) throw TrainingError("ROC analysis needs both classes");

  std::vector<ScoredSample> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end(), [](const ScoredSample& a, const ScoredSample& b) { return a.score < b.score; });

  std::vector<RocPoint> curve;
  std::uint64_t tp = pos, fp = neg;  // samples at or above the current cut
  double prev = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double v = sorted[i].score;
    double threshold = v;
    if (i > 0) {
      threshold = prev / 2 + v / 2;
      if (!(threshold > prev && threshold <= v)) threshold = v;
    }
    curve.push_back({threshold, static_cast<double>(tp) / pos, static_cast<double>(fp) / neg, tp, fp});
    std::size_t j = i;
    for (; j < sorted.size() && sorted[j].score == v; ++j) (sorted[j].positive ? tp : fp)--;
    prev = v;
    i = j;
  }
  curve.push_back({std::nextafter(prev, std::numeric_limits<double>::infinity()), 0.0, 0.0, 0, 0});
  return curve;
}

struct RocSelection {
  RocPoint point;
  bool degenerate = false;  // only one distinct score value
};

/// Cut point minimising |TPR + FPR - 1|; ties go to the higher TPR, then to
/// the lower FPR. The objective is compared on the raw counts, so equal
/// operating points compare equal exactly.
inline RocSelection roc_threshold(std::span<const ScoredSample> samples) {
  const std::vector<RocPoint> curve = roc_curve(samples);
  const std::uint64_t pos = curve.front().true_positives;
  const std::uint64_t neg = curve.front().false_positives;
  auto objective = [&](const RocPoint& p) {
    const auto v = static_cast<long double>(p.true_positives) * neg +
                   static_cast<long double>(p.false_positives) * pos - static_cast<long double>(pos) * neg;
    return v < 0 ? -v : v;
  };
  std::size_t best = 0;
  for (std::size_t k = 1; k < curve.size(); ++k) {
    const auto ok = objective(curve[k]);
    const auto ob = objective(curve[best]);
    if (ok < ob || (ok == ob && (curve[k].true_positives > curve[best].true_positives ||
                                 (curve[k].true_positives == curve[best].true_positives &&
                                  curve[k].false_positives < curve[best].false_positives)))) {
      best = k;
    }
  }
  return {curve[best], curve.size() == 2};
}

}  // namespace dctscene
