#include "support.hpp"

#include <filesystem>

using namespace dctscene;
using namespace dctscene::test;

namespace {

SyntheticSpec small_spec(std::uint64_t seed) {
  SyntheticSpec s;
  s.width = 160;
  s.height = 120;
  s.frames = 150;
  s.quiet_frames = 40;
  s.min_size = 16;
  s.max_size = 40;
  s.seed = seed;
  return s;
}

std::vector<LabeledPair> synthetic_pairs(std::mt19937_64& rng, std::size_t n) {
  std::vector<LabeledPair> out(n);
  std::exponential_distribution<double> near(1.0), far(0.1);
  std::uniform_real_distribution<double> flat(0, 50);
  for (LabeledPair& p : out) {
    p.match = rng() % 3 == 0;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      // Coefficient 7 carries no information.
      p.c[i] = i == 7 ? flat(rng) : (p.match ? near(rng) : far(rng));
    }
  }
  return out;
}

/// Held-out pairs built the same way the trainer builds them.
std::vector<ScoredSample> held_out_kappas(const TrainingCorpus& corpus, const ModelConfig& cfg, const MatchWeights& w) {
  std::vector<ScoredSample> out;
  for (std::size_t s = 0; s < corpus.sequence_count(); ++s) {
    std::optional<TeacherScene> teacher;
    corpus.replay(s, [&](const FeatureGrid& f, const LabelGrid& labels) {
      if (!teacher) teacher.emplace(f.width(), f.height(), cfg);
      const SceneModel& sc = teacher->scene();
      for (std::size_t b = 0; b < sc.block_count(); ++b) {
        const int correct = teacher->correct_slot(b, labels[b]);
        const auto modes = sc.modes(b);
        for (std::size_t i = 0; i < modes.size(); ++i) {
          out.push_back({kappa(f[b], modes[i], w), static_cast<int>(i) == correct});
        }
      }
      teacher->step(f, labels);
    });
  }
  return out;
}

}  // namespace

TEST(Training, WeightsPenaliseDifferenceAndIgnoreNoise) {
  std::mt19937_64 rng(61);
  const auto pairs = synthetic_pairs(rng, 20000);
  const WeightTraining wt = train_weights(pairs);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_LT(wt.weights[i], -0.1) << i;
  EXPECT_LT(std::abs(wt.weights[7]), 0.02);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_GT(std::abs(wt.weights[i]), 5 * std::abs(wt.weights[7]));
}

TEST(Training, WeightsInvariantUnderDuplication) {
  std::mt19937_64 rng(62);
  const auto pairs = synthetic_pairs(rng, 3000);
  std::vector<LabeledPair> twice = pairs;
  twice.insert(twice.end(), pairs.begin(), pairs.end());
  const WeightTraining a = train_weights(pairs);
  const WeightTraining b = train_weights(twice);
  for (std::size_t i = 0; i < kFeatureCount; ++i) EXPECT_NEAR(a.weights[i], b.weights[i], 1e-9 * (1 + std::abs(a.weights[i])));
}

TEST(Training, ConstantCoefficientGetsZeroWeightAndWarning) {
  std::mt19937_64 rng(63);
  auto pairs = synthetic_pairs(rng, 1000);
  for (LabeledPair& p : pairs) p.c[3] = 2.0;
  const WeightTraining wt = train_weights(pairs);
  EXPECT_EQ(wt.weights[3], 0.0);
  EXPECT_FALSE(wt.warnings.empty());
}

TEST(Training, WeightsNeedBothClasses) {
  std::vector<LabeledPair> pairs(10);
  for (LabeledPair& p : pairs) p.match = true;
  EXPECT_THROW(train_weights(pairs), TrainingError);
}

TEST(Training, LambdaIsZeroWhenNeighboursCarryNoInformation) {
  std::mt19937_64 rng(64);
  std::normal_distribution<double> noise(0, 1);
  std::vector<LambdaSample> samples;
  std::vector<ScoredSample> all;
  for (int i = 0; i < 200000; ++i) {
    LambdaSample s;
    s.similar = static_cast<int>(rng() % 5);
    s.correct = rng() % 2;
    s.score = noise(rng) + (s.correct ? 1.5 : 0.0);
    samples.push_back(s);
    all.push_back({s.score, s.correct});
  }
  const double t_match = roc_threshold(all).point.threshold;
  std::vector<std::string> warnings;
  const LambdaTable::Row row = fit_lambda_row(samples, t_match, 1, warnings);
  for (double v : row) EXPECT_LT(std::abs(v), 0.05);
  EXPECT_TRUE(warnings.empty());
}

TEST(Training, LambdaRowShiftsEachGroupOntoThreshold) {
  std::vector<LambdaSample> samples = {{0, -5, false}, {0, -1, true}, {4, 2, false}, {4, 6, true}};
  std::vector<std::string> warnings;
  const LambdaTable::Row row = fit_lambda_row(samples, -1.0, 2, warnings);
  EXPECT_DOUBLE_EQ(row[0], -1.0 - (-3.0));
  EXPECT_DOUBLE_EQ(row[4], -1.0 - 4.0);
  EXPECT_EQ(row[1], 0.0);
  EXPECT_EQ(warnings.size(), 3u);
}

TEST(Training, TeacherSceneFollowsLabels) {
  ModelConfig cfg;
  TeacherScene t(1, 1, cfg);
  FeatureGrid f(1, 1);
  LabelGrid l(1, 1);
  const std::uint64_t seq[] = {7, 7, 9, 7, 9, 3};
  for (std::uint64_t lab : seq) {
    l[0] = lab;
    t.step(f, l);
  }
  ASSERT_EQ(t.scene().mode_count(0), 3u);
  EXPECT_EQ(t.correct_slot(0, 7), 0);
  EXPECT_EQ(t.correct_slot(0, 9), 1);
  EXPECT_EQ(t.correct_slot(0, 3), 2);
  EXPECT_EQ(t.correct_slot(0, 5), -1);
  EXPECT_EQ(t.scene().modes(0)[0].hit_count, 3u);
  EXPECT_EQ(t.scene().modes(0)[1].creation_frame, 2u);
}

TEST(Training, TeacherTagsFollowEviction) {
  ModelConfig cfg;
  cfg.max_modes = 2;
  cfg.c_s = 1000;
  TeacherScene t(1, 1, cfg);
  FeatureGrid f(1, 1);
  LabelGrid l(1, 1);
  for (std::uint64_t lab : {1, 1, 1, 2, 3}) {
    l[0] = lab;
    t.step(f, l);
  }
  ASSERT_EQ(t.scene().mode_count(0), 2u);
  EXPECT_EQ(t.correct_slot(0, 1), 0);
  EXPECT_EQ(t.correct_slot(0, 2), -1);
  EXPECT_EQ(t.correct_slot(0, 3), 1);
  EXPECT_EQ(t.slot_label(0, 1), 3u);
}

class TrainedModel : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    corpus_ = new SyntheticCorpus(synthetic_specs(small_spec(100), 3));
    report_ = new TrainingReport(train_model(*corpus_, opt_));
  }
  static void TearDownTestSuite() {
    delete report_;
    delete corpus_;
  }
  static inline SyntheticCorpus* corpus_ = nullptr;
  static inline TrainingOptions opt_;
  static inline TrainingReport* report_ = nullptr;
};

TEST_F(TrainedModel, ProducesRequestedRows) {
  EXPECT_EQ(report_->model.lambda.iterations(), 3);
  EXPECT_EQ(report_->lambda_sample_counts.size(), 3u);
  EXPECT_GT(report_->pair_count, 0u);
  for (double a : report_->model.weights.a) EXPECT_LE(a, 0.0);
  EXPECT_LT(report_->model.weights.t_match, 0.0);
}

TEST_F(TrainedModel, AgreementWithNeighboursRaisesLambda) {
  const LambdaTable& l = report_->model.lambda;
  EXPECT_GT(l(1, 4), l(1, 0));
}

TEST_F(TrainedModel, ThresholdBalancesErrorsOnHeldOutData) {
  const SyntheticCorpus held(synthetic_specs(small_spec(200), 2));
  const auto k = held_out_kappas(held, opt_.config, report_->model.weights);
  std::uint64_t p = 0, n = 0, tp = 0, fp = 0;
  for (const ScoredSample& s : k) {
    (s.positive ? p : n)++;
    if (s.score >= report_->model.weights.t_match) (s.positive ? tp : fp)++;
  }
  const double sum = static_cast<double>(tp) / p + static_cast<double>(fp) / n;
  EXPECT_NEAR(sum, 1.0, 0.1);
}

TEST_F(TrainedModel, TrainingIsDeterministic) {
  const TrainingReport again = train_model(*corpus_, opt_);
  EXPECT_EQ(again.model, report_->model);
  EXPECT_EQ(again.pair_count, report_->pair_count);
}

TEST(Training, DirectoryCorpusReplaysWrittenSequence) {
  SyntheticSpec spec = small_spec(300);
  spec.frames = 12;
  spec.quiet_frames = 2;
  const SyntheticSequence seq(spec);
  const auto root = std::filesystem::temp_directory_path() / "dctscene_test_dir_corpus";
  std::filesystem::remove_all(root);
  seq.write(root / "seq000");
  const DirectoryCorpus dir(root);
  ASSERT_EQ(dir.sequence_count(), 1u);
  int f = 0;
  dir.replay(0, [&](const FeatureGrid& features, const LabelGrid& labels) {
    EXPECT_EQ(features, seq.features(f));
    EXPECT_EQ(labels, seq.labels(f));
    ++f;
  });
  EXPECT_EQ(f, 12);
  std::filesystem::remove_all(root);
  EXPECT_THROW(DirectoryCorpus{root}, std::runtime_error);
}
