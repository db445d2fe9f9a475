#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "bamkit/cnn/checkpoint.hpp"
#include "bamkit/cnn/classifier_eval.hpp"
#include "bamkit/cnn/synthetic.hpp"
#include "bamkit/cnn/train.hpp"
#include "bamkit/fsutil.hpp"
#include "bamkit/seg/components.hpp"
#include "helpers.hpp"

using namespace bamkit;
using namespace bamkit::cnn;

namespace {

SyntheticSpec small_spec(std::uint64_t seed = 3) {
  SyntheticSpec s;
  s.seed = seed;
  s.image_size = 32;
  return s;
}

ModelConfig small_model() {
  ModelConfig c;
  c.input_size = 32;
  c.conv_blocks = {{4, 3, 2}, {6, 3, 2}};
  return c;
}

}  // namespace

TEST(Synthetic, SampleIsDeterministicAndWellFormed) {
  const auto spec = small_spec();
  for (std::size_t label = 0; label < 4; ++label) {
    const auto a = generate_sample(spec, 0, 7, label), b = generate_sample(spec, 0, 7, label);
    EXPECT_EQ(a.image, b.image);
    EXPECT_EQ(a.mask, b.mask);
    EXPECT_EQ(a.label, label);
    EXPECT_EQ(a.image.shape(), (Shape{3, 32, 32}));
    for (float v : a.image.data()) EXPECT_TRUE(v >= 0.0f && v <= 1.0f);
    EXPECT_GT(a.mask.count(), 0u);
    EXPECT_LT(a.mask.count(), a.mask.size());
    EXPECT_EQ(seg::label_components(a.mask).count(), 1u);
  }
  EXPECT_FALSE(generate_sample(spec, 0, 7, 0).image == generate_sample(spec, 0, 8, 0).image);
  EXPECT_FALSE(generate_sample(spec, 0, 7, 0).image == generate_sample(spec, 1, 7, 0).image);
}

TEST(Synthetic, SplitsAreBalancedAndConnected) {
  const auto data = generate_split(small_spec(), 0, 41);
  std::size_t counts[4] = {};
  for (const auto& s : data) {
    ++counts[s.label];
    EXPECT_EQ(seg::label_components(s.mask).count(), 1u);
  }
  const auto [lo, hi] = std::minmax_element(std::begin(counts), std::end(counts));
  EXPECT_LE(*hi - *lo, 1u);
  // shuffled, not round-robin
  bool round_robin = true;
  for (std::size_t i = 0; i < data.size(); ++i) round_robin &= data[i].label == i % 4;
  EXPECT_FALSE(round_robin);
}

TEST(Synthetic, ClassesDifferInCoreHue) {
  // mean colour over the mask differs between classes
  const auto spec = small_spec();
  std::vector<std::array<double, 3>> means;
  for (std::size_t label = 0; label < 4; ++label) {
    std::array<double, 3> m{};
    std::size_t n = 0;
    for (std::size_t i = 0; i < 20; ++i) {
      const auto s = generate_sample(spec, 5, i, label);
      for (std::size_t p = 0; p < s.mask.size(); ++p) {
        if (!s.mask.bits[p]) continue;
        for (int c = 0; c < 3; ++c) m[c] += s.image[c * s.mask.size() + p];
        ++n;
      }
    }
    for (auto& v : m) v /= static_cast<double>(n);
    means.push_back(m);
  }
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = a + 1; b < 4; ++b) {
      double d = 0;
      for (int c = 0; c < 3; ++c) d += std::abs(means[a][c] - means[b][c]);
      EXPECT_GT(d, 0.05) << a << " vs " << b;
    }
}

TEST(Synthetic, SpecJsonRoundTrip) {
  auto s = small_spec(77);
  s.margin_fraction = 0.3;
  const nlohmann::json j = s;
  EXPECT_EQ(nlohmann::json(j.get<SyntheticSpec>()), j);
}

TEST(Synthetic, SaveAndLoadSplit) {
  const auto dir = testutil::scratch_dir("split");
  const auto spec = small_spec();
  const auto train = generate_split(spec, 0, 6), test = generate_split(spec, 2, 3);
  save_splits(dir, spec, {{"train", &train}, {"test", &test}});
  const auto back = load_split(dir, "test");
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].image, test[i].image);
    EXPECT_EQ(back[i].mask, test[i].mask);
    EXPECT_EQ(back[i].label, test[i].label);
  }
  EXPECT_THROW(load_split(dir, "val"), Error);
}

TEST(Plateau, ScriptedSequence) {
  PlateauScheduler s(1.0, 2, 0.5);
  const double seq[] = {0.5, 0.5, 0.5, 0.6, 0.6, 0.6, 0.6, 0.6};
  const bool expect_reduce[] = {false, false, true, false, false, true, false, true};
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(s.observe(seq[i]), expect_reduce[i]) << "epoch " << i;
  EXPECT_DOUBLE_EQ(s.lr(), 0.125);
  EXPECT_DOUBLE_EQ(s.best(), 0.6);
  EXPECT_THROW(PlateauScheduler(1.0, 0, 0.5), Error);
}

TEST(Train, ReducesLossAndIgnoresJobCount) {
  const auto spec = small_spec();
  const auto train_set = generate_split(spec, 0, 32), val_set = generate_split(spec, 1, 16);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.01;
  std::vector<EpochRecord> seen;
  const auto init = Model<float>::initialize(small_model(), 5);
  const auto a = train(init, train_set, val_set, cfg, [&](const EpochRecord& r) { seen.push_back(r); });
  cfg.jobs = 3;
  const auto b = train(init, train_set, val_set, cfg);
  ASSERT_EQ(a.history.size(), 3u);
  EXPECT_EQ(seen.size(), 3u);
  EXPECT_LT(a.history.back().train_loss, a.history.front().train_loss);
  for (std::size_t i = 0; i < a.model.params().size(); ++i)
    EXPECT_EQ(a.model.params()[i].second, b.model.params()[i].second);
  for (const auto& r : a.history) EXPECT_TRUE(std::isfinite(r.train_loss));
}

TEST(Train, DivergenceIsANumericError) {
  const auto spec = small_spec();
  const auto data = generate_split(spec, 0, 8);
  TrainConfig cfg;
  cfg.epochs = 2;
  auto model = Model<float>::initialize(small_model(), 5);
  find_param(model.params(), "fc2.bias")[0] = std::numeric_limits<float>::quiet_NaN();
  try {
    train(model, data, data, cfg);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumeric);
  }
}

TEST(ClassifierEval, PerfectPredictor) {
  std::vector<std::vector<double>> scores;
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < 40; ++i) {
    std::vector<double> s(4, 0.0);
    s[i % 4] = 1.0;
    scores.push_back(s);
    labels.push_back(i % 4);
  }
  const auto r = evaluate_scores(scores, labels, 4);
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(*r.macro_f1, 1.0);
  EXPECT_DOUBLE_EQ(*r.macro_auc, 1.0);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(r.confusion[c][c], 10u);
}

TEST(ClassifierEval, ConstantPredictor) {
  std::vector<std::vector<double>> scores(100, std::vector<double>{0.25, 0.25, 0.25, 0.25});
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < 100; ++i) labels.push_back(i % 4);
  const auto r = evaluate_scores(scores, labels, 4);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.25);
  EXPECT_DOUBLE_EQ(*r.macro_recall, 0.25);
  EXPECT_DOUBLE_EQ(r.micro_f1, 0.25);
  // classes never predicted have undefined precision
  EXPECT_FALSE(r.per_class[1].precision.has_value());
  EXPECT_DOUBLE_EQ(*r.per_class[0].precision, 0.25);
  // all scores tied: a single ROC step, chance AUC
  EXPECT_DOUBLE_EQ(*r.roc[0].auc, 0.5);
}

TEST(ClassifierEval, RandomScoresGiveChanceAuc) {
  Rng rng(99);
  std::vector<double> scores;
  std::vector<bool> pos;
  for (int i = 0; i < 1000; ++i) {
    scores.push_back(rng.uniform());
    pos.push_back(rng.uniform() < 0.5);
  }
  const auto roc = roc_curve(scores, pos);
  ASSERT_TRUE(roc.auc.has_value());
  EXPECT_NEAR(*roc.auc, 0.5, 0.05);
  EXPECT_EQ(roc.fpr.front(), 0.0);
  EXPECT_EQ(roc.tpr.back(), 1.0);
  // Mann-Whitney oracle
  double wins = 0, pairs = 0;
  for (int i = 0; i < 1000; ++i)
    for (int j = 0; j < 1000; ++j)
      if (pos[i] && !pos[j]) {
        pairs += 1;
        wins += scores[i] > scores[j] ? 1.0 : (scores[i] == scores[j] ? 0.5 : 0.0);
      }
  EXPECT_NEAR(*roc.auc, wins / pairs, 1e-12);
  EXPECT_FALSE(roc_curve({0.1, 0.2}, {true, true}).auc.has_value());
}

TEST(Checkpoint, SaveLoadSaveIsBitIdentical) {
  const auto dir = testutil::scratch_dir("ckpt");
  Checkpoint c{small_model(), Model<float>::initialize(small_model(), 4).params(), 4, 2,
               {{1, 1.2, 0.3, 0.25, 0.001}, {2, 1.1, 0.4, 0.5, 0.001}}};
  save_checkpoint(dir / "a", c);
  const auto back = load_checkpoint(dir / "a");
  save_checkpoint(dir / "b", back);
  for (const auto& rel : checkpoint_files(c)) EXPECT_EQ(read_file(dir / "a" / rel), read_file(dir / "b" / rel)) << rel;
  EXPECT_EQ(back.params.size(), c.params.size());
  for (std::size_t i = 0; i < c.params.size(); ++i) EXPECT_EQ(back.params[i].second, c.params[i].second);
  EXPECT_EQ(back.history.size(), 2u);
  EXPECT_THROW(load_checkpoint(dir / "missing"), Error);
}

TEST(Checkpoint, ZeroEpochsKeepsInitialization) {
  const auto spec = small_spec();
  const auto data = generate_split(spec, 0, 8);
  TrainConfig cfg;
  cfg.epochs = 0;
  const auto init = Model<float>::initialize(small_model(), 12);
  const auto r = train(init, data, data, cfg);
  EXPECT_TRUE(r.history.empty());
  for (std::size_t i = 0; i < init.params().size(); ++i) EXPECT_EQ(r.model.params()[i].second, init.params()[i].second);
}
