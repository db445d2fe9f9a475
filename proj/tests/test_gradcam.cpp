#include <gtest/gtest.h>

#include "bamkit/cnn/model.hpp"
#include "bamkit/saliency/gradcam.hpp"
#include "helpers.hpp"

using namespace bamkit;
using namespace bamkit::saliency;

TEST(ChannelImportance, ConstantAndSingleChannel) {
  const TensorD g({3, 2, 2}, 0.75);
  for (double a : channel_importance(g)) EXPECT_DOUBLE_EQ(a, 0.75);
  TensorD one({3, 2, 2}, 0.0);
  for (std::size_t i = 0; i < 4; ++i) one[i] = 1.0;
  EXPECT_EQ(channel_importance(one), (std::vector<double>{1.0, 0.0, 0.0}));
}

TEST(ChannelImportance, EqualsPerChannelMean) {
  const auto g = testutil::random_tensor<double>({4, 3, 3}, 5);
  const auto a = channel_importance(g);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    double s = 0;
    for (std::size_t i = 0; i < 9; ++i) s += g[k * 9 + i];
    EXPECT_NEAR(a[k], s / 9, 1e-15);
  }
}

TEST(GradCam, WeightedSumThenClamp) {
  const auto a = testutil::random_tensor<double>({1, 3, 3}, 6, 0.0, 1.0);
  const auto h = gradcam(a, {1.0});
  for (std::size_t i = 0; i < 9; ++i) EXPECT_DOUBLE_EQ(h.values[i], a[i]);
  for (double v : gradcam(a, {-1.0}).values) EXPECT_EQ(v, 0.0);

  const auto b = testutil::random_tensor<double>({2, 4, 5}, 7, 0.0, 1.0);
  const std::vector<double> w = {0.8, -1.1};
  const auto m = gradcam(b, w);
  EXPECT_EQ(m.height, 4u);
  EXPECT_EQ(m.width, 5u);
  for (std::size_t i = 0; i < 20; ++i) {
    const double want = std::max(0.0, 0.8 * b[i] - 1.1 * b[20 + i]);
    EXPECT_NEAR(m.values[i], want, 1e-15);
    EXPECT_GE(m.values[i], 0.0);
  }
  EXPECT_THROW(gradcam(b, {1.0}), Error);
}

TEST(Upsample, ConstantIdentityAndCornerAligned) {
  const Heatmap c(3, 4, 0.7);
  for (double v : upsample_bilinear(c, 9, 2).values) EXPECT_NEAR(v, 0.7, 1e-15);
  const auto r = testutil::random_heatmap(5, 6, 8);
  EXPECT_EQ(upsample_bilinear(r, 5, 6), r);

  const Heatmap h(2, 2, {0.0, 1.0, 0.0, 1.0});
  const auto u = upsample_bilinear(h, 2, 4);
  const double want[] = {0.0, 1.0 / 3, 2.0 / 3, 1.0};
  for (std::size_t y = 0; y < 2; ++y)
    for (std::size_t x = 0; x < 4; ++x) EXPECT_NEAR(u(y, x), want[x], 1e-15);

  // corners are preserved under any enlargement
  const auto big = upsample_bilinear(r, 17, 13);
  EXPECT_DOUBLE_EQ(big(0, 0), r(0, 0));
  EXPECT_DOUBLE_EQ(big(16, 12), r(4, 5));
  EXPECT_DOUBLE_EQ(big(0, 12), r(0, 5));
}

TEST(Normalize, MinMaxAndConstant) {
  const Heatmap h(2, 2, {0.0, 5.0, 10.0, 5.0});
  EXPECT_EQ(normalize_minmax(h).values, (std::vector<double>{0.0, 0.5, 1.0, 0.5}));
  for (double v : normalize_minmax(Heatmap(3, 3, 4.2)).values) EXPECT_EQ(v, 0.0);
}

TEST(Binarize, ThresholdsInclusive) {
  const auto r = normalize_minmax(testutil::random_heatmap(8, 8, 9));
  EXPECT_EQ(binarize(r, 0.0).count(), 64u);
  Heatmap ramp(1, 1001);
  for (std::size_t i = 0; i <= 1000; ++i) ramp.values[i] = i / 1000.0;
  EXPECT_NEAR(binarize(ramp, 0.2).count() / 1001.0, 0.8, 0.002);
  EXPECT_EQ(binarize(Heatmap(1, 2, {0.2, 0.19999}), 0.2).bits, (std::vector<std::uint8_t>{1, 0}));
}

// alpha_k times HW equals the sensitivity of the logit to a uniform shift of
// channel k, which a uniform shift is smooth in even through max-pooling.
TEST(GradCam, ImportanceMatchesChannelShiftSensitivity) {
  cnn::ModelConfig c;
  c.input_size = 12;
  c.conv_blocks = {{4, 3, 2}, {5, 3, 2}};
  c.global_pool = false;
  c.hidden_units = 7;
  c.num_classes = 3;
  const auto model = cnn::Model<double>::initialize(c, 31);
  const auto image = testutil::random_tensor<double>({3, 12, 12}, 32, 0.0, 1.0);
  const auto taps = cnn::forward_with_taps(model, image);
  const auto alpha = channel_importance(taps.last_conv_grad);
  const std::size_t hw = taps.last_conv.dim(1) * taps.last_conv.dim(2);
  const double h = 1e-5;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    auto shifted = [&](double eps) {
      TensorD a = taps.last_conv;
      for (std::size_t i = 0; i < hw; ++i) a[k * hw + i] += eps;
      Tape<double> t;
      return t.value(model.forward(t, t.input(a), cnn::Stage::kLastConv))[taps.target_class];
    };
    const double fd = (shifted(h) - shifted(-h)) / (2 * h) / static_cast<double>(hw);
    EXPECT_LE(testutil::rel_error(alpha[k], fd), 1e-4) << "channel " << k << ": " << alpha[k] << " vs " << fd;
  }
}
