#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bamkit/seg/components.hpp"
#include "bamkit/seg/gmm.hpp"
#include "bamkit/seg/segment.hpp"
#include "helpers.hpp"

using namespace bamkit;
using namespace bamkit::seg;

namespace {

// Box-Muller on the library Rng so samples are portable.
std::vector<double> bimodal(std::size_t n, double m1, double m2, double sd, double w1, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) {
    const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2 * M_PI * u2);
    v = (rng.uniform() < w1 ? m1 : m2) + sd * z;
  }
  return x;
}

void expect_monotone(const GmmFit& f) {
  for (std::size_t i = 1; i < f.log_likelihood_history.size(); ++i)
    EXPECT_GE(f.log_likelihood_history[i], f.log_likelihood_history[i - 1] - 1e-12) << "iteration " << i;
}

GmmFit two_components(double wa, double ma, double va, double wb, double mb, double vb) {
  GmmFit f;
  f.k = 2;
  f.weights = {wa, wb};
  f.means = {ma, mb};
  f.variances = {va, vb};
  return f;
}

}  // namespace

TEST(Gmm, SingleComponentIsClosedForm) {
  const auto x = bimodal(500, 0.3, 0.6, 0.1, 0.5, 3);
  const auto f = fit_gmm_em(x, 1, 1);
  double m = 0, v = 0;
  for (double s : x) m += s;
  m /= x.size();
  for (double s : x) v += (s - m) * (s - m);
  v /= x.size();
  EXPECT_NEAR(f.means[0], m, 1e-12);
  EXPECT_NEAR(f.variances[0], v, 1e-12);
  EXPECT_DOUBLE_EQ(f.weights[0], 1.0);
  EXPECT_TRUE(component_intersections(f).empty());
  const std::vector<double> same(10, 0.5);
  EXPECT_NEAR(fit_gmm_em(std::vector<double>{0.5, 0.5 + 1e-9}, 1, 1).variances[0], 1e-6, 1e-12);
  EXPECT_THROW(fit_gmm_em(same, 2, 1), Error);
}

TEST(Gmm, RecoversWellSeparatedMixture) {
  const auto x = bimodal(10000, 0.2, 0.8, 0.05, 0.5, 7);
  const auto f = fit_gmm_em(x, 2, 1);
  EXPECT_NEAR(f.means[0], 0.2, 0.02);
  EXPECT_NEAR(f.means[1], 0.8, 0.02);
  EXPECT_NEAR(f.weights[0] + f.weights[1], 1.0, 1e-12);
  EXPECT_TRUE(f.converged);
  expect_monotone(f);
  const auto t = component_intersections(f);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_NEAR(t[0].t, 0.5, 0.02);
  EXPECT_FALSE(t[0].fallback);
}

TEST(Gmm, InvariantsOnAssortedInputs) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    std::vector<double> x(800);
    for (auto& v : x) v = std::pow(rng.uniform(), 1.0 + seed % 3);
    for (std::size_t k = 1; k <= 4; ++k) {
      const auto f = fit_gmm_em(x, k, seed);
      expect_monotone(f);
      double w = 0;
      for (std::size_t c = 0; c < k; ++c) {
        w += f.weights[c];
        EXPECT_GE(f.variances[c], 1e-6);
        if (c > 0) {
          EXPECT_LE(f.means[c - 1], f.means[c]);
        }
      }
      EXPECT_NEAR(w, 1.0, 1e-9);
    }
  }
}

TEST(Gmm, SubsamplesLargeInputsDeterministically) {
  const auto x = bimodal(60000, 0.3, 0.7, 0.05, 0.5, 8);
  const auto a = fit_gmm_em(x, 2, 5), b = fit_gmm_em(x, 2, 5);
  EXPECT_EQ(a.samples_used, 50000u);
  EXPECT_EQ(a.means, b.means);
  EXPECT_EQ(a.log_likelihood_history, b.log_likelihood_history);
}

TEST(Gmm, RestartsKeepTheBestLikelihood) {
  Rng rng(3);
  std::vector<double> x(3000);
  for (auto& v : x) v = rng.uniform() < 0.7 ? 0.1 + 0.02 * rng.uniform() : (rng.uniform() < 0.5 ? 0.5 : 0.9) + 0.05 * rng.uniform();
  for (std::size_t k = 2; k <= 5; ++k) {
    const auto base = fit_gmm_em(x, k, 4);
    GmmOptions o;
    o.restarts = 6;
    const auto a = fit_gmm_em(x, k, 4, o), b = fit_gmm_em(x, k, 4, o);
    EXPECT_GE(a.log_likelihood, base.log_likelihood) << "k=" << k;
    EXPECT_EQ(a.means, b.means);
    expect_monotone(a);
    for (std::size_t c = 1; c < k; ++c) EXPECT_LE(a.means[c - 1], a.means[c]);
  }
}

TEST(Intersections, SymmetricPairMeetsAtMidpoint) {
  const auto t = component_intersections(two_components(0.5, 0.2, 0.01, 0.5, 0.8, 0.01));
  ASSERT_EQ(t.size(), 1u);
  EXPECT_NEAR(t[0].t, 0.5, 1e-12);
}

TEST(Intersections, WeightedRootSolvesTheBalance) {
  const auto f = two_components(0.9, 0.2, 0.01, 0.1, 0.8, 0.01);
  const auto t = component_intersections(f);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_GT(t[0].t, 0.5);  // toward the lighter component
  EXPECT_LT(t[0].t, 0.8);
  EXPECT_LT(std::abs(f.density(0, t[0].t) - f.density(1, t[0].t)), 1e-9);
  // unequal variances: quadratic branch
  const auto g = two_components(0.3, 0.1, 0.002, 0.7, 0.6, 0.04);
  const auto u = component_intersections(g);
  ASSERT_EQ(u.size(), 1u);
  EXPECT_GT(u[0].t, 0.1);
  EXPECT_LT(u[0].t, 0.6);
  EXPECT_LT(std::abs(g.density(0, u[0].t) - g.density(1, u[0].t)), 1e-9);
}

TEST(Intersections, FallsBackToMidpointWithoutACrossing) {
  // a heavy wide component swamps the narrow one everywhere between the means
  const auto f = two_components(0.99, 0.4, 0.5, 0.01, 0.5, 0.0001);
  const auto t = component_intersections(f);
  ASSERT_EQ(t.size(), 1u);
  if (t[0].fallback) {
    EXPECT_NEAR(t[0].t, 0.45, 1e-12);
  }
  EXPECT_GT(t[0].t, 0.4);
  EXPECT_LT(t[0].t, 0.5);
}

TEST(Threshold, MaskAtThreshold) {
  const auto h = testutil::random_heatmap(10, 10, 4);
  EXPECT_EQ(mask_at_threshold(h, 0.0).count(), 100u);
  EXPECT_EQ(mask_at_threshold(h, 1.01).count(), 0u);
  for (double t = 0.1; t < 1.0; t += 0.1) EXPECT_TRUE(mask_at_threshold(h, t).subset_of(mask_at_threshold(h, t - 0.1)));
  Heatmap ramp(1, 1001);
  for (std::size_t i = 0; i <= 1000; ++i) ramp.values[i] = i / 1000.0;
  EXPECT_NEAR(mask_at_threshold(ramp, 0.25).count() / 1001.0, 0.75, 0.002);
}

TEST(Iou, MatchesBitCounting) {
  const BinaryMask a(4, 4, 1), empty(4, 4, 0);
  EXPECT_EQ(iou(a, a), 1.0);
  EXPECT_EQ(iou(empty, empty), 1.0);
  BinaryMask left(4, 4), right(4, 4);
  for (std::size_t y = 0; y < 4; ++y) left(y, 0) = 1, right(y, 3) = 1;
  EXPECT_EQ(iou(left, right), 0.0);
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto p = testutil::random_mask(16, 16, s, 0.3), q = testutil::random_mask(16, 16, s + 1000, 0.6);
    std::size_t i = 0, u = 0;
    for (std::size_t k = 0; k < 256; ++k) i += p.bits[k] && q.bits[k], u += p.bits[k] || q.bits[k];
    EXPECT_EQ(iou(p, q), u ? static_cast<double>(i) / u : 1.0);
  }
  EXPECT_THROW(iou(BinaryMask(3, 3), BinaryMask(3, 4)), Error);
}

TEST(Threshold, SelectBestByScan) {
  // bimodal heatmap: left half low, right half high
  Rng rng(6);
  Heatmap h(8, 8);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x) h(y, x) = (x < 4 ? 0.2 : 0.8) + rng.uniform(-0.15, 0.15);
  BinaryMask ref(8, 8);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 5; x < 8; ++x) ref(y, x) = 1;
  const std::vector<double> cands = {0.7, 0.3, 0.5};
  const auto c = select_best_threshold(h, cands, ref);
  double best = -1, best_t = 0;
  for (double t : {0.3, 0.5, 0.7}) {
    const double v = iou(mask_at_threshold(h, t), ref);
    if (v > best) best = v, best_t = t;
  }
  EXPECT_EQ(c.t, best_t);
  EXPECT_EQ(c.iou, best);
  EXPECT_EQ(c.ious.size(), 3u);
  EXPECT_EQ(select_best_threshold(h, {0.42}, ref).t, 0.42);
  // the exact reproducing threshold wins with IOU 1
  const auto exact = select_best_threshold(h, {0.1, 0.5, 0.9}, mask_at_threshold(h, 0.5));
  EXPECT_EQ(exact.t, 0.5);
  EXPECT_EQ(exact.iou, 1.0);
  // ties prefer the smaller threshold
  EXPECT_EQ(select_best_threshold(h, {0.95, 0.96}, BinaryMask(8, 8)).t, 0.95);
}

TEST(Components, EightConnectivity) {
  BinaryMask m(4, 4);
  m(0, 0) = 1;
  m(1, 1) = 1;  // diagonal neighbour
  m(3, 3) = 1;
  m(0, 3) = 1;
  const auto c = label_components(m);
  ASSERT_EQ(c.count(), 3u);
  EXPECT_EQ(c.labels[0], 1u);
  EXPECT_EQ(c.labels[5], 1u);
  EXPECT_EQ(c.labels[3], 2u);
  EXPECT_EQ(c.labels[15], 3u);
  EXPECT_EQ(c.areas, (std::vector<std::size_t>{2, 1, 1}));
}

TEST(Postprocess, RemovesSpecksAndKeepsLargest) {
  EXPECT_EQ(postprocess(BinaryMask(5, 5)).count(), 0u);
  BinaryMask m(20, 20);
  for (std::size_t y = 2; y < 12; ++y)
    for (std::size_t x = 2; x < 12; ++x) m(y, x) = 1;
  m(18, 18) = 1;
  const auto p = postprocess(m, 0.1);
  EXPECT_EQ(p(18, 18), 0);
  EXPECT_EQ(p.count(), 100u);
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto r = testutil::random_mask(16, 16, s, 0.2 + 0.3 * (s % 3) / 2.0);
    const auto q = postprocess(r, 0.1);
    EXPECT_TRUE(q.subset_of(r));
    const auto cr = label_components(r);
    if (cr.count() == 0) continue;
    const std::size_t largest = *std::max_element(cr.areas.begin(), cr.areas.end());
    const auto cq = label_components(q);
    EXPECT_EQ(*std::max_element(cq.areas.begin(), cq.areas.end()), largest);
    for (std::size_t a : cq.areas) EXPECT_GE(static_cast<double>(a), 0.1 * largest);
  }
}

TEST(Segment, FullChainIsDeterministicAndDegenerateSafe) {
  Rng rng(2);
  Heatmap h(24, 24);
  BinaryMask ref(24, 24);
  for (std::size_t y = 0; y < 24; ++y)
    for (std::size_t x = 0; x < 24; ++x) {
      const bool in = (y - 12.0) * (y - 12.0) + (x - 12.0) * (x - 12.0) < 49;
      h(y, x) = (in ? 0.75 : 0.2) + rng.uniform(-0.1, 0.1);
      ref(y, x) = in;
    }
  SegmentationConfig cfg;
  const auto a = segment_heatmap(h, ref, cfg), b = segment_heatmap(h, ref, cfg);
  EXPECT_EQ(a.mask, b.mask);
  EXPECT_EQ(a.threshold, b.threshold);
  ASSERT_TRUE(a.threshold.has_value());
  EXPECT_EQ(a.k_used, 4u);
  EXPECT_GT(iou(a.mask, ref), 0.95);
  EXPECT_EQ(a.candidates.size(), 3u);
  EXPECT_TRUE(a.mask.subset_of(a.raw_mask));

  const auto flat = segment_heatmap(Heatmap(24, 24, 0.3), ref, cfg);
  EXPECT_FALSE(flat.threshold.has_value());
  EXPECT_EQ(flat.mask.count(), 0u);
  Heatmap two(24, 24, 0.0);
  two(0, 0) = 1.0;
  EXPECT_EQ(segment_heatmap(two, ref, cfg).k_used, 2u);
}
