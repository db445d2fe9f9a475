// Acceptance checks. Prints one PASS/FAIL line per criterion; exits nonzero
// if any fails. BAMKIT_ACCEPT_OUT overrides the scratch directory.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <string>

#include "bamkit/bam/fusion.hpp"
#include "bamkit/bam/spearman.hpp"
#include "bamkit/cnn/checkpoint.hpp"
#include "bamkit/eval/metrics.hpp"
#include "bamkit/fsutil.hpp"
#include "bamkit/ldi/ldi.hpp"
#include "bamkit/pipeline/artifacts.hpp"
#include "bamkit/pipeline/commands.hpp"
#include "bamkit/png.hpp"
#include "bamkit/saliency/gradcam.hpp"
#include "bamkit/seg/gmm.hpp"
#include "bamkit/seg/segment.hpp"
#include "bamkit/tensor_io.hpp"
#include "gradcheck.hpp"
#include "helpers.hpp"

using namespace bamkit;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(const char* id, bool pass, const std::string& detail) {
  std::printf("%s %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  failures += pass ? 0 : 1;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- AC1

void ac1_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  cnn::ModelConfig base;
  base.input_size = 16;
  cnn::ModelConfig no_first_pool = base;
  no_first_pool.conv_blocks[0].pool = 1;
  double worst = 0;
  std::size_t checked = 0, skipped = 0;
  std::string where;
  std::uint64_t seed = 11;
  for (const auto& cfg : {base, no_first_pool}) {
    auto model = cnn::Model<double>::initialize(cfg, seed);
    const auto image = testutil::random_tensor<double>({3, 16, 16}, seed + 1, 0.0, 1.0);
    const auto r = testutil::check_model_gradients(model, image, seed % 4);
    if (r.max_rel_error >= worst) worst = r.max_rel_error, where = r.worst;
    checked += r.checked;
    skipped += r.skipped_kinks;
    ++seed;
  }
  const double secs = seconds_since(t0);
  report("AC1", worst <= 1e-4 && secs < 60.0,
         fmt("max rel err %.3g over %zu params+activations (%zu zero activations at a max-pool kink skipped), %.1f s; worst %s",
             worst, checked, skipped, secs, where.c_str()));
}

// ---- AC2

void ac2_gradcam() {
  cnn::ModelConfig c;
  c.input_size = 12;
  c.conv_blocks = {{4, 3, 2}, {6, 3, 2}};
  c.global_pool = false;
  c.hidden_units = 8;
  c.num_classes = 4;
  double worst = 0;
  std::size_t n = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto model = cnn::Model<double>::initialize(c, seed);
    const auto image = testutil::random_tensor<double>({3, 12, 12}, 100 + seed, 0.0, 1.0);
    const auto taps = cnn::forward_with_taps(model, image);
    const auto alpha = saliency::channel_importance(taps.last_conv_grad);
    const std::size_t hw = taps.last_conv.dim(1) * taps.last_conv.dim(2);
    for (std::size_t k = 0; k < alpha.size(); ++k) {
      auto logit = [&](double eps) {
        TensorD a = taps.last_conv;
        for (std::size_t i = 0; i < hw; ++i) a[k * hw + i] += eps;
        Tape<double> t;
        return t.value(model.forward(t, t.input(a), cnn::Stage::kLastConv))[taps.target_class];
      };
      const double h = 1e-5;
      const double fd = (logit(h) - logit(-h)) / (2 * h) / static_cast<double>(hw);
      worst = std::max(worst, testutil::rel_error(alpha[k], fd));
      ++n;
    }
  }
  report("AC2", worst <= 1e-4, fmt("alpha vs channel-shift finite differences: max rel err %.3g over %zu channels", worst, n));
}

// ---- AC3

std::vector<double> count_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) less += w < v[i], equal += w == v[i];
    r[i] = 1 + less + (equal - 1) / 2;
  }
  return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n, mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return saa == 0 || sbb == 0 ? 0.0 : sab / std::sqrt(saa * sbb);
}

void ac3_spearman() {
  Rng rng(3);
  double max_inc = 0, max_dec = 0, max_oracle = 0;
  bool in_range = true;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> a(256), b(256);
    // a third of the pairs carry ties, a third are correlated
    for (auto& v : a) v = trial % 3 == 0 ? std::floor(rng.uniform() * 16) : rng.uniform();
    for (std::size_t i = 0; i < 256; ++i) b[i] = trial % 3 == 1 ? a[i] + 0.3 * rng.uniform() : rng.uniform();
    const double r = bam::spearman_rho(a, b);
    in_range &= r >= -1.0 && r <= 1.0;
    std::vector<double> inc(256), dec(256);
    for (std::size_t i = 0; i < 256; ++i) inc[i] = std::exp(2 * b[i]) - 5, dec[i] = 1 / (1 + b[i]);
    max_inc = std::max(max_inc, std::abs(bam::spearman_rho(a, inc) - r));
    max_dec = std::max(max_dec, std::abs(bam::spearman_rho(a, dec) + r));
    max_oracle = std::max(max_oracle, std::abs(r - pearson(count_ranks(a), count_ranks(b))));
  }
  report("AC3", in_range && max_inc < 1e-12 && max_dec < 1e-12 && max_oracle <= 1e-12,
         fmt("1000 pairs: in [-1,1]=%s, increasing |d|=%.2g, decreasing |rho+rho'|=%.2g, oracle |d|=%.2g",
             in_range ? "yes" : "no", max_inc, max_dec, max_oracle));
}

// ---- AC4

Heatmap smooth_field(std::size_t n, Rng& rng) {
  Heatmap h(n, n);
  for (int b = 0; b < 3; ++b) {
    const double cy = rng.uniform(0, n), cx = rng.uniform(0, n), s = rng.uniform(2, 6), a = rng.uniform(-1, 1);
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n; ++x)
        h(y, x) += a * std::exp(-((y - cy) * (y - cy) + (x - cx) * (x - cx)) / (2 * s * s));
  }
  return h;
}

void ac4_greedy() {
  const auto t0 = std::chrono::steady_clock::now();
  int beats_single = 0, beats_exhaustive = 0;
  double gap_sum = 0, worst_gap = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    Rng rng(Rng::derive(4, 0, t).next());
    const Heatmap ref = saliency::normalize_minmax(smooth_field(16, rng));
    std::vector<Heatmap> raw;
    for (int c = 0; c < 8; ++c) {
      Heatmap ch = smooth_field(16, rng);
      const double mix = rng.uniform(-1, 1);
      for (std::size_t i = 0; i < ch.size(); ++i) ch.values[i] += mix * ref.values[i] + 0.3 * rng.uniform(-1, 1);
      raw.push_back(ch);
    }
    const auto stack = bam::ChannelStack::from_channels(raw);
    const auto g = bam::greedy_fuse(stack, ref);
    const auto e = bam::exhaustive_fuse(stack, ref, 3);
    const double best_single = *std::max_element(g.channel_rho.begin(), g.channel_rho.end());
    beats_single += g.final_rho() >= best_single;
    beats_exhaustive += g.final_rho() >= e.rho;
    const double gap = std::max(0.0, e.rho - g.final_rho());
    gap_sum += gap;
    worst_gap = std::max(worst_gap, gap);
  }
  const double secs = seconds_since(t0);
  report("AC4", beats_single == trials && beats_exhaustive >= 0.9 * trials && secs < 120,
         fmt("greedy >= best single %d/%d, >= exhaustive(<=3) %d/%d, mean gap %.3g (max %.3g), %.1f s", beats_single,
             trials, beats_exhaustive, trials, gap_sum / trials, worst_gap, secs));
}

// ---- AC5

void ac5_em() {
  Rng rng(5);
  std::vector<double> x(10000);
  for (auto& v : x) {
    const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2 * M_PI * u2);
    v = (rng.uniform() < 0.5 ? 0.2 : 0.8) + 0.05 * z;
  }
  const auto fit = seg::fit_gmm_em(x, 2, 1);
  const auto cand = seg::component_intersections(fit);
  const bool means_ok = std::abs(fit.means[0] - 0.2) <= 0.02 && std::abs(fit.means[1] - 0.8) <= 0.02;
  const bool cross_ok = cand.size() == 1 && std::abs(cand[0].t - 0.5) <= 0.02;

  // monotonicity over this fit and a spread of others
  std::vector<seg::GmmFit> fits = {fit};
  for (std::uint64_t s = 1; s <= 20; ++s) {
    Rng r2(s);
    std::vector<double> y(2000);
    for (auto& v : y) v = std::pow(r2.uniform(), 0.5 + 0.25 * (s % 5));
    for (std::size_t k = 1; k <= 5; ++k) fits.push_back(seg::fit_gmm_em(y, k, s));
  }
  double worst_drop = 0;
  std::size_t iters = 0;
  for (const auto& f : fits)
    for (std::size_t i = 1; i < f.log_likelihood_history.size(); ++i, ++iters)
      worst_drop = std::max(worst_drop, f.log_likelihood_history[i - 1] - f.log_likelihood_history[i]);
  const bool mono = worst_drop <= 1e-12;
  report("AC5", means_ok && cross_ok && mono,
         fmt("means %.4f, %.4f; intersection %.4f; %zu fits, %zu iterations, largest log-likelihood drop %.2g",
             fit.means[0], fit.means[1], cand.empty() ? -1.0 : cand[0].t, fits.size(), iters, worst_drop));
}

// ---- AC6

void ac6_metrics() {
  std::size_t mismatches = 0, iou_mismatch = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto p = testutil::random_mask(16, 16, 2 * s, 0.1 + 0.8 * (s % 7) / 6.0);
    const auto r = testutil::random_mask(16, 16, 2 * s + 1, 0.1 + 0.8 * (s % 5) / 4.0);
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < 256; ++i) {
      const unsigned code = (p.bits[i] << 1) | r.bits[i];
      tp += code == 3, fp += code == 2, fn += code == 1, tn += code == 0;
    }
    const auto c = eval::confusion_counts(p, r);
    const auto m = eval::metrics(c);
    const auto ratio = [](std::size_t num, std::size_t den) {
      return den ? std::optional<double>(static_cast<double>(num) / static_cast<double>(den)) : std::nullopt;
    };
    const std::optional<double> jac = tp + fp + fn ? ratio(tp, tp + fp + fn) : std::optional<double>(1.0);
    const bool ok = c.tp == tp && c.fp == fp && c.tn == tn && c.fn == fn && m.accuracy == ratio(tp + tn, 256) &&
                    m.sensitivity == ratio(tp, tp + fn) && m.specificity == ratio(tn, tn + fp) && m.jaccard == jac;
    mismatches += !ok;
    const double iou = seg::iou(p, r);
    iou_mismatch += !m.jaccard || std::memcmp(&*m.jaccard, &iou, sizeof(double)) != 0;
  }
  report("AC6", mismatches == 0 && iou_mismatch == 0,
         fmt("1000 mask pairs: %zu metric mismatches, %zu jaccard/iou bit mismatches", mismatches, iou_mismatch));
}

// ---- AC7 + AC8

void ac7_ac8(const fs::path& scratch) {
  pipeline::PipelineConfig cfg;
  cfg.seed = 1;
  cfg.resolve();
  cfg.validate();
  const fs::path run1 = scratch / "run1", run2 = scratch / "run2";
  fs::remove_all(run1);
  fs::remove_all(run2);

  const auto t0 = std::chrono::steady_clock::now();
  pipeline::cmd_pipeline(cfg, run1);
  const double pipeline_secs = seconds_since(t0);
  const auto ckpt = cnn::load_checkpoint(run1 / "model");
  const auto train_manifest = nlohmann::json::parse(read_text(run1 / "manifests" / "train.json"));
  const double train_secs = train_manifest["timings"]["total_seconds"].get<double>();
  const double val_acc = ckpt.history.empty() ? 0.0 : ckpt.history.back().val_accuracy;
  const auto eval = pipeline::cmd_eval_seg(cfg, run1);
  const auto bam = eval.rows[0].primary_metrics(), grad = eval.rows[5].primary_metrics();
  const double bj = bam.jaccard.value_or(0), gj = grad.jaccard.value_or(0);
  const double bs = bam.sensitivity.value_or(0), gs = grad.sensitivity.value_or(0);
  const double gsp = grad.specificity.value_or(0);
  const bool pass = ckpt.epochs <= 30 && train_secs < 300 && val_acc >= 0.90 && eval.rows[0].images == 100 &&
                    bj >= 0.50 && bj > gj && gsp >= gs && bs > gs;
  report("AC7", pass,
         fmt("%zu epochs in %.0f s, val acc %.3f; %zu test images: BAM jaccard %.4f sens %.4f | Grad-CAM jaccard %.4f "
             "sens %.4f spec %.4f",
             ckpt.epochs, train_secs, val_acc, eval.rows[0].images, bj, bs, gj, gs, gsp));

  pipeline::cmd_pipeline(cfg, run2);
  const auto h1 = pipeline::hash_tree(run1), h2 = pipeline::hash_tree(run2);
  std::size_t differing = 0;
  for (const auto& [path, hash] : h1) differing += !h2.count(path) || h2.at(path) != hash;
  differing += h2.size() > h1.size() ? h2.size() - h1.size() : 0;
  report("AC8", h1 == h2 && !h1.empty(),
         fmt("two default-config pipeline runs: %zu artifacts each, %zu differ (first run %.0f s)", h1.size(), differing,
             pipeline_secs));
}

// ---- AC9

void ac9_formats(const fs::path& scratch) {
  const fs::path dir = scratch / "formats";
  fs::create_directories(dir);
  bool tnsr_ok = true, png_ok = true;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Shape shape = {1 + s % 3, 2 + s % 5, 3 + s % 4};
    const auto f = testutil::random_tensor<float>(shape, s, -1e6, 1e6);
    const auto d = testutil::random_tensor<double>(shape, s + 99, -1e-300, 1e300);
    save_tnsr(dir / "f.tnsr", f);
    save_tnsr(dir / "d.tnsr", d);
    const auto fb = load_tnsr<float>(dir / "f.tnsr");
    const auto db = load_tnsr<double>(dir / "d.tnsr");
    tnsr_ok &= fb.shape() == f.shape() && std::memcmp(fb.ptr(), f.ptr(), f.size() * sizeof(float)) == 0;
    tnsr_ok &= db.shape() == d.shape() && std::memcmp(db.ptr(), d.ptr(), d.size() * sizeof(double)) == 0;

    Rng rng(s);
    RgbImage rgb(5 + s, 3 + 2 * s);
    for (auto& p : rgb.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    png::GrayImage g{4 + s, 7 + s, std::vector<std::uint8_t>((4 + s) * (7 + s))};
    for (auto& p : g.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    png::write_rgb(dir / "c.png", rgb);
    png::write_gray(dir / "g.png", g);
    png_ok &= png::read_rgb(dir / "c.png") == rgb && png::read_gray(dir / "g.png") == g;
  }
  double worst = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    Rng rng(s + 1000);
    const ldi::AlignmentTransform truth{rng.uniform(0.3, 3.0), rng.uniform(-3.1, 3.1), rng.uniform(-50, 50),
                                        rng.uniform(-50, 50)};
    std::vector<ldi::Point> scan, photo;
    for (std::size_t i = 0; i < 3 + s % 6; ++i) {
      scan.push_back({rng.uniform(0, 64), rng.uniform(0, 64)});
      photo.push_back(truth.apply(scan.back()));
    }
    const auto fit = ldi::estimate_alignment(scan, photo).transform;
    worst = std::max({worst, std::abs(fit.scale - truth.scale), std::abs(fit.rotation - truth.rotation),
                      std::abs(fit.tx - truth.tx), std::abs(fit.ty - truth.ty)});
  }
  report("AC9", tnsr_ok && png_ok && worst <= 1e-6,
         fmt("TNSR bit-identical %s, PNG lossless %s, alignment max parameter error %.2g over 100 landmark sets",
             tnsr_ok ? "yes" : "no", png_ok ? "yes" : "no", worst));
}

void guarded(const char* id, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

}  // namespace

int main() {
  const char* env = std::getenv("BAMKIT_ACCEPT_OUT");
  const fs::path scratch = env ? fs::path(env) : fs::temp_directory_path() / "bamkit_acceptance";
  fs::create_directories(scratch);
  guarded("AC1", ac1_gradients);
  guarded("AC2", ac2_gradcam);
  guarded("AC3", ac3_spearman);
  guarded("AC4", ac4_greedy);
  guarded("AC5", ac5_em);
  guarded("AC6", ac6_metrics);
  guarded("AC7/AC8", [&] { ac7_ac8(scratch); });
  guarded("AC9", [&] { ac9_formats(scratch); });
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
