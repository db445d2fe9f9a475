#include <gtest/gtest.h>

#include <cstdlib>
#include <set>

#include "bamkit/eval/metrics.hpp"
#include "bamkit/fsutil.hpp"
#include "bamkit/ldi/ldi.hpp"
#include "bamkit/pipeline/artifacts.hpp"
#include "bamkit/pipeline/commands.hpp"
#include "bamkit/pipeline/overlay.hpp"
#include "bamkit/png.hpp"
#include "helpers.hpp"

using namespace bamkit;
using namespace bamkit::pipeline;
namespace fs = std::filesystem;

namespace {

BinaryMask erode(const BinaryMask& m) {
  BinaryMask e(m.height, m.width);
  for (std::size_t y = 0; y < m.height; ++y)
    for (std::size_t x = 0; x < m.width; ++x) {
      bool all = true;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const long yy = static_cast<long>(y) + dy, xx = static_cast<long>(x) + dx;
          all &= yy >= 0 && xx >= 0 && yy < static_cast<long>(m.height) && xx < static_cast<long>(m.width) &&
                 m(yy, xx);
        }
      e(y, x) = all;
    }
  return e;
}

PipelineConfig small_config() {
  PipelineConfig c;
  c.n_train = 12;
  c.n_val = 8;
  c.n_test = 6;
  c.synthetic.image_size = 32;
  c.model.input_size = 32;
  c.model.conv_blocks = {{6, 3, 2}, {8, 3, 2}};
  c.train.epochs = 2;
  c.resolve();
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BAMKIT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Overlay, BoundaryMatchesErosionOracle) {
  EXPECT_EQ(boundary(BinaryMask(5, 5)).count(), 0u);
  const auto ring = boundary(BinaryMask(5, 6, 1));
  for (std::size_t y = 0; y < 5; ++y)
    for (std::size_t x = 0; x < 6; ++x) EXPECT_EQ(ring(y, x), y == 0 || x == 0 || y == 4 || x == 5);
  const auto spec = [] {
    cnn::SyntheticSpec s;
    s.image_size = 48;
    return s;
  }();
  for (std::size_t i = 0; i < 8; ++i) {
    const auto m = cnn::generate_sample(spec, 3, i, i % 4).mask;
    const auto e = erode(m);
    BinaryMask want(m.height, m.width);
    for (std::size_t p = 0; p < m.size(); ++p) want.bits[p] = m.bits[p] && !e.bits[p];
    EXPECT_EQ(boundary(m), want);
  }
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto m = testutil::random_mask(12, 12, s, 0.6);
    const auto e = erode(m);
    for (std::size_t p = 0; p < m.size(); ++p) EXPECT_EQ(boundary(m).bits[p], m.bits[p] && !e.bits[p]);
  }
}

TEST(Overlay, PaintsOnlyTheBoundary) {
  RgbImage img(6, 6);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i);
  EXPECT_EQ(draw_overlay(img, BinaryMask(6, 6), {0, 255, 0}), img);
  BinaryMask m(6, 6);
  for (std::size_t y = 1; y < 5; ++y)
    for (std::size_t x = 1; x < 5; ++x) m(y, x) = 1;
  const auto o = draw_overlay(img, m, {1, 2, 3});
  const auto b = boundary(m);
  for (std::size_t y = 0; y < 6; ++y)
    for (std::size_t x = 0; x < 6; ++x) {
      if (b(y, x)) {
        EXPECT_EQ(o.at(y, x)[0], 1);
        EXPECT_EQ(o.at(y, x)[2], 3);
      } else {
        EXPECT_TRUE(std::equal(o.at(y, x), o.at(y, x) + 3, img.at(y, x)));
      }
    }
}

TEST(Config, JsonRoundTripAndValidation) {
  auto c = small_config();
  c.bam.seg.gmm_k = 3;
  c.overlay_color = {1, 2, 3};
  const nlohmann::json j = c;
  EXPECT_EQ(nlohmann::json(j.get<PipelineConfig>()), j);
  c.validate();
  auto bad = c;
  bad.bam.gradcam_th = 1.5;
  EXPECT_THROW(bad.validate(), Error);
  for (std::size_t k : {1u, 7u}) {
    bad = c;
    bad.bam.seg.gmm_k = k;
    EXPECT_THROW(bad.validate(), Error) << k;
  }
  bad = c;
  bad.synthetic.image_size = 40;
  EXPECT_THROW(bad.validate(), Error);
  const auto dir = testutil::scratch_dir("config");
  EXPECT_THROW(load_config(dir / "none.json"), Error);
  write_text_atomic(dir / "bad.json", "{ not json");
  EXPECT_THROW(load_config(dir / "bad.json"), Error);
  write_text_atomic(dir / "partial.json", R"({"seed": 9, "bam": {"gradcam_th": 0.3}})");
  const auto p = load_config(dir / "partial.json");
  EXPECT_EQ(p.seed, 9u);
  EXPECT_EQ(p.bam.gradcam_th, 0.3);
  EXPECT_EQ(p.n_train, 400u);
}

TEST(Artifacts, ManifestListsOutputsWithHashes) {
  const auto dir = testutil::scratch_dir("artifacts");
  ArtifactWriter w(dir, "demo");
  w.set_config({{"x", 1}});
  w.text("b/notes.txt", "hi");
  w.mask_png("a/mask.png", BinaryMask(3, 3, 1));
  const auto manifest = nlohmann::json::parse(read_text(w.finish()));
  EXPECT_EQ(manifest["command"], "demo");
  std::set<std::string> listed;
  for (const auto& o : manifest["outputs"]) {
    listed.insert(o["path"].get<std::string>());
    EXPECT_EQ(o["sha256"], sha256_file(dir / o["path"].get<std::string>()));
  }
  EXPECT_TRUE(listed.count("a/mask.png"));
  EXPECT_TRUE(listed.count("b/notes.txt"));
  EXPECT_TRUE(listed.count("config/demo.json"));
  const auto tree = hash_tree(dir);
  EXPECT_EQ(tree.size(), listed.size());
  EXPECT_FALSE(tree.count("manifests/demo.json"));
}

class SmallPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(testutil::scratch_dir("pipeline"));
    cmd_pipeline(small_config(), *root_ / "run1");
  }
  static void TearDownTestSuite() { delete root_; }
  static fs::path* root_;
};
fs::path* SmallPipeline::root_ = nullptr;

TEST_F(SmallPipeline, RerunGivesIdenticalHashes) {
  cmd_pipeline(small_config(), *root_ / "run2");
  EXPECT_EQ(hash_tree(*root_ / "run1"), hash_tree(*root_ / "run2"));
}

TEST_F(SmallPipeline, ManifestsCoverEveryFile) {
  const auto run = *root_ / "run1";
  std::set<std::string> listed;
  for (const auto& e : fs::directory_iterator(run / "manifests")) {
    listed.insert("manifests/" + e.path().filename().string());
    const auto manifest = nlohmann::json::parse(read_text(e.path()));
    for (const auto& o : manifest["outputs"]) listed.insert(o["path"].get<std::string>());
  }
  std::set<std::string> present;
  for (const auto& e : fs::recursive_directory_iterator(run))
    if (e.is_regular_file()) present.insert(e.path().lexically_relative(run).generic_string());
  EXPECT_EQ(present, listed);
}

TEST_F(SmallPipeline, ImagesRoundTripThroughPngReader) {
  const auto dir = *root_ / "run1" / "bam" / sample_id(0);
  for (const char* f : {"image.png", "overlay.png"}) {
    const auto img = png::read_rgb(dir / f);
    EXPECT_EQ(png::encode_rgb(img), read_file(dir / f)) << f;
  }
  for (const char* f : {"bam_heatmap.png", "bam_mask.png", "gradcam.png", "gradcam_mask.png"}) {
    const auto g = png::read_gray(dir / f);
    EXPECT_EQ(png::encode_gray(g), read_file(dir / f)) << f;
  }
}

TEST_F(SmallPipeline, OverlayIsImageWithBoundary) {
  const auto dir = *root_ / "run1" / "bam" / sample_id(1);
  const auto img = png::read_rgb(dir / "image.png");
  const auto mask = png::gray_to_mask(png::read_gray(dir / "bam_mask.png"));
  EXPECT_EQ(png::read_rgb(dir / "overlay.png"), draw_overlay(img, mask, small_config().overlay_color));
}

TEST_F(SmallPipeline, ReportMatchesMetricsOnWrittenMasks) {
  const auto run = *root_ / "run1";
  const auto cfg = small_config();
  const auto test = cnn::load_split(run / "data", "test");
  std::vector<BinaryMask> bam, grad, all;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto id = sample_id(i);
    bam.push_back(png::gray_to_mask(png::read_gray(run / "seg" / id / "mask.png")));
    grad.push_back(png::gray_to_mask(png::read_gray(run / "bam" / id / "gradcam_mask.png")));
    all.push_back(png::gray_to_mask(png::read_gray(run / "ldi" / id / "ldi_all.png")));
  }
  std::vector<eval::MaskPair> manual, ldi_all, grad_manual;
  for (std::size_t i = 0; i < test.size(); ++i) {
    manual.push_back({&bam[i], &test[i].mask});
    ldi_all.push_back({&bam[i], &all[i]});
    grad_manual.push_back({&grad[i], &test[i].mask});
  }
  const auto r = cmd_eval_seg(cfg, run);
  ASSERT_EQ(r.rows.size(), 7u);
  EXPECT_EQ(r.rows[0].mean_jaccard.value, eval::batch_report(manual).mean_jaccard.value);
  EXPECT_EQ(r.rows[4].mean_jaccard.value, eval::batch_report(ldi_all).mean_jaccard.value);
  EXPECT_EQ(r.rows[5].mean_sensitivity.value, eval::batch_report(grad_manual).mean_sensitivity.value);
  EXPECT_EQ(read_text(run / "reports" / "segmentation_table.txt"), r.table);
  for (const char* name : {"BAM vs Manual", "BAM vs LDI HP<14", "BAM vs LDI 14<HP<21", "BAM vs LDI HP>21",
                           "BAM vs LDI (all HPs)", "GradCAM vs Manual", "GradCAM vs LDI (all HPs)"})
    EXPECT_NE(r.table.find(name), std::string::npos) << name;
}

TEST_F(SmallPipeline, EvalSegReportsMisalignedInputs) {
  const auto run = *root_ / "run3";
  fs::copy(*root_ / "run1", run, fs::copy_options::recursive);
  png::write_gray(run / "ldi" / sample_id(2) / "ldi_all.png", png::mask_to_gray(BinaryMask(5, 7)));
  try {
    cmd_eval_seg(small_config(), run);
    FAIL() << "expected a dimension error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidData);
    EXPECT_NE(std::string(e.what()).find(sample_id(2)), std::string::npos) << e.what();
  }
}

TEST_F(SmallPipeline, SingleImageBamMode) {
  const auto run = *root_ / "single";
  cmd_synth(small_config(), run);
  cmd_train(small_config(), run);
  cmd_bam(small_config(), run, *root_ / "run1" / "bam" / sample_id(0) / "image.png");
  EXPECT_TRUE(fs::exists(run / "bam" / "image" / "overlay.png"));
  EXPECT_TRUE(fs::exists(run / "bam" / "image" / "trace.json"));
}

TEST(Cli, ExitCodes) {
  const auto dir = testutil::scratch_dir("cli");
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("synth --gmm-k 0 --out " + (dir / "x").string()), 2);
  EXPECT_EQ(run_cli("synth --gmm-k 7 --out " + (dir / "x").string()), 2);
  EXPECT_EQ(run_cli("synth --config " + (dir / "missing.json").string()), 2);
  EXPECT_EQ(run_cli("train --out " + (dir / "empty").string()), 3);
  EXPECT_EQ(run_cli("bam --image " + (dir / "nope.png").string() + " --out " + (dir / "empty").string()), 3);
  write_text_atomic(dir / "bad.json", "{");
  EXPECT_EQ(run_cli("synth --config " + (dir / "bad.json").string() + " --out " + (dir / "y").string()), 3);
  write_text_atomic(dir / "tiny.json", R"({"data": {"n_train": 4, "n_val": 4, "n_test": 2}})");
  EXPECT_EQ(run_cli("synth --seed 5 --config " + (dir / "tiny.json").string() + " --out " + (dir / "ok").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "ok" / "manifests" / "synth.json"));
  const auto resolved = nlohmann::json::parse(read_text(dir / "ok" / "config" / "synth.json"));
  EXPECT_EQ(resolved["seed"], 5);
}
