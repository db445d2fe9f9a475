#include "bamkit/pipeline/commands.hpp"

#include <cstdio>

#include <spdlog/spdlog.h>

#include "bamkit/cnn/checkpoint.hpp"
#include "bamkit/fsutil.hpp"
#include "bamkit/parallel.hpp"
#include "bamkit/pipeline/artifacts.hpp"
#include "bamkit/pipeline/overlay.hpp"
#include "bamkit/saliency/gradcam.hpp"
#include "bamkit/tensor_io.hpp"

namespace bamkit::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kInitStream = 0x494E;

void require_exists(const fs::path& p, const std::string& what) {
  require(fs::exists(p), ErrorCode::kIo, "missing " + what + ": " + p.string() + " (run the producing command first)");
}

cnn::Dataset load_test(const fs::path& out) {
  require_exists(out / "data" / "dataset.json", "dataset");
  return cnn::load_split(out / "data", "test");
}

cnn::Model<float> load_model(const fs::path& out, ArtifactWriter& w) {
  require_exists(out / "model" / "checkpoint.json", "checkpoint");
  w.input(out / "model" / "checkpoint.json");
  return cnn::load_checkpoint(out / "model").model();
}

nlohmann::json resolved(const PipelineConfig& cfg) { return cfg; }

struct Item {
  std::string id;
  Tensor image;
  std::optional<std::size_t> label;
};

std::vector<Item> gather(const fs::path& out, const std::optional<fs::path>& image, std::size_t input_size,
                         ArtifactWriter& w) {
  std::vector<Item> items;
  if (image) {
    require_exists(*image, "image");
    const RgbImage rgb = png::read_rgb(*image);
    require(rgb.height == input_size && rgb.width == input_size, ErrorCode::kInvalidData,
            image->string() + ": image is " + std::to_string(rgb.height) + "x" + std::to_string(rgb.width) +
                ", model expects " + std::to_string(input_size) + "x" + std::to_string(input_size));
    w.input(*image);
    items.push_back({image->stem().string(), rgb.to_tensor(), std::nullopt});
    return items;
  }
  w.input(out / "data" / "dataset.json");
  const cnn::Dataset test = load_test(out);
  for (std::size_t i = 0; i < test.size(); ++i) items.push_back({sample_id(i), test[i].image, test[i].label});
  return items;
}

BinaryMask read_mask(const fs::path& p) {
  require_exists(p, "mask");
  return png::gray_to_mask(png::read_gray(p));
}

}  // namespace

std::string sample_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "test_%04zu", index);
  return buf;
}

void cmd_synth(const PipelineConfig& cfg, const fs::path& out) {
  ArtifactWriter w(out, "synth");
  w.set_config(resolved(cfg));
  spdlog::info("generating {} train / {} val / {} test images (seed {})", cfg.n_train, cfg.n_val, cfg.n_test,
               cfg.synthetic.seed);
  const cnn::Dataset train = cnn::generate_split(cfg.synthetic, 0, cfg.n_train);
  const cnn::Dataset val = cnn::generate_split(cfg.synthetic, 1, cfg.n_val);
  const cnn::Dataset test = cnn::generate_split(cfg.synthetic, 2, cfg.n_test);
  cnn::save_splits(out / "data", cfg.synthetic, {{"train", &train}, {"val", &val}, {"test", &test}});
  for (const char* f : {"dataset.json", "train_images.tnsr", "train_masks.tnsr", "val_images.tnsr", "val_masks.tnsr",
                        "test_images.tnsr", "test_masks.tnsr"}) {
    w.adopt(std::string("data/") + f);
  }
  parallel_for(test.size(), cfg.jobs, [&](std::size_t i) {
    const ldi::SyntheticLdi s = ldi::synthesize_ldi(test[i].mask, cfg.palette, cfg.seed, i, cfg.ldi_noise);
    const std::string dir = "data/ldi/" + sample_id(i) + "/";
    w.rgb_png(dir + "scan.png", s.scan);
    w.json(dir + "landmarks.json", s);
  });
  w.finish();
}

void cmd_train(const PipelineConfig& cfg, const fs::path& out) {
  ArtifactWriter w(out, "train");
  w.set_config(resolved(cfg));
  require_exists(out / "data" / "dataset.json", "dataset");
  w.input(out / "data" / "dataset.json");
  const cnn::Dataset train = cnn::load_split(out / "data", "train");
  const cnn::Dataset val = cnn::load_split(out / "data", "val");
  auto model = cnn::Model<float>::initialize(cfg.model, cfg.seed ^ kInitStream);
  spdlog::info("training {} epochs on {} images", cfg.train.epochs, train.size());
  auto result = cnn::train(std::move(model), train, val, cfg.train, [](const cnn::EpochRecord& r) {
    spdlog::info("epoch {:>3}  loss {:.4f}  train acc {:.3f}  val acc {:.3f}  lr {:g}", r.epoch, r.train_loss,
                 r.train_accuracy, r.val_accuracy, r.learning_rate);
  });
  const cnn::Checkpoint ckpt{result.model.config(), result.model.params(), cfg.seed, cfg.train.epochs,
                             std::move(result.history)};
  cnn::save_checkpoint(out / "model", ckpt);
  for (const auto& f : cnn::checkpoint_files(ckpt)) w.adopt(("model" / f).generic_string());
  w.finish();
}

cnn::ClassifierReport cmd_eval_clf(const PipelineConfig& cfg, const fs::path& out) {
  ArtifactWriter w(out, "eval-clf");
  w.set_config(resolved(cfg));
  const auto model = load_model(out, w);
  w.input(out / "data" / "dataset.json");
  const cnn::Dataset test = load_test(out);
  const cnn::ClassifierReport r = cnn::evaluate_classifier(model, test, cfg.jobs);
  spdlog::info("test accuracy {:.3f}  macro F1 {}  micro AUC {}", r.accuracy,
               r.macro_f1 ? fmt::format("{:.3f}", *r.macro_f1) : "--",
               r.micro_roc.auc ? fmt::format("{:.3f}", *r.micro_roc.auc) : "--");
  w.json("reports/classifier.json", r);
  w.finish();
  return r;
}

void cmd_gradcam(const PipelineConfig& cfg, const fs::path& out, const std::optional<fs::path>& image) {
  ArtifactWriter w(out, "gradcam");
  w.set_config(resolved(cfg));
  const auto model = load_model(out, w);
  const auto items = gather(out, image, cfg.model.input_size, w);
  parallel_for(items.size(), cfg.jobs, [&](std::size_t i) {
    const auto taps = cnn::forward_with_taps(model, items[i].image);
    const Heatmap coarse = saliency::gradcam(taps.last_conv, saliency::channel_importance(taps.last_conv_grad));
    Heatmap up = saliency::upsample_bilinear(coarse, cfg.model.input_size, cfg.model.input_size);
    if (cfg.bam.normalize_gradcam) up = saliency::normalize_minmax(up);
    const std::string dir = "gradcam/" + items[i].id + "/";
    w.heatmap_png(dir + "gradcam.png", up);
    w.tnsr(dir + "gradcam.tnsr", up.to_tensor());
    w.mask_png(dir + "gradcam_mask.png", saliency::binarize(up, cfg.bam.gradcam_th));
  });
  w.finish();
}

void cmd_bam(const PipelineConfig& cfg, const fs::path& out, const std::optional<fs::path>& image) {
  ArtifactWriter w(out, "bam");
  w.set_config(resolved(cfg));
  const auto model = load_model(out, w);
  const auto items = gather(out, image, cfg.model.input_size, w);
  std::vector<nlohmann::json> index(items.size());
  parallel_for(items.size(), cfg.jobs, [&](std::size_t i) {
    const ImageAnalysis a = analyze_image(model, items[i].image, cfg.bam);
    require_same_dims(a.bam.height, a.bam.width, cfg.model.input_size, cfg.model.input_size,
                      "fused map vs input image");
    const RgbImage rgb = RgbImage::from_tensor(items[i].image);
    const std::string dir = "bam/" + items[i].id + "/";
    w.rgb_png(dir + "image.png", rgb);
    w.heatmap_png(dir + "gradcam.png", a.gradcam);
    w.mask_png(dir + "gradcam_mask.png", a.gradcam_mask);
    w.heatmap_png(dir + "bam_heatmap.png", a.bam);
    w.tnsr(dir + "bam_heatmap.tnsr", a.bam.to_tensor());
    w.mask_png(dir + "bam_mask.png", a.segmentation.mask);
    w.rgb_png(dir + "overlay.png", draw_overlay(rgb, a.segmentation.mask, cfg.overlay_color));
    w.json(dir + "trace.json", a.trace);
    w.json(dir + "segmentation.json", a.segmentation);
    index[i] = {{"id", items[i].id},
                {"predicted_class", a.taps.predicted_class},
                {"label", items[i].label ? nlohmann::json(*items[i].label) : nlohmann::json(nullptr)},
                {"selected_channels", a.trace.selected},
                {"final_rho", a.trace.final_rho()}};
  });
  w.json("bam/index.json", index);
  spdlog::info("BAM written for {} image(s)", items.size());
  w.finish();
}

void cmd_segment(const PipelineConfig& cfg, const fs::path& out) {
  ArtifactWriter w(out, "segment");
  w.set_config(resolved(cfg));
  require_exists(out / "bam" / "index.json", "BAM index");
  w.input(out / "bam" / "index.json");
  const auto index = nlohmann::json::parse(read_text(out / "bam" / "index.json"));
  std::vector<nlohmann::json> rows(index.size());
  parallel_for(index.size(), cfg.jobs, [&](std::size_t i) {
    const std::string id = index[i].at("id").get<std::string>();
    const fs::path dir = out / "bam" / id;
    require_exists(dir / "bam_heatmap.tnsr", "fused map");
    const Heatmap bam = Heatmap::from_tensor(load_tnsr<double>(dir / "bam_heatmap.tnsr"));
    const BinaryMask ref = read_mask(dir / "gradcam_mask.png");
    const seg::SegmentationResult r = seg::segment_heatmap(bam, ref, cfg.bam.seg);
    w.mask_png("seg/" + id + "/mask.png", r.mask);
    w.json("seg/" + id + "/threshold.json", r);
    rows[i] = {{"id", id}, {"threshold", r.threshold ? nlohmann::json(*r.threshold) : nlohmann::json(nullptr)}};
  });
  w.json("seg/index.json", rows);
  w.finish();
}

void cmd_ldi_prep(const PipelineConfig& cfg, const fs::path& out) {
  ArtifactWriter w(out, "ldi-prep");
  w.set_config(resolved(cfg));
  w.input(out / "data" / "dataset.json");
  const cnn::Dataset test = load_test(out);
  parallel_for(test.size(), cfg.jobs, [&](std::size_t i) {
    const fs::path src = out / "data" / "ldi" / sample_id(i);
    require_exists(src / "scan.png", "LDI scan");
    require_exists(src / "landmarks.json", "LDI landmarks");
    const RgbImage scan = png::read_rgb(src / "scan.png");
    const auto lj = nlohmann::json::parse(read_text(src / "landmarks.json"));
    std::vector<ldi::Point> ps, pp;
    for (const auto& p : lj.at("scan_landmarks")) ps.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    for (const auto& p : lj.at("photo_landmarks")) pp.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    const ldi::AlignmentFit fit = ldi::estimate_alignment(ps, pp);
    const BinaryMask& manual = test[i].mask;
    const RgbImage warped = ldi::warp_scan(scan, fit.transform, manual.height, manual.width,
                                           cfg.palette.first_of(ldi::HpCategory::kNonBurn).rgb);
    const ldi::CategoryMap cats = ldi::restrict_to_manual(ldi::classify_palette(warped, cfg.palette), manual);
    const ldi::LdiMasks m = ldi::ldi_masks(cats);
    const std::string dir = "ldi/" + sample_id(i) + "/";
    w.rgb_png(dir + "warped.png", warped);
    w.rgb_png(dir + "categories.png", ldi::render_categories(cats, cfg.palette));
    w.mask_png(dir + "hp_lt_14.png", m.hp_lt_14);
    w.mask_png(dir + "hp_14_21.png", m.hp_14_21);
    w.mask_png(dir + "hp_gt_21.png", m.hp_gt_21);
    w.mask_png(dir + "ldi_all.png", m.all);
    w.json(dir + "alignment.json", {{"transform", fit.transform}, {"residual_rms", fit.residual_rms}});
  });
  w.finish();
}

SegmentationEvaluation cmd_eval_seg(const PipelineConfig& cfg, const fs::path& out) {
  ArtifactWriter w(out, "eval-seg");
  w.set_config(resolved(cfg));
  w.input(out / "data" / "dataset.json");
  const cnn::Dataset test = load_test(out);
  const bool have_seg = fs::exists(out / "seg" / "index.json");
  const std::size_t n = test.size();
  std::vector<BinaryMask> bam(n), grad(n), lt14(n), mid(n), gt21(n), all(n);
  std::vector<std::string> problems(n);
  parallel_for(n, cfg.jobs, [&](std::size_t i) {
    const std::string id = sample_id(i);
    bam[i] = read_mask(have_seg ? out / "seg" / id / "mask.png" : out / "bam" / id / "bam_mask.png");
    grad[i] = read_mask(out / "bam" / id / "gradcam_mask.png");
    const fs::path l = out / "ldi" / id;
    lt14[i] = read_mask(l / "hp_lt_14.png");
    mid[i] = read_mask(l / "hp_14_21.png");
    gt21[i] = read_mask(l / "hp_gt_21.png");
    all[i] = read_mask(l / "ldi_all.png");
    const BinaryMask& ref = test[i].mask;
    for (const BinaryMask* m : {&bam[i], &grad[i], &lt14[i], &mid[i], &gt21[i], &all[i]}) {
      if (m->height != ref.height || m->width != ref.width) {
        problems[i] += id + ": mask is " + std::to_string(m->height) + "x" + std::to_string(m->width) +
                       ", manual reference is " + std::to_string(ref.height) + "x" + std::to_string(ref.width) + "\n";
      }
    }
  });
  std::string diag;
  for (const auto& p : problems) diag += p;
  require(diag.empty(), ErrorCode::kInvalidData, "misaligned segmentation inputs:\n" + diag);

  auto pairs = [&](const std::vector<BinaryMask>& pred, const std::vector<BinaryMask>* refs) {
    std::vector<eval::MaskPair> p;
    for (std::size_t i = 0; i < n; ++i) p.push_back({&pred[i], refs ? &(*refs)[i] : &test[i].mask});
    return p;
  };
  const auto primary = eval::Aggregation::kPerImageMean;
  SegmentationEvaluation r;
  r.rows.push_back(eval::batch_report(pairs(bam, nullptr), primary, "BAM", "Manual"));
  r.rows.push_back(eval::batch_report(pairs(bam, &lt14), primary, "BAM", "LDI HP<14"));
  r.rows.push_back(eval::batch_report(pairs(bam, &mid), primary, "BAM", "LDI 14<HP<21"));
  r.rows.push_back(eval::batch_report(pairs(bam, &gt21), primary, "BAM", "LDI HP>21"));
  r.rows.push_back(eval::batch_report(pairs(bam, &all), primary, "BAM", "LDI (all HPs)"));
  r.rows.push_back(eval::batch_report(pairs(grad, nullptr), primary, "GradCAM", "Manual"));
  r.rows.push_back(eval::batch_report(pairs(grad, &all), primary, "GradCAM", "LDI (all HPs)"));
  r.table = eval::format_table(r.rows);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) rows.push_back(row);
  w.json("reports/segmentation.json", {{"images", n}, {"bam_source", have_seg ? "seg" : "bam"}, {"rows", rows}});
  w.text("reports/segmentation_table.txt", r.table);
  spdlog::info("segmentation report: {}", (out / "reports/segmentation_table.txt").string());
  w.finish();
  return r;
}

void cmd_pipeline(const PipelineConfig& cfg, const fs::path& out) {
  cmd_synth(cfg, out);
  cmd_train(cfg, out);
  cmd_eval_clf(cfg, out);
  cmd_bam(cfg, out);
  cmd_segment(cfg, out);
  cmd_ldi_prep(cfg, out);
  cmd_eval_seg(cfg, out);
}

}  // namespace bamkit::pipeline
