#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "bamkit/error.hpp"
#include "bamkit/fsutil.hpp"
#include "bamkit/pipeline/commands.hpp"

namespace fs = std::filesystem;
using namespace bamkit;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kInvalidInput = 3, kNumericFailure = 4 };

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("bamkit");
  logger->set_pattern("[%H:%M:%S] [%^%l%$] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("BAMKIT_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off") {
      spdlog::warn("unknown BAMKIT_LOG level '{}', using info", env);
    } else {
      spdlog::set_level(level);
    }
  }
}

struct Flags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::string out = "out";
  std::optional<std::size_t> gmm_k;
  std::optional<double> gradcam_th;
  std::optional<double> min_area_frac;
  std::optional<std::size_t> epochs;
  std::optional<std::string> image;
  bool no_normalize = false;
};

pipeline::PipelineConfig build_config(const Flags& f) {
  pipeline::PipelineConfig cfg = f.config ? pipeline::load_config(*f.config) : pipeline::PipelineConfig{};
  if (f.seed) cfg.seed = *f.seed;
  if (f.jobs) cfg.jobs = *f.jobs;
  if (f.gmm_k) cfg.bam.seg.gmm_k = *f.gmm_k;
  if (f.gradcam_th) cfg.bam.gradcam_th = *f.gradcam_th;
  if (f.min_area_frac) cfg.bam.seg.min_area_fraction = *f.min_area_frac;
  if (f.epochs) cfg.train.epochs = *f.epochs;
  if (f.no_normalize) cfg.bam.normalize_gradcam = false;
  cfg.resolve();
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Boundary attention mapping: synthetic data, toy CNN, Grad-CAM, BAM fusion, GMM segmentation"};
  app.require_subcommand(1);
  app.fallthrough();

  Flags f;
  app.add_option("--config", f.config, "JSON pipeline config")->check(CLI::ExistingFile);
  app.add_option("--seed", f.seed, "Seed for data, initialization, dropout and EM");
  app.add_option("--jobs", f.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", f.out, "Run directory")->capture_default_str();
  app.add_option("--gmm-k", f.gmm_k, "Gaussian components for thresholding")->check(CLI::Range(2, 6));
  app.add_option("--gradcam-th", f.gradcam_th, "Grad-CAM baseline threshold (default 0.2)")->check(CLI::Range(0.0, 1.0));
  app.add_option("--min-area-frac", f.min_area_frac, "Noise filter area fraction (default 0.10)")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--epochs", f.epochs, "Training epochs");
  app.add_flag("--no-normalize-gradcam", f.no_normalize, "Threshold Grad-CAM without min-max normalization");

  struct Sub {
    const char* name;
    const char* help;
    bool takes_image;
  };
  const Sub subs[] = {
      {"synth", "Generate the synthetic dataset and LDI-style scans", false},
      {"train", "Train the classifier", false},
      {"eval-clf", "Classifier report on the test split", false},
      {"gradcam", "Grad-CAM heatmaps and baseline masks", true},
      {"bam", "BAM heatmaps, segmentations and overlays", true},
      {"segment", "Re-segment BAM heatmaps", false},
      {"ldi-prep", "Align scans and build healing-potential masks", false},
      {"eval-seg", "Segmentation metrics report", false},
      {"pipeline", "Run every stage", false},
  };
  for (const auto& s : subs) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    if (s.takes_image) cmd->add_option("--image", f.image, "Single 8-bit PNG instead of the test split");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const pipeline::PipelineConfig cfg = build_config(f);
    const fs::path out = f.out;
    std::optional<fs::path> image;
    if (f.image) image = fs::path(*f.image);
    if (name == "synth") pipeline::cmd_synth(cfg, out);
    else if (name == "train") pipeline::cmd_train(cfg, out);
    else if (name == "eval-clf") pipeline::cmd_eval_clf(cfg, out);
    else if (name == "gradcam") pipeline::cmd_gradcam(cfg, out, image);
    else if (name == "bam") pipeline::cmd_bam(cfg, out, image);
    else if (name == "segment") pipeline::cmd_segment(cfg, out);
    else if (name == "ldi-prep") pipeline::cmd_ldi_prep(cfg, out);
    else if (name == "eval-seg") std::cout << pipeline::cmd_eval_seg(cfg, out).table;
    else if (name == "pipeline") {
      pipeline::cmd_pipeline(cfg, out);
      std::cout << read_text(out / "reports" / "segmentation_table.txt");
    }
  } catch (const Error& e) {
    spdlog::error("{}: {}", name, e.what());
    switch (e.code()) {
      case ErrorCode::kNumeric: return kNumericFailure;
      case ErrorCode::kInvalidArgument: return kUsage;
      default: return kInvalidInput;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}: {}", name, e.what());
    return kInvalidInput;
  }
  return kOk;
}
