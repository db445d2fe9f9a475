#include "bamkit/pipeline/config.hpp"

#include "bamkit/fsutil.hpp"

namespace bamkit::pipeline {

void PipelineConfig::resolve() {
  synthetic.seed = seed;
  train.seed = seed;
  train.jobs = jobs;
  bam.seg.seed = seed;
}

void PipelineConfig::validate() const {
  require(jobs >= 1, ErrorCode::kInvalidArgument, "jobs must be at least 1");
  require(n_train > 0 && n_val > 0 && n_test > 0, ErrorCode::kInvalidArgument, "split sizes must be positive");
  require(synthetic.image_size == model.input_size, ErrorCode::kInvalidArgument,
          "synthetic image_size must equal model input_size");
  model.validate();
  require(bam.seg.gmm_k >= 2 && bam.seg.gmm_k <= 6, ErrorCode::kInvalidArgument, "gmm_k must be in [2, 6]");
  require(bam.gradcam_th >= 0.0 && bam.gradcam_th <= 1.0, ErrorCode::kInvalidArgument, "gradcam_th must be in [0, 1]");
  require(bam.seg.min_area_fraction >= 0.0 && bam.seg.min_area_fraction <= 1.0, ErrorCode::kInvalidArgument,
          "min_area_fraction must be in [0, 1]");
  palette.validate();
}

void to_json(nlohmann::json& j, const PipelineConfig& c) {
  j = {{"seed", c.seed},
       {"jobs", c.jobs},
       {"data", {{"n_train", c.n_train}, {"n_val", c.n_val}, {"n_test", c.n_test}, {"synthetic", c.synthetic}}},
       {"model", c.model},
       {"train", c.train},
       {"bam", c.bam},
       {"ldi", {{"palette", c.palette}, {"noise", c.ldi_noise}}},
       {"overlay_color", c.overlay_color}};
}

void from_json(const nlohmann::json& j, PipelineConfig& c) {
  c = PipelineConfig{};
  c.seed = j.value("seed", c.seed);
  c.jobs = j.value("jobs", c.jobs);
  if (j.contains("data")) {
    const auto& d = j.at("data");
    c.n_train = d.value("n_train", c.n_train);
    c.n_val = d.value("n_val", c.n_val);
    c.n_test = d.value("n_test", c.n_test);
    if (d.contains("synthetic")) c.synthetic = d.at("synthetic").get<cnn::SyntheticSpec>();
  }
  if (j.contains("model")) c.model = j.at("model").get<cnn::ModelConfig>();
  if (j.contains("train")) c.train = j.at("train").get<cnn::TrainConfig>();
  if (j.contains("bam")) c.bam = j.at("bam").get<BamParams>();
  if (j.contains("ldi")) {
    const auto& l = j.at("ldi");
    if (l.contains("palette")) c.palette = l.at("palette").get<ldi::PaletteTable>();
    c.ldi_noise = l.value("noise", c.ldi_noise);
  }
  if (j.contains("overlay_color")) c.overlay_color = j.at("overlay_color").get<ldi::Rgb>();
}

PipelineConfig load_config(const std::filesystem::path& path) {
  require(std::filesystem::exists(path), ErrorCode::kIo, "config file not found: " + path.string());
  try {
    return nlohmann::json::parse(read_text(path)).get<PipelineConfig>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidData, "invalid config " + path.string() + ": " + e.what());
  }
}

}  // namespace bamkit::pipeline
