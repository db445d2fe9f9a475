#pragma once

#include <cstdint>
#include <filesystem>

#include "json.hpp"

#include "bamkit/cnn/model.hpp"
#include "bamkit/cnn/synthetic.hpp"
#include "bamkit/cnn/train.hpp"
#include "bamkit/ldi/ldi.hpp"
#include "bamkit/pipeline/analysis.hpp"

namespace bamkit::pipeline {

struct PipelineConfig {
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  std::size_t n_train = 400;
  std::size_t n_val = 100;
  std::size_t n_test = 100;
  cnn::SyntheticSpec synthetic;
  cnn::ModelConfig model;
  cnn::TrainConfig train;
  BamParams bam;
  ldi::PaletteTable palette = ldi::PaletteTable::default_synthetic();
  double ldi_noise = 6.0;
  ldi::Rgb overlay_color = {0, 255, 0};

  // Copies `seed` into every component seed and `jobs` into training.
  void resolve();
  void validate() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);

PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace bamkit::pipeline
