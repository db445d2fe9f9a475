#pragma once

#include <vector>

#include "json.hpp"

#include "bamkit/bam/fusion.hpp"
#include "bamkit/cnn/model.hpp"
#include "bamkit/image.hpp"
#include "bamkit/seg/segment.hpp"

namespace bamkit::pipeline {

struct BamParams {
  double gradcam_th = 0.2;
  bool normalize_gradcam = true;  // normalize before masking at gradcam_th
  seg::SegmentationConfig seg;
};

void to_json(nlohmann::json& j, const BamParams& p);
void from_json(const nlohmann::json& j, BamParams& p);

struct ImageAnalysis {
  cnn::TapResult<float> taps;
  std::vector<double> importance;
  Heatmap gradcam_coarse;      // at A_last resolution
  Heatmap gradcam;             // upsampled to A1 resolution, normalized if enabled
  BinaryMask gradcam_mask;     // baseline segmentation
  bam::SelectionTrace trace;
  Heatmap bam;                 // normalized fused map
  seg::SegmentationResult segmentation;
};

// Grad-CAM for the predicted class, greedy fusion of A1 against it and
// GMM segmentation of the fused map, all at A1 resolution.
ImageAnalysis analyze_image(const cnn::Model<float>& model, const Tensor& image, const BamParams& params);

}  // namespace bamkit::pipeline
