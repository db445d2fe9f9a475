#include "bamkit/pipeline/analysis.hpp"

#include "bamkit/saliency/gradcam.hpp"

namespace bamkit::pipeline {

void to_json(nlohmann::json& j, const BamParams& p) {
  j = {{"gradcam_th", p.gradcam_th},
       {"normalize_gradcam", p.normalize_gradcam},
       {"gmm_k", p.seg.gmm_k},
       {"min_area_fraction", p.seg.min_area_fraction},
       {"seed", p.seg.seed},
       {"gmm_max_iter", p.seg.gmm.max_iter},
       {"gmm_tol", p.seg.gmm.tol},
       {"gmm_variance_floor", p.seg.gmm.variance_floor},
       {"gmm_max_samples", p.seg.gmm.max_samples},
       {"gmm_restarts", p.seg.gmm.restarts}};
}

void from_json(const nlohmann::json& j, BamParams& p) {
  p = BamParams{};
  p.gradcam_th = j.value("gradcam_th", p.gradcam_th);
  p.normalize_gradcam = j.value("normalize_gradcam", p.normalize_gradcam);
  p.seg.gmm_k = j.value("gmm_k", p.seg.gmm_k);
  p.seg.min_area_fraction = j.value("min_area_fraction", p.seg.min_area_fraction);
  p.seg.seed = j.value("seed", p.seg.seed);
  p.seg.gmm.max_iter = j.value("gmm_max_iter", p.seg.gmm.max_iter);
  p.seg.gmm.tol = j.value("gmm_tol", p.seg.gmm.tol);
  p.seg.gmm.variance_floor = j.value("gmm_variance_floor", p.seg.gmm.variance_floor);
  p.seg.gmm.max_samples = j.value("gmm_max_samples", p.seg.gmm.max_samples);
  p.seg.gmm.restarts = j.value("gmm_restarts", p.seg.gmm.restarts);
}

ImageAnalysis analyze_image(const cnn::Model<float>& model, const Tensor& image, const BamParams& params) {
  ImageAnalysis a;
  a.taps = cnn::forward_with_taps(model, image);
  a.importance = saliency::channel_importance(a.taps.last_conv_grad);
  a.gradcam_coarse = saliency::gradcam(a.taps.last_conv, a.importance);
  const bam::ChannelStack stack = bam::ChannelStack::from_activations(a.taps.first_layer);
  a.gradcam = saliency::upsample_bilinear(a.gradcam_coarse, stack.height, stack.width);
  if (params.normalize_gradcam) a.gradcam = saliency::normalize_minmax(a.gradcam);
  a.gradcam_mask = saliency::binarize(a.gradcam, params.gradcam_th);
  a.trace = bam::greedy_fuse(stack, a.gradcam);
  a.bam = bam::bam_heatmap(a.trace);
  a.segmentation = seg::segment_heatmap(a.bam, a.gradcam_mask, params.seg);
  return a;
}

}  // namespace bamkit::pipeline
