#pragma once

#include <vector>

#include "bamkit/image.hpp"
#include "bamkit/tensor.hpp"

namespace bamkit::saliency {

// alpha_k = (1 / HW) * sum_ij grad[k, i, j]
template <typename T>
std::vector<double> channel_importance(const BasicTensor<T>& gradients);

// relu(sum_k alpha_k * A[k]) at the activation resolution.
template <typename T>
Heatmap gradcam(const BasicTensor<T>& activations, const std::vector<double>& weights);

// Corner-aligned bilinear resampling: output pixel (y', x') samples the input
// at (y' (H-1)/(H'-1), x' (W-1)/(W'-1)). A target extent of 1 samples the
// input centre line.
Heatmap upsample_bilinear(const Heatmap& h, std::size_t out_h, std::size_t out_w);

// Maps min -> 0 and max -> 1; a constant map becomes all zeros.
Heatmap normalize_minmax(const Heatmap& h);

// 1 where h >= th.
BinaryMask binarize(const Heatmap& h, double th);

}  // namespace bamkit::saliency
