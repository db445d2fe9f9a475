#include "bamkit/saliency/gradcam.hpp"

#include <algorithm>
#include <cmath>

namespace bamkit::saliency {

template <typename T>
std::vector<double> channel_importance(const BasicTensor<T>& gradients) {
  require(gradients.rank() == 3, ErrorCode::kShapeMismatch,
          "channel_importance expects [C,H,W] gradients, got " + shape_string(gradients.shape()));
  const std::size_t c = gradients.dim(0), plane = gradients.dim(1) * gradients.dim(2);
  std::vector<double> alpha(c, 0.0);
  for (std::size_t k = 0; k < c; ++k) {
    const T* p = gradients.ptr() + k * plane;
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i) s += static_cast<double>(p[i]);
    alpha[k] = s / static_cast<double>(plane);
  }
  return alpha;
}

template <typename T>
Heatmap gradcam(const BasicTensor<T>& activations, const std::vector<double>& weights) {
  require(activations.rank() == 3, ErrorCode::kShapeMismatch,
          "gradcam expects [C,H,W] activations, got " + shape_string(activations.shape()));
  require(weights.size() == activations.dim(0), ErrorCode::kShapeMismatch,
          "gradcam: " + std::to_string(weights.size()) + " weights for " + std::to_string(activations.dim(0)) +
              " channels");
  const std::size_t h = activations.dim(1), w = activations.dim(2), plane = h * w;
  Heatmap out(h, w);
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const T* p = activations.ptr() + k * plane;
    for (std::size_t i = 0; i < plane; ++i) out.values[i] += weights[k] * static_cast<double>(p[i]);
  }
  for (double& v : out.values) v = std::max(v, 0.0);
  return out;
}

namespace {

// Source coordinate and neighbours for output index i along one axis.
struct Tap {
  std::size_t lo, hi;
  double frac;
};

std::vector<Tap> axis_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  for (std::size_t i = 0; i < out; ++i) {
    const double src = out == 1 ? 0.5 * static_cast<double>(in - 1)
                                : static_cast<double>(i) * static_cast<double>(in - 1) / static_cast<double>(out - 1);
    const auto lo = std::min(static_cast<std::size_t>(std::floor(src)), in - 1);
    taps[i] = {lo, std::min(lo + 1, in - 1), src - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

Heatmap upsample_bilinear(const Heatmap& h, std::size_t out_h, std::size_t out_w) {
  require(out_h >= 1 && out_w >= 1, ErrorCode::kInvalidArgument, "upsample target must be at least 1x1");
  require(h.height >= 1 && h.width >= 1, ErrorCode::kInvalidArgument, "cannot resample an empty heatmap");
  const auto ty = axis_taps(h.height, out_h);
  const auto tx = axis_taps(h.width, out_w);
  Heatmap out(out_h, out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    for (std::size_t x = 0; x < out_w; ++x) {
      const Tap& a = ty[y];
      const Tap& b = tx[x];
      const double top = h(a.lo, b.lo) + b.frac * (h(a.lo, b.hi) - h(a.lo, b.lo));
      const double bottom = h(a.hi, b.lo) + b.frac * (h(a.hi, b.hi) - h(a.hi, b.lo));
      out(y, x) = top + a.frac * (bottom - top);
    }
  }
  return out;
}

Heatmap normalize_minmax(const Heatmap& h) {
  Heatmap out(h.height, h.width);
  if (h.values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(h.values.begin(), h.values.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < h.size(); ++i) out.values[i] = (h.values[i] - *lo) / range;
  return out;
}

BinaryMask binarize(const Heatmap& h, double th) {
  BinaryMask m(h.height, h.width);
  for (std::size_t i = 0; i < h.size(); ++i) m.bits[i] = h.values[i] >= th ? 1 : 0;
  return m;
}

template std::vector<double> channel_importance(const BasicTensor<float>&);
template std::vector<double> channel_importance(const BasicTensor<double>&);
template Heatmap gradcam(const BasicTensor<float>&, const std::vector<double>&);
template Heatmap gradcam(const BasicTensor<double>&, const std::vector<double>&);

}  // namespace bamkit::saliency
