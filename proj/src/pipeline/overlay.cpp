#include "bamkit/pipeline/overlay.hpp"

namespace bamkit::pipeline {

BinaryMask boundary(const BinaryMask& mask) {
  const auto h = static_cast<std::ptrdiff_t>(mask.height), w = static_cast<std::ptrdiff_t>(mask.width);
  BinaryMask out(mask.height, mask.width);
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      if (!mask.bits[y * w + x]) continue;
      bool edge = false;
      for (std::ptrdiff_t dy = -1; dy <= 1 && !edge; ++dy) {
        for (std::ptrdiff_t dx = -1; dx <= 1 && !edge; ++dx) {
          const std::ptrdiff_t ny = y + dy, nx = x + dx;
          edge = ny < 0 || nx < 0 || ny >= h || nx >= w || !mask.bits[ny * w + nx];
        }
      }
      out.bits[y * w + x] = edge ? 1 : 0;
    }
  }
  return out;
}

RgbImage draw_overlay(const RgbImage& image, const BinaryMask& mask, const ldi::Rgb& color) {
  require_same_dims(image.height, image.width, mask.height, mask.width, "overlay image vs mask");
  RgbImage out = image;
  const BinaryMask edge = boundary(mask);
  for (std::size_t i = 0; i < edge.size(); ++i) {
    if (edge.bits[i]) std::copy(color.begin(), color.end(), &out.pixels[3 * i]);
  }
  return out;
}

}  // namespace bamkit::pipeline
