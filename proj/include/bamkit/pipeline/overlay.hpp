#pragma once

#include "bamkit/image.hpp"
#include "bamkit/ldi/ldi.hpp"

namespace bamkit::pipeline {

// Mask pixels with at least one 8-neighbour outside the mask; pixels beyond
// the image edge count as outside.
BinaryMask boundary(const BinaryMask& mask);

// The image with the mask boundary painted in `color`.
RgbImage draw_overlay(const RgbImage& image, const BinaryMask& mask, const ldi::Rgb& color);

}  // namespace bamkit::pipeline
