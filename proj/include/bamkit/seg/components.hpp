#pragma once

#include <cstdint>
#include <vector>

#include "bamkit/image.hpp"

namespace bamkit::seg {

struct Components {
  std::vector<std::uint32_t> labels;  // 0 = background, 1..count per pixel
  std::vector<std::size_t> areas;     // areas[k - 1] is the area of component k
  std::size_t count() const noexcept { return areas.size(); }
};

// 8-connected labeling; components are numbered in row-major order of their
// first pixel.
Components label_components(const BinaryMask& mask);

}  // namespace bamkit::seg
