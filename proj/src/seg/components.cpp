#include "bamkit/seg/components.hpp"

namespace bamkit::seg {

Components label_components(const BinaryMask& mask) {
  const std::size_t h = mask.height, w = mask.width;
  Components c;
  c.labels.assign(h * w, 0);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < h * w; ++start) {
    if (!mask.bits[start] || c.labels[start]) continue;
    const auto label = static_cast<std::uint32_t>(c.areas.size() + 1);
    std::size_t area = 0;
    stack.push_back(start);
    c.labels[start] = label;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++area;
      const std::size_t y = p / w, x = p % w;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dy == 0 && dx == 0) continue;
          const auto ny = static_cast<std::ptrdiff_t>(y) + dy;
          const auto nx = static_cast<std::ptrdiff_t>(x) + dx;
          if (ny < 0 || nx < 0 || ny >= static_cast<std::ptrdiff_t>(h) || nx >= static_cast<std::ptrdiff_t>(w)) continue;
          const std::size_t q = static_cast<std::size_t>(ny) * w + static_cast<std::size_t>(nx);
          if (mask.bits[q] && !c.labels[q]) {
            c.labels[q] = label;
            stack.push_back(q);
          }
        }
      }
    }
    c.areas.push_back(area);
  }
  return c;
}

}  // namespace bamkit::seg
