#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bamkit/error.hpp"
#include "bamkit/tensor.hpp"

namespace bamkit {

// Single-channel float map, row-major.
struct Heatmap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  Heatmap() = default;
  Heatmap(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), values(h * w, fill) {}
  Heatmap(std::size_t h, std::size_t w, std::vector<double> v);

  std::size_t size() const noexcept { return values.size(); }
  double& operator()(std::size_t y, std::size_t x) { return values[y * width + x]; }
  double operator()(std::size_t y, std::size_t x) const { return values[y * width + x]; }
  bool operator==(const Heatmap&) const = default;

  // Channel `c` of a [C,H,W] tensor.
  template <typename T>
  static Heatmap from_channel(const BasicTensor<T>& t, std::size_t c);
  TensorD to_tensor() const;
  static Heatmap from_tensor(const TensorD& t);
};

// Single-channel mask whose bits are exactly 0 or 1.
struct BinaryMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(std::size_t h, std::size_t w, std::uint8_t fill = 0) : height(h), width(w), bits(h * w, fill ? 1 : 0) {}
  BinaryMask(std::size_t h, std::size_t w, std::vector<std::uint8_t> b);

  std::size_t size() const noexcept { return bits.size(); }
  std::uint8_t& operator()(std::size_t y, std::size_t x) { return bits[y * width + x]; }
  std::uint8_t operator()(std::size_t y, std::size_t x) const { return bits[y * width + x]; }
  std::size_t count() const;
  bool operator==(const BinaryMask&) const = default;

  // True when every set bit of *this is also set in `other`.
  bool subset_of(const BinaryMask& other) const;
};

// 8-bit interleaved RGB image.
struct RgbImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;  // 3 * height * width

  RgbImage() = default;
  RgbImage(std::size_t h, std::size_t w) : height(h), width(w), pixels(3 * h * w, 0) {}

  std::uint8_t* at(std::size_t y, std::size_t x) { return &pixels[3 * (y * width + x)]; }
  const std::uint8_t* at(std::size_t y, std::size_t x) const { return &pixels[3 * (y * width + x)]; }
  bool operator==(const RgbImage&) const = default;

  // [3,H,W] tensor with values in [0,1] <-> 8-bit image, value = round(255 v).
  static RgbImage from_tensor(const Tensor& chw);
  Tensor to_tensor() const;
};

inline std::uint8_t to_byte(double v) {
  const double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  return static_cast<std::uint8_t>(c * 255.0 + 0.5);
}

void require_same_dims(std::size_t h1, std::size_t w1, std::size_t h2, std::size_t w2, const char* what);

}  // namespace bamkit
