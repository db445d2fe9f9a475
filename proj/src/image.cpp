#include "bamkit/image.hpp"

#include <string>

#include "bamkit/simd/kernels.hpp"

namespace bamkit {

void require_same_dims(std::size_t h1, std::size_t w1, std::size_t h2, std::size_t w2, const char* what) {
  if (h1 == h2 && w1 == w2) return;
  fail(ErrorCode::kShapeMismatch, std::string(what) + ": dimension mismatch " + std::to_string(h1) + "x" +
                                      std::to_string(w1) + " vs " + std::to_string(h2) + "x" + std::to_string(w2));
}

Heatmap::Heatmap(std::size_t h, std::size_t w, std::vector<double> v) : height(h), width(w), values(std::move(v)) {
  require(values.size() == h * w, ErrorCode::kShapeMismatch, "heatmap value count does not match dimensions");
}

template <typename T>
Heatmap Heatmap::from_channel(const BasicTensor<T>& t, std::size_t c) {
  require(t.rank() == 3 && c < t.dim(0), ErrorCode::kShapeMismatch,
          "heatmap channel " + std::to_string(c) + " not in tensor " + shape_string(t.shape()));
  const std::size_t h = t.dim(1), w = t.dim(2);
  const T* p = t.ptr() + c * h * w;
  return Heatmap(h, w, std::vector<double>(p, p + h * w));
}

template Heatmap Heatmap::from_channel(const BasicTensor<float>&, std::size_t);
template Heatmap Heatmap::from_channel(const BasicTensor<double>&, std::size_t);

TensorD Heatmap::to_tensor() const { return TensorD(Shape{height, width}, values); }

Heatmap Heatmap::from_tensor(const TensorD& t) {
  require(t.rank() == 2, ErrorCode::kShapeMismatch, "heatmap tensor must be [H,W], got " + shape_string(t.shape()));
  return Heatmap(t.dim(0), t.dim(1), t.vec());
}

BinaryMask::BinaryMask(std::size_t h, std::size_t w, std::vector<std::uint8_t> b)
    : height(h), width(w), bits(std::move(b)) {
  require(bits.size() == h * w, ErrorCode::kShapeMismatch, "mask bit count does not match dimensions");
  for (auto& v : bits) {
    require(v <= 1, ErrorCode::kInvalidData, "mask bits must be 0 or 1");
  }
}

std::size_t BinaryMask::count() const { return simd::count_ones(bits.data(), bits.size()); }

bool BinaryMask::subset_of(const BinaryMask& other) const {
  require_same_dims(height, width, other.height, other.width, "mask subset");
  return simd::count_and(bits.data(), other.bits.data(), bits.size()) == count();
}

RgbImage RgbImage::from_tensor(const Tensor& chw) {
  require(chw.rank() == 3 && chw.dim(0) == 3, ErrorCode::kShapeMismatch,
          "RGB image tensor must be [3,H,W], got " + shape_string(chw.shape()));
  RgbImage img(chw.dim(1), chw.dim(2));
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) img.at(y, x)[c] = to_byte(chw.at(c, y, x));
    }
  }
  return img;
}

Tensor RgbImage::to_tensor() const {
  Tensor t(Shape{3, height, width});
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) t.at(c, y, x) = static_cast<float>(at(y, x)[c]) / 255.0f;
    }
  }
  return t;
}

}  // namespace bamkit
