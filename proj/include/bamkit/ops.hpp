#pragma once

// Forward and backward kernels of the primitive tensor ops. Convolution is
// cross-correlation (no kernel flip) everywhere in this library.

#include <cstddef>
#include <vector>

#include "bamkit/tensor.hpp"

namespace bamkit::ops {

template <typename T>
struct Conv2dGrads {
  BasicTensor<T> input;
  BasicTensor<T> kernels;
  BasicTensor<T> bias;
};

// input [C_in,H,W], kernels [C_out,C_in,kh,kw], bias [C_out] -> [C_out,H',W'],
// H' = (H + 2*padding - kh) / stride + 1.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernels, const BasicTensor<T>& bias,
                      std::size_t stride, std::size_t padding);

// With `input_grad` false the input gradient is left as zeros (saves the
// work for first-layer convolutions on images).
template <typename T>
Conv2dGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                               const BasicTensor<T>& grad_out, std::size_t stride, std::size_t padding,
                               bool input_grad = true);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& grad_out);

template <typename T>
struct MaxPoolResult {
  BasicTensor<T> output;
  std::vector<std::size_t> argmax;  // flat input index per output element
};

// Ties go to the first element in row-major window order.
template <typename T>
MaxPoolResult<T> maxpool2d(const BasicTensor<T>& x, std::size_t k, std::size_t stride);

template <typename T>
BasicTensor<T> maxpool2d_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                                  const BasicTensor<T>& grad_out);

// [C,H,W] -> [C], mean over each channel.
template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> global_avg_pool_backward(const Shape& input_shape, const BasicTensor<T>& grad_out);

// x [n], weights [m,n], bias [m] -> [m]
template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& x, const BasicTensor<T>& weights, const BasicTensor<T>& bias);

template <typename T>
struct DenseGrads {
  BasicTensor<T> input;
  BasicTensor<T> weights;
  BasicTensor<T> bias;
};

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& x, const BasicTensor<T>& weights, const BasicTensor<T>& grad_out);

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> softmax_backward(const BasicTensor<T>& y, const BasicTensor<T>& grad_out);

inline constexpr double kProbabilityFloor = 1e-12;

// -log(max(probs[label], 1e-12))
template <typename T>
T cross_entropy(const BasicTensor<T>& probs, std::size_t label);

template <typename T>
BasicTensor<T> cross_entropy_backward(const BasicTensor<T>& probs, std::size_t label, T grad_out);

}  // namespace bamkit::ops
