#pragma once

#include <cstdint>

#include "bamkit/tensor.hpp"

namespace bamkit {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  BasicTensor<T> first_moment;
  BasicTensor<T> second_moment;
  std::uint64_t step = 0;

  static AdamState zeros_like(const BasicTensor<T>& param) {
    return AdamState{BasicTensor<T>(param.shape()), BasicTensor<T>(param.shape()), 0};
  }
};

// One bias-corrected Adam update of `param` in place:
//   m = b1 m + (1-b1) g;  v = b2 v + (1-b2) g^2
//   param -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
template <typename T>
void adam_step(BasicTensor<T>& param, const BasicTensor<T>& grad, AdamState<T>& state, double lr,
               const AdamConfig& cfg = {});

}  // namespace bamkit
