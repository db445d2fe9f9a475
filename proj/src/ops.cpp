#include "bamkit/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bamkit/simd/kernels.hpp"

namespace bamkit::ops {

namespace {

constexpr std::size_t kNarrowWidth = 16;
constexpr std::size_t kDeepReceptive = 64;

std::string dim_msg(const char* op, const char* what, std::size_t got, std::size_t want) {
  return std::string(op) + ": " + what + " is " + std::to_string(got) + ", expected " + std::to_string(want);
}

template <typename T>
void check_conv_shapes(const BasicTensor<T>& input, const BasicTensor<T>& kernels, std::size_t stride,
                       std::size_t padding) {
  require(input.rank() == 3, ErrorCode::kShapeMismatch,
          "conv2d: input must be [C_in,H,W], got " + shape_string(input.shape()));
  require(kernels.rank() == 4, ErrorCode::kShapeMismatch,
          "conv2d: kernels must be [C_out,C_in,kh,kw], got " + shape_string(kernels.shape()));
  require(kernels.dim(1) == input.dim(0), ErrorCode::kShapeMismatch,
          dim_msg("conv2d", "kernel dim 1 (C_in)", kernels.dim(1), input.dim(0)));
  require(stride >= 1, ErrorCode::kInvalidArgument, "conv2d: stride must be >= 1");
  require(kernels.dim(2) <= input.dim(1) + 2 * padding, ErrorCode::kShapeMismatch,
          "conv2d: kernel height " + std::to_string(kernels.dim(2)) + " exceeds padded input height " +
              std::to_string(input.dim(1) + 2 * padding));
  require(kernels.dim(3) <= input.dim(2) + 2 * padding, ErrorCode::kShapeMismatch,
          "conv2d: kernel width " + std::to_string(kernels.dim(3)) + " exceeds padded input width " +
              std::to_string(input.dim(2) + 2 * padding));
}

// Output columns ox with 0 <= ox + kx - pad < W, for stride 1.
struct ColumnRange {
  std::size_t lo;
  std::size_t hi;
};

inline ColumnRange valid_columns(std::size_t kx, std::size_t pad, std::size_t in_w, std::size_t out_w) {
  const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(pad);
  const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
  const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(out_w),
                                                     static_cast<std::ptrdiff_t>(in_w) - shift);
  if (hi <= lo) return {0, 0};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernels, const BasicTensor<T>& bias,
                      std::size_t stride, std::size_t padding) {
  check_conv_shapes(input, kernels, stride, padding);
  const std::size_t cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t cout = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
  require_shape(bias.shape(), Shape{cout}, "conv2d bias");
  const std::size_t oh = (h + 2 * padding - kh) / stride + 1;
  const std::size_t ow = (w + 2 * padding - kw) / stride + 1;

  BasicTensor<T> out(Shape{cout, oh, ow});
  const T* in = input.ptr();
  const T* ker = kernels.ptr();
  T* o = out.ptr();

  if (ow < kNarrowWidth || (ow <= kNarrowWidth && cin * kh * kw >= kDeepReceptive)) {
    // narrow maps or long receptive fields: gather each field once, then one dot per output
    const std::size_t k = cin * kh * kw, npix = oh * ow;
    std::vector<T> patches(npix * k, T{0});
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        T* patch = &patches[(oy * ow + ox) * k];
        for (std::size_t ci = 0; ci < cin; ++ci)
          for (std::size_t ky = 0; ky < kh; ++ky) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(padding);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const std::ptrdiff_t ix =
                  static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(padding);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
              patch[(ci * kh + ky) * kw + kx] = in[(ci * h + iy) * w + ix];
            }
          }
      }
    std::size_t co = 0;
    for (; co + 4 <= cout; co += 4)
      for (std::size_t p = 0; p < npix; ++p) {
        T d[4];
        simd::dot4(ker + co * k, k, &patches[p * k], k, d);
        for (std::size_t r = 0; r < 4; ++r) o[(co + r) * npix + p] = bias[co + r] + d[r];
      }
    for (; co < cout; ++co)
      for (std::size_t p = 0; p < npix; ++p) o[co * npix + p] = bias[co] + simd::dot(ker + co * k, &patches[p * k], k);
    return out;
  }

  for (std::size_t co = 0; co < cout; ++co) {
    T* oplane = o + co * oh * ow;
    std::fill(oplane, oplane + oh * ow, bias[co]);
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const T* iplane = in + ci * h * w;
      for (std::size_t ky = 0; ky < kh; ++ky) {
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const T wv = ker[((co * cin + ci) * kh + ky) * kw + kx];
          if (stride == 1) {
            const auto cols = valid_columns(kx, padding, w, ow);
            if (cols.hi == cols.lo) continue;
            for (std::size_t oy = 0; oy < oh; ++oy) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) - static_cast<std::ptrdiff_t>(padding);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
              simd::axpy(wv, iplane + iy * w + (cols.lo + kx - padding), oplane + oy * ow + cols.lo,
                         cols.hi - cols.lo);
            }
          } else {
            for (std::size_t oy = 0; oy < oh; ++oy) {
              const std::ptrdiff_t iy =
                  static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(padding);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
              for (std::size_t ox = 0; ox < ow; ++ox) {
                const std::ptrdiff_t ix =
                    static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(padding);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                oplane[oy * ow + ox] += wv * iplane[iy * w + ix];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
Conv2dGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& kernels,
                               const BasicTensor<T>& grad_out, std::size_t stride, std::size_t padding,
                               bool input_grad) {
  check_conv_shapes(input, kernels, stride, padding);
  const std::size_t cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t cout = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
  const std::size_t oh = (h + 2 * padding - kh) / stride + 1;
  const std::size_t ow = (w + 2 * padding - kw) / stride + 1;
  require_shape(grad_out.shape(), Shape{cout, oh, ow}, "conv2d grad_out");

  Conv2dGrads<T> g{BasicTensor<T>(input.shape()), BasicTensor<T>(kernels.shape()), BasicTensor<T>(Shape{cout})};
  const T* in = input.ptr();
  const T* ker = kernels.ptr();
  const T* go = grad_out.ptr();
  T* gin = g.input.ptr();
  T* gk = g.kernels.ptr();

  for (std::size_t co = 0; co < cout; ++co) {
    const T* goplane = go + co * oh * ow;
    g.bias[co] = simd::sum(goplane, oh * ow);
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const T* iplane = in + ci * h * w;
      T* giplane = gin + ci * h * w;
      for (std::size_t ky = 0; ky < kh; ++ky) {
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const std::size_t kidx = ((co * cin + ci) * kh + ky) * kw + kx;
          const T wv = ker[kidx];
          T acc = 0;
          if (stride == 1) {
            const auto cols = valid_columns(kx, padding, w, ow);
            if (cols.hi == cols.lo) continue;
            const std::size_t len = cols.hi - cols.lo;
            for (std::size_t oy = 0; oy < oh; ++oy) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) - static_cast<std::ptrdiff_t>(padding);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
              const std::size_t ioff = iy * w + (cols.lo + kx - padding);
              const T* grow = goplane + oy * ow + cols.lo;
              acc += simd::dot(grow, iplane + ioff, len);
              if (input_grad) simd::axpy(wv, grow, giplane + ioff, len);
            }
          } else {
            for (std::size_t oy = 0; oy < oh; ++oy) {
              const std::ptrdiff_t iy =
                  static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(padding);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
              for (std::size_t ox = 0; ox < ow; ++ox) {
                const std::ptrdiff_t ix =
                    static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(padding);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                const T gv = goplane[oy * ow + ox];
                acc += gv * iplane[iy * w + ix];
                if (input_grad) giplane[iy * w + ix] += wv * gv;
              }
            }
          }
          gk[kidx] += acc;
        }
      }
    }
  }
  return g;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  BasicTensor<T> y = x;
  for (T& v : y.data()) v = v > T{0} ? v : T{0};
  return y;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& grad_out) {
  require_shape(grad_out.shape(), x.shape(), "relu grad_out");
  BasicTensor<T> g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] > T{0} ? grad_out[i] : T{0};
  return g;
}

template <typename T>
MaxPoolResult<T> maxpool2d(const BasicTensor<T>& x, std::size_t k, std::size_t stride) {
  require(x.rank() == 3, ErrorCode::kShapeMismatch, "maxpool2d: input must be [C,H,W], got " + shape_string(x.shape()));
  require(k >= 1 && stride >= 1, ErrorCode::kInvalidArgument, "maxpool2d: window and stride must be >= 1");
  require(k <= x.dim(1) && k <= x.dim(2), ErrorCode::kInvalidArgument,
          "maxpool2d: window " + std::to_string(k) + " exceeds input " + shape_string(x.shape()));
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t oh = (h - k) / stride + 1, ow = (w - k) / stride + 1;
  MaxPoolResult<T> r{BasicTensor<T>(Shape{c, oh, ow}), std::vector<std::size_t>(c * oh * ow)};
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = (ch * h + oy * stride) * w + ox * stride;
        for (std::size_t dy = 0; dy < k; ++dy) {
          for (std::size_t dx = 0; dx < k; ++dx) {
            const std::size_t idx = (ch * h + oy * stride + dy) * w + ox * stride + dx;
            if (x[idx] > x[best]) best = idx;
          }
        }
        const std::size_t o = (ch * oh + oy) * ow + ox;
        r.output[o] = x[best];
        r.argmax[o] = best;
      }
    }
  }
  return r;
}

template <typename T>
BasicTensor<T> maxpool2d_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                                  const BasicTensor<T>& grad_out) {
  require(argmax.size() == grad_out.size(), ErrorCode::kShapeMismatch, "maxpool2d_backward: argmax size mismatch");
  BasicTensor<T> g(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) g[argmax[i]] += grad_out[i];
  return g;
}

template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x) {
  require(x.rank() == 3, ErrorCode::kShapeMismatch,
          "global_avg_pool: expected [C,H,W], got " + shape_string(x.shape()));
  const std::size_t c = x.dim(0), plane = x.dim(1) * x.dim(2);
  BasicTensor<T> y(Shape{c});
  for (std::size_t k = 0; k < c; ++k) y[k] = simd::sum(x.ptr() + k * plane, plane) / static_cast<T>(plane);
  return y;
}

template <typename T>
BasicTensor<T> global_avg_pool_backward(const Shape& input_shape, const BasicTensor<T>& grad_out) {
  require(input_shape.size() == 3 && grad_out.rank() == 1 && grad_out.dim(0) == input_shape[0],
          ErrorCode::kShapeMismatch, "global_avg_pool_backward: gradient does not match input channels");
  const std::size_t plane = input_shape[1] * input_shape[2];
  BasicTensor<T> g(input_shape);
  for (std::size_t k = 0; k < input_shape[0]; ++k) {
    const T v = grad_out[k] / static_cast<T>(plane);
    std::fill(g.ptr() + k * plane, g.ptr() + (k + 1) * plane, v);
  }
  return g;
}

template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& x, const BasicTensor<T>& weights, const BasicTensor<T>& bias) {
  require(x.rank() == 1, ErrorCode::kShapeMismatch, "dense: input must be a vector, got " + shape_string(x.shape()));
  require(weights.rank() == 2, ErrorCode::kShapeMismatch,
          "dense: weights must be [m,n], got " + shape_string(weights.shape()));
  require(weights.dim(1) == x.dim(0), ErrorCode::kShapeMismatch,
          dim_msg("dense", "weights dim 1 (n)", weights.dim(1), x.dim(0)));
  const std::size_t m = weights.dim(0), n = weights.dim(1);
  require_shape(bias.shape(), Shape{m}, "dense bias");
  BasicTensor<T> y(Shape{m});
  for (std::size_t r = 0; r < m; ++r) y[r] = simd::dot(weights.ptr() + r * n, x.ptr(), n) + bias[r];
  return y;
}

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& x, const BasicTensor<T>& weights, const BasicTensor<T>& grad_out) {
  const std::size_t m = weights.dim(0), n = weights.dim(1);
  require_shape(grad_out.shape(), Shape{m}, "dense grad_out");
  DenseGrads<T> g{BasicTensor<T>(x.shape()), BasicTensor<T>(weights.shape()), grad_out};
  for (std::size_t r = 0; r < m; ++r) {
    const T gy = grad_out[r];
    if (gy == T{0}) continue;
    simd::axpy(gy, weights.ptr() + r * n, g.input.ptr(), n);
    simd::axpy(gy, x.ptr(), g.weights.ptr() + r * n, n);
  }
  return g;
}

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& x) {
  require(x.rank() == 1, ErrorCode::kShapeMismatch, "softmax: input must be a vector");
  const T mx = *std::max_element(x.data().begin(), x.data().end());
  BasicTensor<T> y(x.shape());
  T total = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = std::exp(x[i] - mx);
    total += y[i];
  }
  for (T& v : y.data()) v /= total;
  return y;
}

template <typename T>
BasicTensor<T> softmax_backward(const BasicTensor<T>& y, const BasicTensor<T>& grad_out) {
  require_shape(grad_out.shape(), y.shape(), "softmax grad_out");
  const T inner = simd::dot(grad_out.ptr(), y.ptr(), y.size());
  BasicTensor<T> g(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) g[i] = y[i] * (grad_out[i] - inner);
  return g;
}

template <typename T>
T cross_entropy(const BasicTensor<T>& probs, std::size_t label) {
  require(probs.rank() == 1, ErrorCode::kShapeMismatch, "cross_entropy: probs must be a vector");
  require(label < probs.size(), ErrorCode::kInvalidArgument,
          "cross_entropy: label " + std::to_string(label) + " out of range for " + std::to_string(probs.size()) +
              " classes");
  return -std::log(std::max<T>(probs[label], static_cast<T>(kProbabilityFloor)));
}

template <typename T>
BasicTensor<T> cross_entropy_backward(const BasicTensor<T>& probs, std::size_t label, T grad_out) {
  require(label < probs.size(), ErrorCode::kInvalidArgument, "cross_entropy: label out of range");
  BasicTensor<T> g(probs.shape());
  const T p = probs[label];
  if (p > static_cast<T>(kProbabilityFloor)) g[label] = -grad_out / p;
  return g;
}

#define BAMKIT_INSTANTIATE(T)                                                                                    \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&,           \
                                 std::size_t, std::size_t);                                                     \
  template Conv2dGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&,  \
                                          std::size_t, std::size_t, bool);                                          \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                                          \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);                          \
  template MaxPoolResult<T> maxpool2d(const BasicTensor<T>&, std::size_t, std::size_t);                         \
  template BasicTensor<T> maxpool2d_backward(const Shape&, const std::vector<std::size_t>&,                     \
                                             const BasicTensor<T>&);                                            \
  template BasicTensor<T> global_avg_pool(const BasicTensor<T>&);                                               \
  template BasicTensor<T> global_avg_pool_backward(const Shape&, const BasicTensor<T>&);                        \
  template BasicTensor<T> dense(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&);           \
  template DenseGrads<T> dense_backward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&);   \
  template BasicTensor<T> softmax(const BasicTensor<T>&);                                                       \
  template BasicTensor<T> softmax_backward(const BasicTensor<T>&, const BasicTensor<T>&);                       \
  template T cross_entropy(const BasicTensor<T>&, std::size_t);                                                 \
  template BasicTensor<T> cross_entropy_backward(const BasicTensor<T>&, std::size_t, T);

BAMKIT_INSTANTIATE(float)
BAMKIT_INSTANTIATE(double)

#undef BAMKIT_INSTANTIATE

}  // namespace bamkit::ops
