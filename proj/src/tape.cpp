#include "bamkit/tape.hpp"

#include <algorithm>

#include "bamkit/ops.hpp"
#include "bamkit/simd/kernels.hpp"

namespace bamkit {

template <typename T>
Var Tape<T>::push(TensorT value, std::vector<std::size_t> inputs, BackwardFn fn, bool leaf_needs_grad) {
  bool needs = leaf_needs_grad;
  for (std::size_t in : inputs) needs = needs || nodes_[in].needs_grad;
  nodes_.push_back(Node{std::move(value), std::move(inputs), std::move(fn), needs});
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::input(TensorT value, bool requires_grad) {
  return push(std::move(value), {}, nullptr, requires_grad);
}

template <typename T>
Var Tape<T>::parameter(const std::string& name, TensorT value) {
  const Var v = push(std::move(value), {}, nullptr, true);
  params_.emplace_back(name, v.id);
  return v;
}

template <typename T>
void Tape<T>::tap(const std::string& name, Var v) {
  require(v.id < nodes_.size(), ErrorCode::kInvalidArgument, "tap: unknown node for " + name);
  taps_.emplace_back(name, v.id);
}

template <typename T>
std::optional<Var> Tape<T>::tapped(const std::string& name) const {
  for (const auto& [n, id] : taps_) {
    if (n == name) return Var{id};
  }
  return std::nullopt;
}

template <typename T>
typename Tape<T>::TensorT& Tape<T>::grad_slot(std::size_t id) {
  if (grads_[id].empty()) grads_[id] = TensorT(nodes_[id].value.shape());
  return grads_[id];
}

template <typename T>
void Tape<T>::accumulate(std::size_t id, const TensorT& g) {
  if (!nodes_[id].needs_grad) return;
  TensorT& slot = grad_slot(id);
  simd::axpy(T{1}, g.ptr(), slot.ptr(), g.size());
}

template <typename T>
Var Tape<T>::conv2d(Var x, Var kernels, Var bias, std::size_t stride, std::size_t padding) {
  TensorT out = ops::conv2d(value(x), value(kernels), value(bias), stride, padding);
  return push(std::move(out), {x.id, kernels.id, bias.id}, [stride, padding](Tape& t, std::size_t self) {
    const auto& in = t.nodes_[self].inputs;
    auto g = ops::conv2d_backward(t.nodes_[in[0]].value, t.nodes_[in[1]].value, t.grads_[self], stride, padding,
                                  t.nodes_[in[0]].needs_grad);
    t.accumulate(in[0], g.input);
    t.accumulate(in[1], g.kernels);
    t.accumulate(in[2], g.bias);
  });
}

template <typename T>
Var Tape<T>::relu(Var x) {
  return push(ops::relu(value(x)), {x.id}, [](Tape& t, std::size_t self) {
    const std::size_t in = t.nodes_[self].inputs[0];
    t.accumulate(in, ops::relu_backward(t.nodes_[in].value, t.grads_[self]));
  });
}

template <typename T>
Var Tape<T>::maxpool2d(Var x, std::size_t k, std::size_t stride) {
  auto pooled = ops::maxpool2d(value(x), k, stride);
  return push(std::move(pooled.output), {x.id},
              [argmax = std::move(pooled.argmax)](Tape& t, std::size_t self) {
                const std::size_t in = t.nodes_[self].inputs[0];
                t.accumulate(in, ops::maxpool2d_backward(t.nodes_[in].value.shape(), argmax, t.grads_[self]));
              });
}

template <typename T>
Var Tape<T>::flatten(Var x) {
  return push(value(x).reshaped(Shape{value(x).size()}), {x.id}, [](Tape& t, std::size_t self) {
    const std::size_t in = t.nodes_[self].inputs[0];
    t.accumulate(in, t.grads_[self].reshaped(t.nodes_[in].value.shape()));
  });
}

template <typename T>
Var Tape<T>::global_avg_pool(Var x) {
  return push(ops::global_avg_pool(value(x)), {x.id}, [](Tape& t, std::size_t self) {
    const std::size_t in = t.nodes_[self].inputs[0];
    t.accumulate(in, ops::global_avg_pool_backward(t.nodes_[in].value.shape(), t.grads_[self]));
  });
}

template <typename T>
Var Tape<T>::dense(Var x, Var weights, Var bias) {
  return push(ops::dense(value(x), value(weights), value(bias)), {x.id, weights.id, bias.id},
              [](Tape& t, std::size_t self) {
                const auto& in = t.nodes_[self].inputs;
                auto g = ops::dense_backward(t.nodes_[in[0]].value, t.nodes_[in[1]].value, t.grads_[self]);
                t.accumulate(in[0], g.input);
                t.accumulate(in[1], g.weights);
                t.accumulate(in[2], g.bias);
              });
}

template <typename T>
Var Tape<T>::dropout(Var x, double rate, Rng& rng) {
  require(rate >= 0.0 && rate < 1.0, ErrorCode::kInvalidArgument, "dropout rate must be in [0, 1)");
  const TensorT& xv = value(x);
  TensorT mask(xv.shape());
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  for (T& m : mask.data()) m = rng.uniform() >= rate ? keep_scale : T{0};
  TensorT out = xv;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return push(std::move(out), {x.id}, [mask = std::move(mask)](Tape& t, std::size_t self) {
    TensorT g = t.grads_[self];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= mask[i];
    t.accumulate(t.nodes_[self].inputs[0], g);
  });
}

template <typename T>
Var Tape<T>::softmax(Var x) {
  return push(ops::softmax(value(x)), {x.id}, [](Tape& t, std::size_t self) {
    t.accumulate(t.nodes_[self].inputs[0], ops::softmax_backward(t.nodes_[self].value, t.grads_[self]));
  });
}

template <typename T>
Var Tape<T>::cross_entropy(Var probs, std::size_t label) {
  const T loss = ops::cross_entropy(value(probs), label);
  return push(TensorT::scalar(loss), {probs.id}, [label](Tape& t, std::size_t self) {
    const std::size_t in = t.nodes_[self].inputs[0];
    t.accumulate(in, ops::cross_entropy_backward(t.nodes_[in].value, label, t.grads_[self][0]));
  });
}

template <typename T>
Var Tape<T>::select(Var x, std::size_t index) {
  const TensorT& xv = value(x);
  require(index < xv.size(), ErrorCode::kInvalidArgument,
          "select: index " + std::to_string(index) + " out of range " + std::to_string(xv.size()));
  return push(TensorT::scalar(xv[index]), {x.id}, [index](Tape& t, std::size_t self) {
    const std::size_t in = t.nodes_[self].inputs[0];
    if (t.nodes_[in].needs_grad) t.grad_slot(in)[index] += t.grads_[self][0];
  });
}

template <typename T>
Var Tape<T>::sum(Var x) {
  const TensorT& xv = value(x);
  return push(TensorT::scalar(simd::sum(xv.ptr(), xv.size())), {x.id}, [](Tape& t, std::size_t self) {
    const std::size_t in = t.nodes_[self].inputs[0];
    t.accumulate(in, TensorT(t.nodes_[in].value.shape(), t.grads_[self][0]));
  });
}

template <typename T>
Var Tape<T>::scale(Var x, T factor) {
  TensorT out = value(x);
  for (T& v : out.data()) v *= factor;
  return push(std::move(out), {x.id}, [factor](Tape& t, std::size_t self) {
    TensorT g = t.grads_[self];
    for (T& v : g.data()) v *= factor;
    t.accumulate(t.nodes_[self].inputs[0], g);
  });
}

template <typename T>
GradientMap<T> Tape<T>::backward(Var seed) {
  require(seed.id < nodes_.size(), ErrorCode::kInvalidArgument, "backward: unknown seed node");
  require(nodes_[seed.id].value.size() == 1, ErrorCode::kShapeMismatch,
          "backward: seed must be a scalar, got shape " + shape_string(nodes_[seed.id].value.shape()));
  grads_.assign(nodes_.size(), TensorT{});
  order_.clear();
  grad_slot(seed.id)[0] = T{1};
  for (std::size_t id = seed.id + 1; id-- > 0;) {
    if (grads_[id].empty() || !nodes_[id].backward || !nodes_[id].needs_grad) continue;
    order_.push_back(id);
    nodes_[id].backward(*this, id);
  }
  GradientMap<T> out;
  auto emit = [&](const std::string& name, std::size_t id) {
    out[name] = grads_[id].empty() ? TensorT(nodes_[id].value.shape()) : grads_[id];
  };
  for (const auto& [name, id] : params_) emit(name, id);
  for (const auto& [name, id] : taps_) emit(name, id);
  return out;
}

template <typename T>
typename Tape<T>::TensorT Tape<T>::grad(Var v) const {
  require(v.id < nodes_.size(), ErrorCode::kInvalidArgument, "grad: unknown node");
  if (v.id >= grads_.size() || grads_[v.id].empty()) return TensorT(nodes_[v.id].value.shape());
  return grads_[v.id];
}

template class Tape<float>;
template class Tape<double>;

}  // namespace bamkit
