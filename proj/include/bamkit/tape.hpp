#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bamkit/rng.hpp"
#include "bamkit/tensor.hpp"

namespace bamkit {

// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

template <typename T>
using GradientMap = std::map<std::string, BasicTensor<T>>;

// Records primitive ops during a forward pass and replays them in exact reverse
// order to accumulate gradients. Parameters and tapped activations are named;
// backward() returns the gradient of the seed with respect to each of them.
// One tape serves one forward pass on one image.
template <typename T>
class Tape {
 public:
  using TensorT = BasicTensor<T>;

  // A leaf. Gradients flow into it only if `requires_grad` is set.
  Var input(TensorT value, bool requires_grad = false);
  Var parameter(const std::string& name, TensorT value);
  void tap(const std::string& name, Var v);

  const TensorT& value(Var v) const { return nodes_.at(v.id).value; }
  std::optional<Var> tapped(const std::string& name) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  Var conv2d(Var x, Var kernels, Var bias, std::size_t stride, std::size_t padding);
  Var relu(Var x);
  Var maxpool2d(Var x, std::size_t k, std::size_t stride);
  Var flatten(Var x);
  Var global_avg_pool(Var x);
  Var dense(Var x, Var weights, Var bias);
  // Inverted dropout; identity when rate == 0.
  Var dropout(Var x, double rate, Rng& rng);
  Var softmax(Var x);
  Var cross_entropy(Var probs, std::size_t label);
  // Scalar element `index` of a vector, e.g. one class logit.
  Var select(Var x, std::size_t index);
  Var sum(Var x);
  Var scale(Var x, T factor);

  // Gradient of the scalar `seed` with respect to every parameter and tapped
  // activation, keyed by name. Throws if `seed` is not a scalar.
  GradientMap<T> backward(Var seed);

  // Gradient of any recorded node after the last backward() call (zeros if
  // the node did not receive one).
  TensorT grad(Var v) const;

  // Node ids whose backward rule ran during the last backward(), in order.
  const std::vector<std::size_t>& last_backward_order() const noexcept { return order_; }

 private:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  struct Node {
    TensorT value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool needs_grad = false;
  };

  Var push(TensorT value, std::vector<std::size_t> inputs, BackwardFn fn, bool leaf_needs_grad = false);
  TensorT& grad_slot(std::size_t id);
  void accumulate(std::size_t id, const TensorT& g);

  std::vector<Node> nodes_;
  std::vector<TensorT> grads_;
  std::vector<std::pair<std::string, std::size_t>> params_;
  std::vector<std::pair<std::string, std::size_t>> taps_;
  std::vector<std::size_t> order_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace bamkit
