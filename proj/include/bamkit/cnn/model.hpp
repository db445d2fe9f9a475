#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "bamkit/tape.hpp"
#include "bamkit/tensor.hpp"

namespace bamkit::cnn {

inline constexpr const char* kTapFirstLayer = "A1";
inline constexpr const char* kTapLastConv = "A_last";

struct ConvBlock {
  std::size_t channels = 16;
  std::size_t kernel = 3;  // odd; "same" padding of kernel / 2
  std::size_t pool = 2;    // max-pool window and stride; <= 1 disables
};

// Conv blocks (conv -> relu -> pool) followed by flatten (or global average
// pooling) -> [dense(hidden) -> relu] -> dropout -> dense(num_classes). The first block's activation is
// tapped as "A1", the last block's (before pooling) as "A_last".
struct ModelConfig {
  std::size_t input_size = 64;
  std::size_t input_channels = 3;
  std::vector<ConvBlock> conv_blocks = {{16, 3, 2}, {32, 3, 2}, {32, 3, 1}};
  bool global_pool = true;        // features: per-channel mean instead of flatten
  std::size_t hidden_units = 0;   // 0: logits directly from the features
  std::size_t num_classes = 4;
  double dropout_rate = 0.3;

  std::size_t first_layer_channels() const { return conv_blocks.front().channels; }
  void validate() const;

  Shape input_shape() const { return {input_channels, input_size, input_size}; }
  Shape first_layer_shape() const;
  Shape last_conv_shape() const;
  std::size_t flat_features() const;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

// Named parameter tensors in a fixed order: conv1.weight, conv1.bias, ...,
// fc1.weight, fc1.bias, fc2.weight, fc2.bias.
template <typename T>
using Params = std::vector<std::pair<std::string, BasicTensor<T>>>;

template <typename T>
const BasicTensor<T>& find_param(const Params<T>& params, const std::string& name);
template <typename T>
BasicTensor<T>& find_param(Params<T>& params, const std::string& name);

template <typename U, typename T>
Params<U> cast_params(const Params<T>& params) {
  Params<U> out;
  out.reserve(params.size());
  for (const auto& [name, t] : params) out.emplace_back(name, t.template cast<U>());
  return out;
}

// Where a forward pass begins. Starting later treats the supplied value as
// the activation at that point (used for finite-difference checks).
enum class Stage { kImage, kFirstLayer, kLastConv };

enum class Mode { kTraining, kInference };

template <typename T>
class Model {
 public:
  Model(ModelConfig config, Params<T> params);

  // He-uniform weights, zero biases.
  static Model initialize(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  const Params<T>& params() const noexcept { return params_; }
  Params<T>& params() noexcept { return params_; }

  // Records the network on `tape` starting from `x` and returns the logits.
  // `rng` is only used in training mode (dropout).
  Var forward(Tape<T>& tape, Var x, Stage start = Stage::kImage, Mode mode = Mode::kInference,
              Rng* rng = nullptr) const;

 private:
  ModelConfig config_;
  Params<T> params_;
};

template <typename T>
struct TapResult {
  BasicTensor<T> logits;
  std::size_t predicted_class = 0;
  std::size_t target_class = 0;
  BasicTensor<T> first_layer;      // A1  [C1,H1,W1]
  BasicTensor<T> last_conv;        // A_last [CL,HL,WL]
  BasicTensor<T> last_conv_grad;   // d logit[target] / d A_last
};

// Inference-mode pass that also differentiates the pre-softmax logit of the
// predicted class (or `target_class` if given) with respect to A_last.
template <typename T>
TapResult<T> forward_with_taps(const Model<T>& model, const BasicTensor<T>& image,
                               std::optional<std::size_t> target_class = std::nullopt);

template <typename T>
BasicTensor<T> predict_logits(const Model<T>& model, const BasicTensor<T>& image);

extern template class Model<float>;
extern template class Model<double>;

}  // namespace bamkit::cnn
