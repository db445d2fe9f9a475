#include "bamkit/cnn/model.hpp"

#include <algorithm>
#include <cmath>

namespace bamkit::cnn {

namespace {

std::size_t pooled(std::size_t n, std::size_t pool) { return pool > 1 ? (n - pool) / pool + 1 : n; }

std::string conv_name(std::size_t i, const char* what) { return "conv" + std::to_string(i + 1) + "." + what; }

}  // namespace

void ModelConfig::validate() const {
  require(!conv_blocks.empty(), ErrorCode::kInvalidArgument, "model needs at least one conv block");
  require(input_size > 0 && input_channels > 0, ErrorCode::kInvalidArgument, "input dimensions must be positive");
  require(num_classes >= 2, ErrorCode::kInvalidArgument, "need at least two classes");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, ErrorCode::kInvalidArgument, "dropout rate must be in [0,1)");
  std::size_t size = input_size;
  for (const auto& b : conv_blocks) {
    require(b.channels > 0, ErrorCode::kInvalidArgument, "conv block channels must be positive");
    require(b.kernel % 2 == 1, ErrorCode::kInvalidArgument, "conv kernels must be odd-sized");
    require(b.pool <= size, ErrorCode::kInvalidArgument,
            "pool window " + std::to_string(b.pool) + " exceeds feature size " + std::to_string(size));
    size = pooled(size, b.pool);
  }
}

Shape ModelConfig::first_layer_shape() const { return {conv_blocks.front().channels, input_size, input_size}; }

Shape ModelConfig::last_conv_shape() const {
  std::size_t size = input_size;
  for (std::size_t i = 0; i + 1 < conv_blocks.size(); ++i) size = pooled(size, conv_blocks[i].pool);
  return {conv_blocks.back().channels, size, size};
}

std::size_t ModelConfig::flat_features() const {
  const Shape last = last_conv_shape();
  if (global_pool) return last[0];
  const std::size_t s = pooled(last[1], conv_blocks.back().pool);
  return last[0] * s * s;
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : c.conv_blocks) blocks.push_back({{"channels", b.channels}, {"kernel", b.kernel}, {"pool", b.pool}});
  j = {{"input_size", c.input_size},       {"input_channels", c.input_channels},
       {"first_layer_channels", c.first_layer_channels()},
       {"conv_blocks", blocks},            {"global_pool", c.global_pool},
       {"hidden_units", c.hidden_units},
       {"num_classes", c.num_classes},     {"dropout_rate", c.dropout_rate}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  c = ModelConfig{};
  c.input_size = j.value("input_size", c.input_size);
  c.input_channels = j.value("input_channels", c.input_channels);
  if (j.contains("conv_blocks")) {
    c.conv_blocks.clear();
    for (const auto& b : j.at("conv_blocks")) {
      c.conv_blocks.push_back({b.value("channels", std::size_t{16}), b.value("kernel", std::size_t{3}),
                               b.value("pool", std::size_t{2})});
    }
  }
  if (j.contains("first_layer_channels") && !c.conv_blocks.empty()) {
    c.conv_blocks.front().channels = j.at("first_layer_channels").get<std::size_t>();
  }
  c.global_pool = j.value("global_pool", c.global_pool);
  c.hidden_units = j.value("hidden_units", c.hidden_units);
  c.num_classes = j.value("num_classes", c.num_classes);
  c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
}

template <typename T>
const BasicTensor<T>& find_param(const Params<T>& params, const std::string& name) {
  for (const auto& [n, t] : params) {
    if (n == name) return t;
  }
  fail(ErrorCode::kInvalidData, "missing parameter " + name);
}

template <typename T>
BasicTensor<T>& find_param(Params<T>& params, const std::string& name) {
  for (auto& [n, t] : params) {
    if (n == name) return t;
  }
  fail(ErrorCode::kInvalidData, "missing parameter " + name);
}

template <typename T>
Model<T>::Model(ModelConfig config, Params<T> params) : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  std::size_t in_ch = config_.input_channels;
  for (std::size_t i = 0; i < config_.conv_blocks.size(); ++i) {
    const auto& b = config_.conv_blocks[i];
    require_shape(find_param(params_, conv_name(i, "weight")).shape(), Shape{b.channels, in_ch, b.kernel, b.kernel},
                  conv_name(i, "weight"));
    require_shape(find_param(params_, conv_name(i, "bias")).shape(), Shape{b.channels}, conv_name(i, "bias"));
    in_ch = b.channels;
  }
  const std::size_t feat = config_.flat_features();
  if (config_.hidden_units > 0) {
    require_shape(find_param(params_, "fc1.weight").shape(), Shape{config_.hidden_units, feat}, "fc1.weight");
    require_shape(find_param(params_, "fc1.bias").shape(), Shape{config_.hidden_units}, "fc1.bias");
  }
  const std::size_t head_in = config_.hidden_units > 0 ? config_.hidden_units : feat;
  require_shape(find_param(params_, "fc2.weight").shape(), Shape{config_.num_classes, head_in}, "fc2.weight");
  require_shape(find_param(params_, "fc2.bias").shape(), Shape{config_.num_classes}, "fc2.bias");
}

template <typename T>
Model<T> Model<T>::initialize(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  Params<T> params;
  auto he_uniform = [&](Shape shape, std::size_t fan_in) {
    BasicTensor<T> t(std::move(shape));
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (T& v : t.data()) v = static_cast<T>(rng.uniform(-limit, limit));
    return t;
  };
  std::size_t in_ch = config.input_channels;
  for (std::size_t i = 0; i < config.conv_blocks.size(); ++i) {
    const auto& b = config.conv_blocks[i];
    params.emplace_back(conv_name(i, "weight"),
                        he_uniform({b.channels, in_ch, b.kernel, b.kernel}, in_ch * b.kernel * b.kernel));
    params.emplace_back(conv_name(i, "bias"), BasicTensor<T>(Shape{b.channels}));
    in_ch = b.channels;
  }
  std::size_t feat = config.flat_features();
  if (config.hidden_units > 0) {
    params.emplace_back("fc1.weight", he_uniform({config.hidden_units, feat}, feat));
    params.emplace_back("fc1.bias", BasicTensor<T>(Shape{config.hidden_units}));
    feat = config.hidden_units;
  }
  params.emplace_back("fc2.weight", he_uniform({config.num_classes, feat}, feat));
  params.emplace_back("fc2.bias", BasicTensor<T>(Shape{config.num_classes}));
  return Model(config, std::move(params));
}

template <typename T>
Var Model<T>::forward(Tape<T>& tape, Var x, Stage start, Mode mode, Rng* rng) const {
  const auto& blocks = config_.conv_blocks;
  const std::size_t last = blocks.size() - 1;
  auto param = [&](const std::string& name) { return tape.parameter(name, find_param(params_, name)); };
  auto pool = [&](Var v, std::size_t i) { return blocks[i].pool > 1 ? tape.maxpool2d(v, blocks[i].pool, blocks[i].pool) : v; };

  std::size_t first_block = 0;
  Var h = x;
  if (start == Stage::kFirstLayer) {
    require_shape(tape.value(x).shape(), config_.first_layer_shape(), "first-layer activation");
    tape.tap(kTapFirstLayer, h);
    if (last == 0) tape.tap(kTapLastConv, h);
    h = pool(h, 0);
    first_block = 1;
  } else if (start == Stage::kLastConv) {
    require_shape(tape.value(x).shape(), config_.last_conv_shape(), "last conv activation");
    tape.tap(kTapLastConv, h);
    h = pool(h, last);
    first_block = blocks.size();
  } else {
    require_shape(tape.value(x).shape(), config_.input_shape(), "input image");
  }

  for (std::size_t i = first_block; i < blocks.size(); ++i) {
    const std::size_t pad = blocks[i].kernel / 2;
    h = tape.relu(tape.conv2d(h, param(conv_name(i, "weight")), param(conv_name(i, "bias")), 1, pad));
    if (i == 0) tape.tap(kTapFirstLayer, h);
    if (i == last) tape.tap(kTapLastConv, h);
    h = pool(h, i);
  }

  h = config_.global_pool ? tape.global_avg_pool(h) : tape.flatten(h);
  if (config_.hidden_units > 0) h = tape.relu(tape.dense(h, param("fc1.weight"), param("fc1.bias")));
  if (mode == Mode::kTraining && config_.dropout_rate > 0.0) {
    require(rng != nullptr, ErrorCode::kInvalidArgument, "training-mode forward needs an rng for dropout");
    h = tape.dropout(h, config_.dropout_rate, *rng);
  }
  return tape.dense(h, param("fc2.weight"), param("fc2.bias"));
}

template <typename T>
TapResult<T> forward_with_taps(const Model<T>& model, const BasicTensor<T>& image, std::optional<std::size_t> target) {
  Tape<T> tape;
  const Var logits = model.forward(tape, tape.input(image), Stage::kImage, Mode::kInference);
  TapResult<T> r;
  r.logits = tape.value(logits);
  const auto& lv = r.logits.vec();
  r.predicted_class = static_cast<std::size_t>(std::max_element(lv.begin(), lv.end()) - lv.begin());
  r.target_class = target.value_or(r.predicted_class);
  require(r.target_class < lv.size(), ErrorCode::kInvalidArgument, "target class out of range");
  const Var score = tape.select(logits, r.target_class);
  tape.backward(score);
  const Var a1 = *tape.tapped(kTapFirstLayer);
  const Var a_last = *tape.tapped(kTapLastConv);
  r.first_layer = tape.value(a1);
  r.last_conv = tape.value(a_last);
  r.last_conv_grad = tape.grad(a_last);
  return r;
}

template <typename T>
BasicTensor<T> predict_logits(const Model<T>& model, const BasicTensor<T>& image) {
  Tape<T> tape;
  return tape.value(model.forward(tape, tape.input(image)));
}

template class Model<float>;
template class Model<double>;
template const BasicTensor<float>& find_param(const Params<float>&, const std::string&);
template const BasicTensor<double>& find_param(const Params<double>&, const std::string&);
template BasicTensor<float>& find_param(Params<float>&, const std::string&);
template BasicTensor<double>& find_param(Params<double>&, const std::string&);
template TapResult<float> forward_with_taps(const Model<float>&, const BasicTensor<float>&, std::optional<std::size_t>);
template TapResult<double> forward_with_taps(const Model<double>&, const BasicTensor<double>&,
                                             std::optional<std::size_t>);
template BasicTensor<float> predict_logits(const Model<float>&, const BasicTensor<float>&);
template BasicTensor<double> predict_logits(const Model<double>&, const BasicTensor<double>&);

}  // namespace bamkit::cnn
