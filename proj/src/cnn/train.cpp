#include "bamkit/cnn/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "bamkit/adam.hpp"
#include "bamkit/parallel.hpp"
#include "bamkit/rng.hpp"

namespace bamkit::cnn {

namespace {

constexpr std::uint64_t kShuffleStream = 0x5348;
constexpr std::uint64_t kDropoutStream = 0x4450;

std::size_t argmax(const Tensor& logits) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return best;
}

struct SampleGrad {
  GradientMap<float> grads;
  double loss = 0.0;
  bool correct = false;
};

}  // namespace

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"epochs", c.epochs},
       {"learning_rate", c.learning_rate},
       {"batch_size", c.batch_size},
       {"plateau_patience", c.plateau_patience},
       {"plateau_factor", c.plateau_factor},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  c.epochs = j.value("epochs", c.epochs);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.plateau_patience = j.value("plateau_patience", c.plateau_patience);
  c.plateau_factor = j.value("plateau_factor", c.plateau_factor);
  c.seed = j.value("seed", c.seed);
}

PlateauScheduler::PlateauScheduler(double lr, std::size_t patience, double factor)
    : lr_(lr), patience_(patience), factor_(factor), best_(-std::numeric_limits<double>::infinity()) {
  require(lr >= 0.0, ErrorCode::kInvalidArgument, "learning rate must be nonnegative");
  require(patience >= 1, ErrorCode::kInvalidArgument, "plateau patience must be at least 1");
  require(factor > 0.0 && factor <= 1.0, ErrorCode::kInvalidArgument, "plateau factor must be in (0, 1]");
}

bool PlateauScheduler::observe(double val_accuracy) {
  if (val_accuracy > best_) {
    best_ = val_accuracy;
    wait_ = 0;
    return false;
  }
  if (++wait_ < patience_) return false;
  lr_ *= factor_;
  wait_ = 0;
  return true;
}

void to_json(nlohmann::json& j, const EpochRecord& r) {
  j = {{"epoch", r.epoch},
       {"train_loss", r.train_loss},
       {"train_accuracy", r.train_accuracy},
       {"val_accuracy", r.val_accuracy},
       {"learning_rate", r.learning_rate}};
}

void from_json(const nlohmann::json& j, EpochRecord& r) {
  r.epoch = j.at("epoch").get<std::size_t>();
  r.train_loss = j.at("train_loss").get<double>();
  r.train_accuracy = j.at("train_accuracy").get<double>();
  r.val_accuracy = j.at("val_accuracy").get<double>();
  r.learning_rate = j.at("learning_rate").get<double>();
}

std::vector<std::size_t> predict_classes(const Model<float>& model, const Dataset& data, std::size_t jobs) {
  std::vector<std::size_t> out(data.size());
  parallel_for(data.size(), jobs, [&](std::size_t i) { out[i] = argmax(predict_logits(model, data[i].image)); });
  return out;
}

double accuracy(const Model<float>& model, const Dataset& data, std::size_t jobs) {
  require(!data.empty(), ErrorCode::kInvalidArgument, "accuracy of an empty dataset");
  const auto pred = predict_classes(model, data, jobs);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) hits += pred[i] == data[i].label;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

TrainResult train(Model<float> model, const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  require(!train_set.empty(), ErrorCode::kInvalidArgument, "training set is empty");
  require(!val_set.empty(), ErrorCode::kInvalidArgument, "validation set is empty");
  require(cfg.batch_size >= 1, ErrorCode::kInvalidArgument, "batch size must be at least 1");
  const std::size_t classes = model.config().num_classes;
  for (const auto& s : train_set) {
    require(s.label < classes, ErrorCode::kInvalidData, "training label out of range");
  }

  std::vector<AdamState<float>> states;
  for (const auto& [name, p] : model.params()) states.push_back(AdamState<float>::zeros_like(p));
  PlateauScheduler scheduler(cfg.learning_rate, cfg.plateau_patience, cfg.plateau_factor);
  TrainResult result{model, {}};
  Model<float>& m = result.model;

  std::vector<std::size_t> order(train_set.size());
  std::vector<SampleGrad> slots;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle = Rng::derive(cfg.seed, kShuffleStream, epoch);
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[shuffle.below(i + 1)]);

    const double lr = scheduler.lr();
    double loss_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - start);
      slots.assign(n, SampleGrad{});
      parallel_for(n, cfg.jobs, [&](std::size_t k) {
        const std::size_t idx = order[start + k];
        const Sample& s = train_set[idx];
        Rng dropout = Rng::derive(cfg.seed, kDropoutStream + epoch, idx);
        Tape<float> tape;
        const Var logits = m.forward(tape, tape.input(s.image), Stage::kImage, Mode::kTraining, &dropout);
        const Var loss = tape.cross_entropy(tape.softmax(logits), s.label);
        slots[k].loss = tape.value(loss)[0];
        slots[k].correct = argmax(tape.value(logits)) == s.label;
        slots[k].grads = tape.backward(loss);
      });
      const float inv = 1.0f / static_cast<float>(n);
      for (std::size_t p = 0; p < m.params().size(); ++p) {
        auto& [name, param] = m.params()[p];
        Tensor grad(param.shape());
        for (const auto& slot : slots) {
          const Tensor& g = slot.grads.at(name);
          for (std::size_t e = 0; e < grad.size(); ++e) grad[e] += g[e];
        }
        for (std::size_t e = 0; e < grad.size(); ++e) grad[e] *= inv;
        adam_step(param, grad, states[p], lr);
      }
      for (const auto& slot : slots) {
        loss_sum += slot.loss;
        hits += slot.correct;
      }
      if (!std::isfinite(loss_sum)) fail(ErrorCode::kNumeric, "training diverged: loss is not finite in epoch " + std::to_string(epoch));
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_accuracy = static_cast<double>(hits) / static_cast<double>(order.size());
    rec.val_accuracy = accuracy(m, val_set, cfg.jobs);
    rec.learning_rate = lr;
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    scheduler.observe(rec.val_accuracy);
  }
  return result;
}

}  // namespace bamkit::cnn
