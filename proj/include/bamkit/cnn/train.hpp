#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "json.hpp"

#include "bamkit/cnn/model.hpp"
#include "bamkit/cnn/synthetic.hpp"

namespace bamkit::cnn {

struct TrainConfig {
  std::size_t epochs = 30;
  double learning_rate = 0.001;
  std::size_t batch_size = 16;
  std::size_t plateau_patience = 5;
  double plateau_factor = 0.5;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

// Halves (by `factor`) the learning rate once validation accuracy has failed
// to improve on its best value for `patience` consecutive epochs; the wait
// counter then restarts.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr, std::size_t patience, double factor);

  double lr() const noexcept { return lr_; }
  double best() const noexcept { return best_; }

  // Returns true when this observation reduced the learning rate.
  bool observe(double val_accuracy);

 private:
  double lr_;
  std::size_t patience_;
  double factor_;
  double best_;
  std::size_t wait_ = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double learning_rate = 0.0;  // rate used during this epoch
};

void to_json(nlohmann::json& j, const EpochRecord& r);
void from_json(const nlohmann::json& j, EpochRecord& r);

struct TrainResult {
  Model<float> model;
  std::vector<EpochRecord> history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch Adam on mean cross-entropy. Per-sample gradients may be computed
// on `jobs` threads; they are summed in sample order, so the result does not
// depend on `jobs`. Throws kNumeric if the loss stops being finite.
TrainResult train(Model<float> model, const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

std::vector<std::size_t> predict_classes(const Model<float>& model, const Dataset& data, std::size_t jobs = 1);
double accuracy(const Model<float>& model, const Dataset& data, std::size_t jobs = 1);

}  // namespace bamkit::cnn
