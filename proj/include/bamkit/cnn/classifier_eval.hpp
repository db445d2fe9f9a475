#pragma once

#include <optional>
#include <vector>

#include "json.hpp"

#include "bamkit/cnn/model.hpp"
#include "bamkit/cnn/synthetic.hpp"

namespace bamkit::cnn {

// Metrics that can be undefined (zero denominator) are empty optionals and
// serialize as null.
struct ClassMetrics {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::size_t support = 0;
};

// Points run from (0,0) to (1,1) in order of decreasing score threshold.
struct RocCurve {
  std::vector<double> fpr;
  std::vector<double> tpr;
  std::optional<double> auc;  // empty if a class has no positives or no negatives
};

struct ClassifierReport {
  std::size_t num_classes = 0;
  std::size_t samples = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::vector<ClassMetrics> per_class;
  double accuracy = 0.0;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  std::optional<double> macro_precision;
  std::optional<double> macro_recall;
  std::optional<double> macro_f1;
  std::vector<RocCurve> roc;  // one-vs-rest per class
  RocCurve micro_roc;
  std::optional<double> macro_auc;
};

void to_json(nlohmann::json& j, const ClassifierReport& r);

// One-vs-rest ROC of `scores` against `positive` flags; tied scores form a
// single step.
RocCurve roc_curve(const std::vector<double>& scores, const std::vector<bool>& positive);

// scores[i] holds per-class scores of sample i; the prediction is the
// highest-scoring class, lowest index on ties.
ClassifierReport evaluate_scores(const std::vector<std::vector<double>>& scores, const std::vector<std::size_t>& labels,
                                 std::size_t num_classes);

// Softmax probabilities in inference mode.
ClassifierReport evaluate_classifier(const Model<float>& model, const Dataset& data, std::size_t jobs = 1);

}  // namespace bamkit::cnn
