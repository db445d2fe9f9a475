#include "bamkit/cnn/classifier_eval.hpp"

#include <algorithm>
#include <numeric>

#include "bamkit/ops.hpp"
#include "bamkit/parallel.hpp"

namespace bamkit::cnn {

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::optional<double> harmonic(const std::optional<double>& p, const std::optional<double>& r) {
  if (!p || !r) return std::nullopt;
  if (*p + *r == 0.0) return 0.0;
  return 2.0 * *p * *r / (*p + *r);
}

std::optional<double> mean_defined(const std::vector<std::optional<double>>& v) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& x : v) {
    if (x) {
      sum += *x;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

nlohmann::json roc_json(const RocCurve& c) { return {{"fpr", c.fpr}, {"tpr", c.tpr}, {"auc", opt(c.auc)}}; }

}  // namespace

void to_json(nlohmann::json& j, const ClassifierReport& r) {
  nlohmann::json per_class = nlohmann::json::array();
  for (std::size_t k = 0; k < r.per_class.size(); ++k) {
    const auto& m = r.per_class[k];
    per_class.push_back({{"class", k},
                         {"name", k < kClassNames.size() ? kClassNames[k] : std::to_string(k)},
                         {"precision", opt(m.precision)},
                         {"recall", opt(m.recall)},
                         {"f1", opt(m.f1)},
                         {"support", m.support},
                         {"auc", opt(r.roc[k].auc)}});
  }
  nlohmann::json roc = nlohmann::json::array();
  for (const auto& c : r.roc) roc.push_back(roc_json(c));
  j = {{"num_classes", r.num_classes},
       {"samples", r.samples},
       {"confusion_matrix", r.confusion},
       {"per_class", per_class},
       {"accuracy", r.accuracy},
       {"micro", {{"precision", r.micro_precision}, {"recall", r.micro_recall}, {"f1", r.micro_f1}, {"auc", opt(r.micro_roc.auc)}}},
       {"macro", {{"precision", opt(r.macro_precision)}, {"recall", opt(r.macro_recall)}, {"f1", opt(r.macro_f1)}, {"auc", opt(r.macro_auc)}}},
       {"roc", roc},
       {"micro_roc", roc_json(r.micro_roc)}};
}

RocCurve roc_curve(const std::vector<double>& scores, const std::vector<bool>& positive) {
  require(scores.size() == positive.size(), ErrorCode::kShapeMismatch, "roc_curve: scores and labels differ in length");
  const std::size_t n = scores.size();
  const auto pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
  const std::size_t neg = n - pos;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve c;
  c.fpr.push_back(0.0);
  c.tpr.push_back(0.0);
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) {
      positive[idx[j]] ? ++tp : ++fp;
      ++j;
    }
    c.fpr.push_back(neg ? static_cast<double>(fp) / static_cast<double>(neg) : 0.0);
    c.tpr.push_back(pos ? static_cast<double>(tp) / static_cast<double>(pos) : 0.0);
    i = j;
  }
  if (pos > 0 && neg > 0) {
    double area = 0.0;
    for (std::size_t i = 1; i < c.fpr.size(); ++i) area += (c.fpr[i] - c.fpr[i - 1]) * (c.tpr[i] + c.tpr[i - 1]) * 0.5;
    c.auc = area;
  }
  return c;
}

ClassifierReport evaluate_scores(const std::vector<std::vector<double>>& scores, const std::vector<std::size_t>& labels,
                                 std::size_t num_classes) {
  require(num_classes >= 2, ErrorCode::kInvalidArgument, "need at least two classes");
  require(!scores.empty(), ErrorCode::kInvalidArgument, "cannot evaluate an empty dataset");
  require(scores.size() == labels.size(), ErrorCode::kShapeMismatch, "scores and labels differ in length");
  ClassifierReport r;
  r.num_classes = num_classes;
  r.samples = scores.size();
  r.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < scores.size(); ++i) {
    require(scores[i].size() == num_classes, ErrorCode::kShapeMismatch, "score vector has wrong class count");
    require(labels[i] < num_classes, ErrorCode::kInvalidData, "label out of range");
    const auto pred = static_cast<std::size_t>(std::max_element(scores[i].begin(), scores[i].end()) - scores[i].begin());
    ++r.confusion[labels[i]][pred];
  }

  std::size_t correct = 0;
  std::vector<std::optional<double>> precisions, recalls, f1s, aucs;
  std::vector<double> micro_scores;
  std::vector<bool> micro_pos;
  for (std::size_t k = 0; k < num_classes; ++k) {
    std::size_t predicted = 0, support = 0;
    for (std::size_t t = 0; t < num_classes; ++t) {
      predicted += r.confusion[t][k];
      support += r.confusion[k][t];
    }
    const std::size_t tp = r.confusion[k][k];
    correct += tp;
    ClassMetrics m;
    m.support = support;
    m.precision = ratio(tp, predicted);
    m.recall = ratio(tp, support);
    m.f1 = harmonic(m.precision, m.recall);
    r.per_class.push_back(m);
    precisions.push_back(m.precision);
    recalls.push_back(m.recall);
    f1s.push_back(m.f1);

    std::vector<double> s(scores.size());
    std::vector<bool> p(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
      s[i] = scores[i][k];
      p[i] = labels[i] == k;
      micro_scores.push_back(s[i]);
      micro_pos.push_back(p[i]);
    }
    r.roc.push_back(roc_curve(s, p));
    aucs.push_back(r.roc.back().auc);
  }
  // Every sample contributes exactly one prediction, so pooled FP = pooled FN
  // and micro precision = micro recall = accuracy.
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.samples);
  r.micro_precision = r.accuracy;
  r.micro_recall = r.accuracy;
  r.micro_f1 = r.accuracy;
  r.macro_precision = mean_defined(precisions);
  r.macro_recall = mean_defined(recalls);
  r.macro_f1 = mean_defined(f1s);
  r.micro_roc = roc_curve(micro_scores, micro_pos);
  r.macro_auc = mean_defined(aucs);
  return r;
}

ClassifierReport evaluate_classifier(const Model<float>& model, const Dataset& data, std::size_t jobs) {
  std::vector<std::vector<double>> scores(data.size());
  std::vector<std::size_t> labels(data.size());
  parallel_for(data.size(), jobs, [&](std::size_t i) {
    const Tensor probs = ops::softmax(predict_logits(model, data[i].image));
    scores[i].assign(probs.data().begin(), probs.data().end());
    labels[i] = data[i].label;
  });
  return evaluate_scores(scores, labels, model.config().num_classes);
}

}  // namespace bamkit::cnn
