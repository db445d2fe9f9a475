#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "bamkit/image.hpp"

namespace bamkit::eval {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion_counts(const BinaryMask& pred, const BinaryMask& ref);

// Undefined values (zero denominators) are empty.
struct Metrics {
  std::optional<double> accuracy;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> jaccard;  // 1 when tp + fp + fn == 0
};

Metrics metrics(const ConfusionCounts& c);

enum class Aggregation { kPerImageMean, kPooledCounts };

const char* aggregation_name(Aggregation a);

struct MetricSummary {
  std::optional<double> value;
  std::size_t defined = 0;  // images contributing to a per-image mean
};

struct BatchReport {
  std::string predictor;
  std::string reference;
  Aggregation primary = Aggregation::kPerImageMean;
  std::size_t images = 0;
  std::vector<ConfusionCounts> per_image_counts;
  std::vector<Metrics> per_image;
  ConfusionCounts pooled_counts;
  Metrics pooled;
  // per-image means; undefined per-image entries are skipped and counted out
  MetricSummary mean_accuracy, mean_sensitivity, mean_specificity, mean_jaccard;

  Metrics primary_metrics() const;
};

using MaskPair = std::pair<const BinaryMask*, const BinaryMask*>;  // (pred, ref)

BatchReport batch_report(const std::vector<MaskPair>& pairs, Aggregation primary = Aggregation::kPerImageMean,
                         std::string predictor = "", std::string reference = "");

void to_json(nlohmann::json& j, const Metrics& m);
void to_json(nlohmann::json& j, const ConfusionCounts& c);
void to_json(nlohmann::json& j, const BatchReport& r);

// "--" for undefined, otherwise a percentage with two decimals.
std::string format_percent(const std::optional<double>& v);

// Aligned text table with one row per report, using each report's primary
// aggregation.
std::string format_table(const std::vector<BatchReport>& rows);

}  // namespace bamkit::eval
