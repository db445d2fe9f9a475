#include "bamkit/eval/metrics.hpp"

#include <algorithm>
#include <cstdio>

#include "bamkit/simd/kernels.hpp"

namespace bamkit::eval {

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

MetricSummary mean_of(const std::vector<Metrics>& ms, std::optional<double> Metrics::*field) {
  MetricSummary s;
  double sum = 0.0;
  for (const auto& m : ms) {
    if (const auto& v = m.*field) {
      sum += *v;
      ++s.defined;
    }
  }
  if (s.defined > 0) s.value = sum / static_cast<double>(s.defined);
  return s;
}

nlohmann::json summary_json(const MetricSummary& s, std::size_t images) {
  return {{"value", opt(s.value)}, {"defined", s.defined}, {"undefined", images - s.defined}};
}

}  // namespace

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

ConfusionCounts confusion_counts(const BinaryMask& pred, const BinaryMask& ref) {
  require_same_dims(pred.height, pred.width, ref.height, ref.width, "confusion_counts");
  const std::size_t n = pred.size();
  const std::size_t p = simd::count_ones(pred.bits.data(), n);
  const std::size_t r = simd::count_ones(ref.bits.data(), n);
  ConfusionCounts c;
  c.tp = simd::count_and(pred.bits.data(), ref.bits.data(), n);
  c.fp = p - c.tp;
  c.fn = r - c.tp;
  c.tn = n - c.tp - c.fp - c.fn;
  return c;
}

Metrics metrics(const ConfusionCounts& c) {
  Metrics m;
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.sensitivity = ratio(c.tp, c.tp + c.fn);
  m.specificity = ratio(c.tn, c.tn + c.fp);
  m.jaccard = c.tp + c.fp + c.fn == 0 ? std::optional<double>(1.0) : ratio(c.tp, c.tp + c.fp + c.fn);
  return m;
}

const char* aggregation_name(Aggregation a) {
  return a == Aggregation::kPerImageMean ? "per_image_mean" : "pooled_counts";
}

Metrics BatchReport::primary_metrics() const {
  if (primary == Aggregation::kPooledCounts) return pooled;
  return Metrics{mean_accuracy.value, mean_sensitivity.value, mean_specificity.value, mean_jaccard.value};
}

BatchReport batch_report(const std::vector<MaskPair>& pairs, Aggregation primary, std::string predictor,
                         std::string reference) {
  require(!pairs.empty(), ErrorCode::kInvalidArgument, "batch_report needs at least one mask pair");
  BatchReport r;
  r.predictor = std::move(predictor);
  r.reference = std::move(reference);
  r.primary = primary;
  r.images = pairs.size();
  for (const auto& [pred, ref] : pairs) {
    const ConfusionCounts c = confusion_counts(*pred, *ref);
    r.per_image_counts.push_back(c);
    r.per_image.push_back(metrics(c));
    r.pooled_counts += c;
  }
  r.pooled = metrics(r.pooled_counts);
  r.mean_accuracy = mean_of(r.per_image, &Metrics::accuracy);
  r.mean_sensitivity = mean_of(r.per_image, &Metrics::sensitivity);
  r.mean_specificity = mean_of(r.per_image, &Metrics::specificity);
  r.mean_jaccard = mean_of(r.per_image, &Metrics::jaccard);
  return r;
}

void to_json(nlohmann::json& j, const Metrics& m) {
  j = {{"accuracy", opt(m.accuracy)},
       {"sensitivity", opt(m.sensitivity)},
       {"specificity", opt(m.specificity)},
       {"jaccard", opt(m.jaccard)}};
}

void to_json(nlohmann::json& j, const ConfusionCounts& c) { j = {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}}; }

void to_json(nlohmann::json& j, const BatchReport& r) {
  j = {{"predictor", r.predictor},
       {"reference", r.reference},
       {"primary", aggregation_name(r.primary)},
       {"images", r.images},
       {"per_image_mean",
        {{"accuracy", summary_json(r.mean_accuracy, r.images)},
         {"sensitivity", summary_json(r.mean_sensitivity, r.images)},
         {"specificity", summary_json(r.mean_specificity, r.images)},
         {"jaccard", summary_json(r.mean_jaccard, r.images)}}},
       {"pooled_counts", {{"counts", r.pooled_counts}, {"metrics", r.pooled}}},
       {"per_image", nlohmann::json::array()}};
  for (std::size_t i = 0; i < r.images; ++i) {
    j["per_image"].push_back({{"counts", r.per_image_counts[i]}, {"metrics", r.per_image[i]}});
  }
}

std::string format_percent(const std::optional<double>& v) {
  if (!v) return "--";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", *v * 100.0);
  return buf;
}

std::string format_table(const std::vector<BatchReport>& rows) {
  const std::vector<std::string> head = {"Comparison", "Accuracy", "Sensitivity", "Specificity", "Jaccard"};
  std::vector<std::vector<std::string>> cells = {head};
  for (const auto& r : rows) {
    const Metrics m = r.primary_metrics();
    cells.push_back({r.predictor + " vs " + r.reference, format_percent(m.accuracy), format_percent(m.sensitivity),
                     format_percent(m.specificity), format_percent(m.jaccard)});
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      const std::string& s = cells[r][c];
      const std::string pad(width[c] - s.size(), ' ');
      out += c == 0 ? s + pad : "  " + pad + s;
    }
    out += '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w;
      out += std::string(total + 2 * (width.size() - 1), '-') + '\n';
    }
  }
  return out;
}

}  // namespace bamkit::eval
