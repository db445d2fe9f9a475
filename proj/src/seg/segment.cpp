#include "bamkit/seg/segment.hpp"

#include <algorithm>

#include "bamkit/seg/components.hpp"
#include "bamkit/simd/kernels.hpp"

namespace bamkit::seg {

BinaryMask mask_at_threshold(const Heatmap& h, double t) {
  BinaryMask m(h.height, h.width);
  for (std::size_t i = 0; i < h.size(); ++i) m.bits[i] = h.values[i] >= t ? 1 : 0;
  return m;
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a.height, a.width, b.height, b.width, "iou");
  const std::size_t inter = simd::count_and(a.bits.data(), b.bits.data(), a.size());
  const std::size_t uni = simd::count_or(a.bits.data(), b.bits.data(), a.size());
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

ThresholdChoice select_best_threshold(const Heatmap& h, std::vector<double> candidates, const BinaryMask& reference) {
  require(!candidates.empty(), ErrorCode::kInvalidArgument, "no threshold candidates");
  require_same_dims(h.height, h.width, reference.height, reference.width, "heatmap vs reference mask");
  std::sort(candidates.begin(), candidates.end());
  ThresholdChoice best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    BinaryMask m = mask_at_threshold(h, candidates[i]);
    const double score = iou(m, reference);
    best.ious.push_back(score);
    if (i == 0 || score > best.iou) {
      best.t = candidates[i];
      best.iou = score;
      best.mask = std::move(m);
    }
  }
  return best;
}

BinaryMask postprocess(const BinaryMask& mask, double min_area_fraction) {
  require(min_area_fraction >= 0.0 && min_area_fraction <= 1.0, ErrorCode::kInvalidArgument,
          "min_area_fraction must be in [0, 1]");
  const Components c = label_components(mask);
  BinaryMask out(mask.height, mask.width);
  if (c.count() == 0) return out;
  const std::size_t largest = *std::max_element(c.areas.begin(), c.areas.end());
  const double cutoff = min_area_fraction * static_cast<double>(largest);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint32_t l = c.labels[i];
    out.bits[i] = (l != 0 && static_cast<double>(c.areas[l - 1]) >= cutoff) ? 1 : 0;
  }
  return out;
}

void to_json(nlohmann::json& j, const SegmentationResult& r) {
  nlohmann::json cands = nlohmann::json::array();
  for (std::size_t i = 0; i < r.candidates.size(); ++i) {
    cands.push_back({{"t", r.candidates[i].t},
                     {"pair", {r.candidates[i].lower, r.candidates[i].lower + 1}},
                     {"fallback", r.candidates[i].fallback},
                     {"iou", i < r.ious.size() ? nlohmann::json(r.ious[i]) : nlohmann::json(nullptr)}});
  }
  j = {{"k_requested", r.k_requested},
       {"k_used", r.k_used},
       {"gmm", r.fit ? nlohmann::json(*r.fit) : nlohmann::json(nullptr)},
       {"candidates", cands},
       {"threshold", r.threshold ? nlohmann::json(*r.threshold) : nlohmann::json(nullptr)},
       {"best_iou", r.best_iou},
       {"raw_area", r.raw_mask.count()},
       {"final_area", r.mask.count()}};
}

SegmentationResult segment_heatmap(const Heatmap& heatmap, const BinaryMask& reference, const SegmentationConfig& cfg) {
  require(cfg.gmm_k >= 1, ErrorCode::kInvalidArgument, "gmm K must be at least 1");
  require_same_dims(heatmap.height, heatmap.width, reference.height, reference.width, "heatmap vs reference mask");
  SegmentationResult r;
  r.k_requested = cfg.gmm_k;
  r.k_used = std::min(cfg.gmm_k, count_distinct(heatmap.values));
  r.raw_mask = BinaryMask(heatmap.height, heatmap.width);
  r.mask = r.raw_mask;
  if (r.k_used < 2) return r;
  r.fit = fit_gmm_em(heatmap.values, r.k_used, cfg.seed, cfg.gmm);
  r.candidates = component_intersections(*r.fit);
  std::vector<double> ts;
  for (const auto& c : r.candidates) ts.push_back(c.t);
  ThresholdChoice choice = select_best_threshold(heatmap, ts, reference);
  r.ious = std::move(choice.ious);
  r.threshold = choice.t;
  r.best_iou = choice.iou;
  r.raw_mask = std::move(choice.mask);
  r.mask = postprocess(r.raw_mask, cfg.min_area_fraction);
  return r;
}

}  // namespace bamkit::seg
