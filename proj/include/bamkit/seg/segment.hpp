#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"

#include "bamkit/image.hpp"
#include "bamkit/seg/gmm.hpp"

namespace bamkit::seg {

// 1 where h >= t.
BinaryMask mask_at_threshold(const Heatmap& h, double t);

// |a & b| / |a | b|; two empty masks give 1.
double iou(const BinaryMask& a, const BinaryMask& b);

struct ThresholdChoice {
  double t = 0.0;
  BinaryMask mask;
  double iou = 0.0;
  std::vector<double> ious;  // per candidate, in ascending t order
};

// Candidate with the highest IOU against the reference mask; ties go to the
// smallest t.
ThresholdChoice select_best_threshold(const Heatmap& h, std::vector<double> candidates, const BinaryMask& reference);

// Drops 8-connected components smaller than min_area_fraction times the
// largest component's area.
BinaryMask postprocess(const BinaryMask& mask, double min_area_fraction = 0.10);

struct SegmentationConfig {
  std::size_t gmm_k = 4;
  double min_area_fraction = 0.10;
  std::uint64_t seed = 1;
  GmmOptions gmm;
};

struct SegmentationResult {
  std::size_t k_requested = 0;
  std::size_t k_used = 0;  // reduced when the map has fewer distinct values
  std::optional<GmmFit> fit;
  std::vector<ThresholdCandidate> candidates;
  std::vector<double> ious;
  std::optional<double> threshold;  // empty when no candidate exists
  double best_iou = 0.0;
  BinaryMask raw_mask;  // at the chosen threshold
  BinaryMask mask;      // after postprocess
};

void to_json(nlohmann::json& j, const SegmentationResult& r);

// GMM fit -> intersections -> best-IOU threshold against `reference` ->
// postprocess. A map with fewer than two distinct values yields an empty
// mask and no threshold.
SegmentationResult segment_heatmap(const Heatmap& heatmap, const BinaryMask& reference, const SegmentationConfig& cfg);

}  // namespace bamkit::seg
