#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "json.hpp"

#include "bamkit/image.hpp"
#include "bamkit/tensor.hpp"

namespace bamkit::bam {

inline constexpr double kImprovementTolerance = 1e-9;
inline constexpr std::size_t kMaxExhaustiveSubsets = 1'000'000;

// First-layer activation channels, each min-max normalized to [0,1]
// (constant channels become zeros). `ranges` keeps the original min/max.
struct ChannelStack {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<Heatmap> channels;
  std::vector<std::pair<double, double>> ranges;

  std::size_t size() const noexcept { return channels.size(); }

  template <typename T>
  static ChannelStack from_activations(const BasicTensor<T>& activations);
  static ChannelStack from_channels(const std::vector<Heatmap>& raw);
};

struct OrientedChannel {
  Heatmap channel;
  bool inverted = false;
  double rho = 0.0;  // correlation of the returned channel with the reference
};

// 1 - ch when ch is negatively rank-correlated with the reference.
OrientedChannel orient_channel(const Heatmap& ch, const Heatmap& reference);

struct SelectionTrace {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::size_t> selected;      // in selection order
  std::vector<bool> inverted;             // per selected channel
  std::vector<double> correlations;       // rho after each selection
  std::vector<double> channel_rho;        // oriented single-channel rho, all channels
  std::vector<bool> channel_inverted;     // orientation, all channels
  Heatmap fused;                          // mean of oriented selected channels

  double final_rho() const { return correlations.empty() ? 0.0 : correlations.back(); }
};

void to_json(nlohmann::json& j, const SelectionTrace& t);

// Greedy channel fusion against a Grad-CAM map at the stack's resolution.
// Each step adds the unused channel whose inclusion in the running mean gives
// the highest rho; stops when no candidate beats the current rho by more
// than kImprovementTolerance. The empty selection counts as rho = 0. Ties go
// to the lowest channel index.
SelectionTrace greedy_fuse(const ChannelStack& stack, const Heatmap& gradcam);

struct ExhaustiveResult {
  std::vector<std::size_t> subset;  // ascending
  double rho = 0.0;
  std::size_t evaluated = 0;
};

// Best mean-of-subset rho over every subset of size 1..max_subset, channels
// oriented as in greedy_fuse. Earlier subsets (by size, then lexicographic)
// win ties.
ExhaustiveResult exhaustive_fuse(const ChannelStack& stack, const Heatmap& gradcam, std::size_t max_subset);

// Normalized fused map; all zeros for an empty selection.
Heatmap bam_heatmap(const SelectionTrace& trace);

}  // namespace bamkit::bam
