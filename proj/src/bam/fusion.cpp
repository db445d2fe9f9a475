#include "bamkit/bam/fusion.hpp"

#include <algorithm>
#include <string>

#include "bamkit/bam/spearman.hpp"
#include "bamkit/saliency/gradcam.hpp"

namespace bamkit::bam {

namespace {

void check_reference(const ChannelStack& stack, const Heatmap& gradcam) {
  require(stack.size() > 0, ErrorCode::kInvalidArgument, "channel stack is empty");
  require_same_dims(stack.height, stack.width, gradcam.height, gradcam.width, "channel stack vs Grad-CAM");
}

OrientedChannel orient_with(const Heatmap& ch, const RankedReference& ref) {
  OrientedChannel o{ch, false, ref.rho(ch.values)};
  if (o.rho < 0.0) {
    for (double& v : o.channel.values) v = 1.0 - v;
    o.inverted = true;
    o.rho = ref.rho(o.channel.values);
  }
  return o;
}

std::vector<OrientedChannel> orient_all(const ChannelStack& stack, const RankedReference& ref) {
  std::vector<OrientedChannel> out;
  out.reserve(stack.size());
  for (const Heatmap& ch : stack.channels) out.push_back(orient_with(ch, ref));
  return out;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > kMaxExhaustiveSubsets) return kMaxExhaustiveSubsets + 1;
  }
  return r;
}

}  // namespace

template <typename T>
ChannelStack ChannelStack::from_activations(const BasicTensor<T>& activations) {
  require(activations.rank() == 3, ErrorCode::kShapeMismatch,
          "channel stack expects [C,H,W] activations, got " + shape_string(activations.shape()));
  std::vector<Heatmap> raw;
  for (std::size_t c = 0; c < activations.dim(0); ++c) raw.push_back(Heatmap::from_channel(activations, c));
  return from_channels(raw);
}

ChannelStack ChannelStack::from_channels(const std::vector<Heatmap>& raw) {
  require(!raw.empty(), ErrorCode::kInvalidArgument, "channel stack is empty");
  ChannelStack s;
  s.height = raw.front().height;
  s.width = raw.front().width;
  for (const Heatmap& ch : raw) {
    require_same_dims(ch.height, ch.width, s.height, s.width, "channel stack");
    const auto [lo, hi] = std::minmax_element(ch.values.begin(), ch.values.end());
    s.ranges.emplace_back(*lo, *hi);
    s.channels.push_back(saliency::normalize_minmax(ch));
  }
  return s;
}

OrientedChannel orient_channel(const Heatmap& ch, const Heatmap& reference) {
  require_same_dims(ch.height, ch.width, reference.height, reference.width, "orient_channel");
  return orient_with(ch, RankedReference(reference.values));
}

void to_json(nlohmann::json& j, const SelectionTrace& t) {
  j = {{"height", t.height},
       {"width", t.width},
       {"selected", t.selected},
       {"inverted", t.inverted},
       {"correlations", t.correlations},
       {"final_rho", t.final_rho()},
       {"channel_rho", t.channel_rho},
       {"channel_inverted", t.channel_inverted}};
}

SelectionTrace greedy_fuse(const ChannelStack& stack, const Heatmap& gradcam) {
  check_reference(stack, gradcam);
  const RankedReference ref(gradcam.values);
  const auto oriented = orient_all(stack, ref);
  const std::size_t n = stack.height * stack.width;

  SelectionTrace t;
  t.height = stack.height;
  t.width = stack.width;
  for (const auto& o : oriented) {
    t.channel_rho.push_back(o.rho);
    t.channel_inverted.push_back(o.inverted);
  }

  std::vector<double> sum(n, 0.0), candidate(n);
  std::vector<bool> used(stack.size(), false);
  double current = 0.0;
  while (t.selected.size() < stack.size()) {
    const double count = static_cast<double>(t.selected.size() + 1);
    std::size_t best = stack.size();
    double best_rho = 0.0;
    for (std::size_t c = 0; c < stack.size(); ++c) {
      if (used[c]) continue;
      const auto& v = oriented[c].channel.values;
      for (std::size_t i = 0; i < n; ++i) candidate[i] = (sum[i] + v[i]) / count;
      const double r = ref.rho(candidate);
      if (best == stack.size() || r > best_rho) {
        best = c;
        best_rho = r;
      }
    }
    if (!(best_rho > current + kImprovementTolerance)) break;
    used[best] = true;
    const auto& v = oriented[best].channel.values;
    for (std::size_t i = 0; i < n; ++i) sum[i] += v[i];
    t.selected.push_back(best);
    t.inverted.push_back(oriented[best].inverted);
    t.correlations.push_back(best_rho);
    current = best_rho;
  }

  t.fused = Heatmap(stack.height, stack.width);
  if (!t.selected.empty()) {
    const double count = static_cast<double>(t.selected.size());
    for (std::size_t i = 0; i < n; ++i) t.fused.values[i] = sum[i] / count;
  }
  return t;
}

ExhaustiveResult exhaustive_fuse(const ChannelStack& stack, const Heatmap& gradcam, std::size_t max_subset) {
  check_reference(stack, gradcam);
  require(max_subset >= 1, ErrorCode::kInvalidArgument, "exhaustive_fuse: max_subset must be at least 1");
  const std::size_t c = stack.size();
  max_subset = std::min(max_subset, c);
  std::uint64_t total = 0;
  for (std::size_t k = 1; k <= max_subset; ++k) {
    total += binomial(c, k);
    require(total <= kMaxExhaustiveSubsets, ErrorCode::kInvalidArgument,
            "exhaustive_fuse: more than " + std::to_string(kMaxExhaustiveSubsets) + " subsets for C=" +
                std::to_string(c) + ", max_subset=" + std::to_string(max_subset));
  }

  const RankedReference ref(gradcam.values);
  const auto oriented = orient_all(stack, ref);
  const std::size_t n = stack.height * stack.width;
  ExhaustiveResult best;
  std::vector<double> mean(n);
  for (std::size_t k = 1; k <= max_subset; ++k) {
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    for (;;) {
      std::fill(mean.begin(), mean.end(), 0.0);
      for (std::size_t ch : idx) {
        const auto& v = oriented[ch].channel.values;
        for (std::size_t i = 0; i < n; ++i) mean[i] += v[i];
      }
      for (double& m : mean) m /= static_cast<double>(k);
      const double r = ref.rho(mean);
      if (best.subset.empty() || r > best.rho) {
        best.subset = idx;
        best.rho = r;
      }
      ++best.evaluated;
      // next combination in lexicographic order
      std::size_t pos = k;
      while (pos > 0 && idx[pos - 1] == c - k + pos - 1) --pos;
      if (pos == 0) break;
      ++idx[pos - 1];
      for (std::size_t i = pos; i < k; ++i) idx[i] = idx[i - 1] + 1;
    }
  }
  return best;
}

Heatmap bam_heatmap(const SelectionTrace& trace) {
  if (trace.selected.empty()) return Heatmap(trace.height, trace.width);
  return saliency::normalize_minmax(trace.fused);
}

template ChannelStack ChannelStack::from_activations(const BasicTensor<float>&);
template ChannelStack ChannelStack::from_activations(const BasicTensor<double>&);

}  // namespace bamkit::bam
