#pragma once

#include <span>
#include <vector>

namespace bamkit::bam {

// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> v);

// Pearson correlation of the average-rank vectors, clamped to [-1, 1].
// Returns 0 when either input is constant.
double spearman_rho(std::span<const double> a, std::span<const double> b);

// Reference whose ranks are computed once and reused against many
// candidates.
class RankedReference {
 public:
  explicit RankedReference(std::span<const double> reference);

  std::size_t size() const noexcept { return centered_.size(); }
  double rho(std::span<const double> candidate) const;

 private:
  std::vector<double> centered_;  // ranks minus their mean
  double norm_ = 0.0;             // sqrt(sum centered^2)
};

}  // namespace bamkit::bam
