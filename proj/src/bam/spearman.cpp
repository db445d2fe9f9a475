#include "bamkit/bam/spearman.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bamkit/error.hpp"

namespace bamkit::bam {

std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && v[idx[j]] == v[idx[i]]) ++j;
    // positions i..j-1 hold ranks i+1..j
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = r;
    i = j;
  }
  return ranks;
}

namespace {

std::vector<double> centered_ranks(std::span<const double> v, double& norm) {
  for (double x : v) require(std::isfinite(x), ErrorCode::kInvalidData, "spearman_rho: non-finite value");
  auto r = average_ranks(v);
  const double mean = 0.5 * static_cast<double>(v.size() + 1);
  double ss = 0.0;
  for (double& x : r) {
    x -= mean;
    ss += x * x;
  }
  norm = std::sqrt(ss);
  return r;
}

double correlate(const std::vector<double>& a, double na, const std::vector<double>& b, double nb) {
  if (na == 0.0 || nb == 0.0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return std::clamp(s / (na * nb), -1.0, 1.0);
}

void check_lengths(std::size_t a, std::size_t b) {
  require(a == b, ErrorCode::kShapeMismatch,
          "spearman_rho: length mismatch " + std::to_string(a) + " vs " + std::to_string(b));
  require(a >= 2, ErrorCode::kInvalidArgument, "spearman_rho needs at least 2 values");
}

}  // namespace

double spearman_rho(std::span<const double> a, std::span<const double> b) {
  check_lengths(a.size(), b.size());
  double na = 0.0, nb = 0.0;
  const auto ra = centered_ranks(a, na);
  const auto rb = centered_ranks(b, nb);
  return correlate(ra, na, rb, nb);
}

RankedReference::RankedReference(std::span<const double> reference) {
  require(reference.size() >= 2, ErrorCode::kInvalidArgument, "spearman_rho needs at least 2 values");
  centered_ = centered_ranks(reference, norm_);
}

double RankedReference::rho(std::span<const double> candidate) const {
  check_lengths(candidate.size(), centered_.size());
  double nc = 0.0;
  const auto rc = centered_ranks(candidate, nc);
  return correlate(rc, nc, centered_, norm_);
}

}  // namespace bamkit::bam
