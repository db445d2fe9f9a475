#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"

namespace bamkit::seg {

struct GmmOptions {
  std::size_t max_iter = 500;
  double tol = 1e-6;              // stop when the mean log-likelihood gains less
  double variance_floor = 1e-6;
  std::size_t max_samples = 50'000;
  std::size_t restarts = 0;       // extra random initializations, best log-likelihood kept
};

// 1-D mixture with components sorted by mean.
struct GmmFit {
  std::size_t k = 0;
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> variances;
  double log_likelihood = 0.0;              // mean per-sample value at the final parameters
  std::vector<double> log_likelihood_history;  // one entry per iteration
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t samples_used = 0;

  double density(std::size_t component, double x) const;  // w_k * N(x; mu_k, var_k)
};

void to_json(nlohmann::json& j, const GmmFit& f);

std::size_t count_distinct(std::span<const double> values);

// EM from quantile-initialized means, uniform weights and the pooled
// variance. Inputs longer than max_samples are subsampled without
// replacement using `seed`. Throws when fewer than k distinct values exist.
GmmFit fit_gmm_em(std::span<const double> pixels, std::size_t k, std::uint64_t seed, const GmmOptions& opts = {});

struct ThresholdCandidate {
  double t = 0.0;
  std::size_t lower = 0;  // adjacent component pair (lower, lower + 1)
  bool fallback = false;  // true when no crossing lies between the means
};

// Where w_a N(x; a) = w_b N(x; b) for each adjacent pair, keeping the root
// strictly between the means (the one nearest the midpoint if both are);
// otherwise the midpoint of the means.
std::vector<ThresholdCandidate> component_intersections(const GmmFit& fit);

}  // namespace bamkit::seg
