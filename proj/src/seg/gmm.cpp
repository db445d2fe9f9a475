#include "bamkit/seg/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "bamkit/error.hpp"
#include "bamkit/rng.hpp"

namespace bamkit::seg {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

double log_density(double w, double mean, double var, double x) {
  const double d = x - mean;
  return std::log(w) - 0.5 * (kLogTwoPi + std::log(var)) - d * d / (2.0 * var);
}

std::vector<double> subsample(std::span<const double> pixels, std::size_t cap, std::uint64_t seed) {
  std::vector<double> all(pixels.begin(), pixels.end());
  if (all.size() <= cap) return all;
  Rng rng(seed);
  for (std::size_t i = 0; i < cap; ++i) std::swap(all[i], all[i + rng.below(all.size() - i)]);
  all.resize(cap);
  return all;
}

std::vector<double> quantile_means(std::vector<double> sorted, std::size_t k) {
  auto pick = [k](const std::vector<double>& v) {
    std::vector<double> m(k);
    for (std::size_t i = 0; i < k; ++i) {
      const auto pos = static_cast<std::size_t>((static_cast<double>(i) + 0.5) / static_cast<double>(k) *
                                                static_cast<double>(v.size()));
      m[i] = v[std::min(pos, v.size() - 1)];
    }
    return m;
  };
  auto means = pick(sorted);
  if (std::adjacent_find(means.begin(), means.end()) == means.end()) return means;
  // heavy ties: spread over the distinct values instead
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  return pick(sorted);
}

GmmFit run_em(const std::vector<double>& x, std::vector<double> means, const GmmOptions& opts) {
  const std::size_t n = x.size(), k = means.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  GmmFit f;
  f.k = k;
  f.samples_used = n;
  f.means = std::move(means);
  f.weights.assign(k, 1.0 / static_cast<double>(k));
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) * inv_n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  f.variances.assign(k, std::max(var * inv_n, opts.variance_floor));

  std::vector<double> resp(n * k), logp(k);
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    // E-step; also the log-likelihood of the current parameters
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        logp[c] = f.weights[c] > 0.0 ? log_density(f.weights[c], f.means[c], f.variances[c], x[i])
                                     : -std::numeric_limits<double>::infinity();
        top = std::max(top, logp[c]);
      }
      double s = 0.0;
      for (std::size_t c = 0; c < k; ++c) s += std::exp(logp[c] - top);
      const double lse = top + std::log(s);
      ll += lse;
      for (std::size_t c = 0; c < k; ++c) resp[i * k + c] = std::exp(logp[c] - lse);
    }
    ll *= inv_n;
    require(std::isfinite(ll), ErrorCode::kNumeric, "GMM log-likelihood is not finite");
    f.log_likelihood_history.push_back(ll);
    f.log_likelihood = ll;
    f.iterations = it + 1;
    if (ll - prev < opts.tol) {
      f.converged = true;
      break;
    }
    prev = ll;

    // M-step
    for (std::size_t c = 0; c < k; ++c) {
      double nk = 0.0, sx = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        nk += resp[i * k + c];
        sx += resp[i * k + c] * x[i];
      }
      if (nk <= 0.0) {
        f.weights[c] = 0.0;
        continue;
      }
      const double mu = sx / nk;
      double sv = 0.0;
      for (std::size_t i = 0; i < n; ++i) sv += resp[i * k + c] * (x[i] - mu) * (x[i] - mu);
      f.weights[c] = nk * inv_n;
      f.means[c] = mu;
      f.variances[c] = std::max(sv / nk, opts.variance_floor);
    }
    const double wsum = std::accumulate(f.weights.begin(), f.weights.end(), 0.0);
    for (double& w : f.weights) w /= wsum;
  }

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f.means[a] < f.means[b]; });
  GmmFit sorted_fit = f;
  for (std::size_t c = 0; c < k; ++c) {
    sorted_fit.weights[c] = f.weights[order[c]];
    sorted_fit.means[c] = f.means[order[c]];
    sorted_fit.variances[c] = f.variances[order[c]];
  }
  return sorted_fit;
}

}  // namespace

double GmmFit::density(std::size_t c, double x) const {
  return std::exp(log_density(weights.at(c), means.at(c), variances.at(c), x));
}

void to_json(nlohmann::json& j, const GmmFit& f) {
  j = {{"k", f.k},
       {"weights", f.weights},
       {"means", f.means},
       {"variances", f.variances},
       {"log_likelihood", f.log_likelihood},
       {"iterations", f.iterations},
       {"converged", f.converged},
       {"samples_used", f.samples_used}};
}

std::size_t count_distinct(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

GmmFit fit_gmm_em(std::span<const double> pixels, std::size_t k, std::uint64_t seed, const GmmOptions& opts) {
  require(k >= 1, ErrorCode::kInvalidArgument, "GMM needs at least one component");
  require(opts.max_iter >= 1 && opts.max_samples >= 1, ErrorCode::kInvalidArgument, "invalid GMM options");
  for (double x : pixels) require(std::isfinite(x), ErrorCode::kInvalidData, "GMM input contains non-finite values");
  const std::size_t distinct = count_distinct(pixels);
  require(distinct >= k, ErrorCode::kInvalidData,
          "GMM with K=" + std::to_string(k) + " needs at least " + std::to_string(k) + " distinct values, found " +
              std::to_string(distinct) + "; use a smaller K");

  const std::vector<double> x = subsample(pixels, opts.max_samples, seed);
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  GmmFit best = run_em(x, quantile_means(sorted, k), opts);
  if (opts.restarts == 0) return best;
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (std::size_t r = 0; r < opts.restarts; ++r) {
    // k distinct sample values as starting means
    Rng rng = Rng::derive(seed, 0x5253, r);
    std::vector<double> pool = sorted;
    for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    GmmFit fit = run_em(x, std::move(pool), opts);
    if (fit.log_likelihood > best.log_likelihood) best = std::move(fit);
  }
  return best;
}

std::vector<ThresholdCandidate> component_intersections(const GmmFit& fit) {
  std::vector<ThresholdCandidate> out;
  for (std::size_t a = 0; a + 1 < fit.k; ++a) {
    const std::size_t b = a + 1;
    const double ma = fit.means[a], mb = fit.means[b];
    const double va = fit.variances[a], vb = fit.variances[b];
    const double wa = fit.weights[a], wb = fit.weights[b];
    ThresholdCandidate cand{0.5 * (ma + mb), a, true};
    if (wa > 0.0 && wb > 0.0 && ma < mb) {
      const double qa = 1.0 / (2.0 * vb) - 1.0 / (2.0 * va);
      const double qb = ma / va - mb / vb;
      const double qc = mb * mb / (2.0 * vb) - ma * ma / (2.0 * va) + std::log(wa / wb) + 0.5 * std::log(vb / va);
      std::vector<double> roots;
      if (std::abs(qa) < 1e-12 * (1.0 / va + 1.0 / vb)) {
        if (qb != 0.0) roots.push_back(-qc / qb);
      } else {
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc >= 0.0) {
          const double q = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
          roots.push_back(q / qa);
          if (q != 0.0) roots.push_back(qc / q);
        }
      }
      const double mid = 0.5 * (ma + mb);
      double best_gap = std::numeric_limits<double>::infinity();
      for (double r : roots) {
        if (std::isfinite(r) && r > ma && r < mb && std::abs(r - mid) < best_gap) {
          best_gap = std::abs(r - mid);
          cand.t = r;
          cand.fallback = false;
        }
      }
    }
    out.push_back(cand);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& l, const auto& r) { return l.t < r.t; });
  return out;
}

}  // namespace bamkit::seg
