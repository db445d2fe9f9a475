#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

#include "bamkit/image.hpp"
#include "bamkit/rng.hpp"
#include "bamkit/tensor.hpp"

namespace testutil {

template <typename T>
bamkit::BasicTensor<T> random_tensor(const bamkit::Shape& shape, std::uint64_t seed, double lo = -1.0,
                                     double hi = 1.0) {
  bamkit::Rng rng(seed);
  bamkit::BasicTensor<T> t(shape);
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

inline bamkit::Heatmap random_heatmap(std::size_t h, std::size_t w, std::uint64_t seed) {
  bamkit::Rng rng(seed);
  bamkit::Heatmap m(h, w);
  for (auto& v : m.values) v = rng.uniform();
  return m;
}

inline bamkit::BinaryMask random_mask(std::size_t h, std::size_t w, std::uint64_t seed, double p = 0.5) {
  bamkit::Rng rng(seed);
  bamkit::BinaryMask m(h, w);
  for (auto& b : m.bits) b = rng.uniform() < p ? 1 : 0;
  return m;
}

inline double rel_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Fresh directory under the system temp dir, removed first if present.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("bamkit_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testutil
