#pragma once

// Direct access to the individual kernel variants, bypassing dispatch.
// Used by the equivalence tests.

#include <cstddef>
#include <cstdint>

namespace bamkit::simd {

#define BAMKIT_KERNEL_DECLS                                                                     \
  float dot(const float* a, const float* b, std::size_t n);                                     \
  double dot(const double* a, const double* b, std::size_t n);                                  \
  void dot4(const float* a, std::size_t lda, const float* b, std::size_t n, float* out);        \
  void dot4(const double* a, std::size_t lda, const double* b, std::size_t n, double* out);     \
  void axpy(float alpha, const float* x, float* y, std::size_t n);                              \
  void axpy(double alpha, const double* x, double* y, std::size_t n);                           \
  float sum(const float* x, std::size_t n);                                                     \
  double sum(const double* x, std::size_t n);                                                   \
  std::size_t count_ones(const std::uint8_t* a, std::size_t n);                                 \
  std::size_t count_and(const std::uint8_t* a, const std::uint8_t* b, std::size_t n);           \
  std::size_t count_or(const std::uint8_t* a, const std::uint8_t* b, std::size_t n);

namespace scalar {
BAMKIT_KERNEL_DECLS
}  // namespace scalar

#if defined(BAMKIT_HAVE_AVX2)
namespace avx2 {
BAMKIT_KERNEL_DECLS
}  // namespace avx2
#endif

#undef BAMKIT_KERNEL_DECLS

}  // namespace bamkit::simd
