#include <atomic>
#include <cstdlib>
#include <cstring>

#include "bamkit/simd/kernels.hpp"
#include "bamkit/simd/variants.hpp"

namespace bamkit::simd {

namespace {

bool cpu_has_avx2() {
#if defined(BAMKIT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() {
  const Isa best = cpu_has_avx2() ? Isa::kAvx2 : Isa::kScalar;
  if (const char* env = std::getenv("BAMKIT_SIMD"); env != nullptr && std::strcmp(env, "scalar") == 0) {
    return Isa::kScalar;
  }
  return best;
}

std::atomic<Isa>& selected() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

inline bool use_avx2() {
#if defined(BAMKIT_HAVE_AVX2)
  return selected().load(std::memory_order_relaxed) == Isa::kAvx2;
#else
  return false;
#endif
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::kAvx2 ? "avx2" : "scalar"; }

Isa detected_isa() { return cpu_has_avx2() ? Isa::kAvx2 : Isa::kScalar; }

Isa active_isa() { return selected().load(); }

bool set_active_isa(Isa isa) {
  if (isa == Isa::kAvx2 && !cpu_has_avx2()) return false;
  selected().store(isa);
  return true;
}

#if defined(BAMKIT_HAVE_AVX2)
#define BAMKIT_DISPATCH(call) return use_avx2() ? avx2::call : scalar::call
#else
#define BAMKIT_DISPATCH(call) return scalar::call
#endif

float dot(const float* a, const float* b, std::size_t n) { BAMKIT_DISPATCH(dot(a, b, n)); }
double dot(const double* a, const double* b, std::size_t n) { BAMKIT_DISPATCH(dot(a, b, n)); }
void dot4(const float* a, std::size_t lda, const float* b, std::size_t n, float* out) {
  BAMKIT_DISPATCH(dot4(a, lda, b, n, out));
}
void dot4(const double* a, std::size_t lda, const double* b, std::size_t n, double* out) {
  BAMKIT_DISPATCH(dot4(a, lda, b, n, out));
}
void axpy(float alpha, const float* x, float* y, std::size_t n) { BAMKIT_DISPATCH(axpy(alpha, x, y, n)); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { BAMKIT_DISPATCH(axpy(alpha, x, y, n)); }
float sum(const float* x, std::size_t n) { BAMKIT_DISPATCH(sum(x, n)); }
double sum(const double* x, std::size_t n) { BAMKIT_DISPATCH(sum(x, n)); }
std::size_t count_ones(const std::uint8_t* a, std::size_t n) { BAMKIT_DISPATCH(count_ones(a, n)); }
std::size_t count_and(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) {
  BAMKIT_DISPATCH(count_and(a, b, n));
}
std::size_t count_or(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) {
  BAMKIT_DISPATCH(count_or(a, b, n));
}

#undef BAMKIT_DISPATCH

}  // namespace bamkit::simd
