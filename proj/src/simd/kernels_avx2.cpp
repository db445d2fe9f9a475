// Compiled with -mavx2 -mfma. Only reached through dispatch after a CPUID check.

#include <immintrin.h>

#include "bamkit/simd/variants.hpp"

namespace bamkit::simd::avx2 {

namespace {

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 shuf = _mm_movehdup_ps(lo);
  lo = _mm_add_ps(lo, shuf);
  shuf = _mm_movehl_ps(shuf, lo);
  lo = _mm_add_ss(lo, shuf);
  return _mm_cvtss_f32(lo);
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d high64 = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
}

// Sums the bytes of a 0/1 vector into a 64-bit lane accumulator.
inline __m256i byte_sum(__m256i bytes) { return _mm256_sad_epu8(bytes, _mm256_setzero_si256()); }

inline std::size_t hsum_epi64(__m256i v) {
  alignas(32) std::uint64_t lanes[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), v);
  return static_cast<std::size_t>(lanes[0] + lanes[1] + lanes[2] + lanes[3]);
}

inline __m256i normalize01(__m256i bytes) {
  // Nonzero byte -> 1, zero byte -> 0.
  const __m256i zero = _mm256_setzero_si256();
  const __m256i is_zero = _mm256_cmpeq_epi8(bytes, zero);
  return _mm256_andnot_si256(is_zero, _mm256_set1_epi8(1));
}

}  // namespace

float dot(const float* a, const float* b, std::size_t n) {
  __m256 acc0 = _mm256_setzero_ps();
  __m256 acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc1);
  }
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
  }
  float result = hsum(_mm256_add_ps(acc0, acc1));
  for (; i < n; ++i) result += a[i] * b[i];
  return result;
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double result = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) result += a[i] * b[i];
  return result;
}

void dot4(const float* a, std::size_t lda, const float* b, std::size_t n, float* out) {
  const float *a0 = a, *a1 = a + lda, *a2 = a + 2 * lda, *a3 = a + 3 * lda;
  __m256 s0 = _mm256_setzero_ps(), s1 = _mm256_setzero_ps(), s2 = _mm256_setzero_ps(), s3 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 vb = _mm256_loadu_ps(b + i);
    s0 = _mm256_fmadd_ps(_mm256_loadu_ps(a0 + i), vb, s0);
    s1 = _mm256_fmadd_ps(_mm256_loadu_ps(a1 + i), vb, s1);
    s2 = _mm256_fmadd_ps(_mm256_loadu_ps(a2 + i), vb, s2);
    s3 = _mm256_fmadd_ps(_mm256_loadu_ps(a3 + i), vb, s3);
  }
  out[0] = hsum(s0), out[1] = hsum(s1), out[2] = hsum(s2), out[3] = hsum(s3);
  for (; i < n; ++i) {
    out[0] += a0[i] * b[i], out[1] += a1[i] * b[i], out[2] += a2[i] * b[i], out[3] += a3[i] * b[i];
  }
}

void dot4(const double* a, std::size_t lda, const double* b, std::size_t n, double* out) {
  const double *a0 = a, *a1 = a + lda, *a2 = a + 2 * lda, *a3 = a + 3 * lda;
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd(), s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vb = _mm256_loadu_pd(b + i);
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a0 + i), vb, s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a1 + i), vb, s1);
    s2 = _mm256_fmadd_pd(_mm256_loadu_pd(a2 + i), vb, s2);
    s3 = _mm256_fmadd_pd(_mm256_loadu_pd(a3 + i), vb, s3);
  }
  out[0] = hsum(s0), out[1] = hsum(s1), out[2] = hsum(s2), out[3] = hsum(s3);
  for (; i < n; ++i) {
    out[0] += a0[i] * b[i], out[1] += a1[i] * b[i], out[2] += a2[i] * b[i], out[3] += a3[i] * b[i];
  }
}

void axpy(float alpha, const float* x, float* y, std::size_t n) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

float sum(const float* x, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
  float result = hsum(acc);
  for (; i < n; ++i) result += x[i];
  return result;
}

double sum(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double result = hsum(acc);
  for (; i < n; ++i) result += x[i];
  return result;
}

std::size_t count_ones(const std::uint8_t* a, std::size_t n) {
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    acc = _mm256_add_epi64(acc, byte_sum(normalize01(va)));
  }
  std::size_t c = hsum_epi64(acc);
  for (; i < n; ++i) c += a[i] != 0;
  return c;
}

std::size_t count_and(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) {
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i va = normalize01(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i)));
    const __m256i vb = normalize01(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i)));
    acc = _mm256_add_epi64(acc, byte_sum(_mm256_and_si256(va, vb)));
  }
  std::size_t c = hsum_epi64(acc);
  for (; i < n; ++i) c += (a[i] != 0) & (b[i] != 0);
  return c;
}

std::size_t count_or(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) {
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i va = normalize01(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i)));
    const __m256i vb = normalize01(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i)));
    acc = _mm256_add_epi64(acc, byte_sum(_mm256_or_si256(va, vb)));
  }
  std::size_t c = hsum_epi64(acc);
  for (; i < n; ++i) c += (a[i] != 0) | (b[i] != 0);
  return c;
}

}  // namespace bamkit::simd::avx2
