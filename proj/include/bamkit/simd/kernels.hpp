#pragma once

// Data-parallel inner loops used by the tensor ops, rank correlation and
// mask counting. Every kernel has a scalar reference implementation and, on
// x86-64, an AVX2/FMA variant. The variant is chosen once at startup from
// CPUID and can be overridden (tests, BAMKIT_SIMD=scalar).

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace bamkit::simd {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

// Best variant the running CPU supports and the build compiled in.
Isa detected_isa();
Isa active_isa();
// Returns false (and leaves the selection unchanged) if `isa` is unsupported.
bool set_active_isa(Isa isa);

float dot(const float* a, const float* b, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);

// out[r] = dot(a + r * lda, b, n) for r in 0..3
void dot4(const float* a, std::size_t lda, const float* b, std::size_t n, float* out);
void dot4(const double* a, std::size_t lda, const double* b, std::size_t n, double* out);

// y += alpha * x
void axpy(float alpha, const float* x, float* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);

float sum(const float* x, std::size_t n);
double sum(const double* x, std::size_t n);

// Masks are byte arrays holding exactly 0 or 1.
std::size_t count_ones(const std::uint8_t* a, std::size_t n);
std::size_t count_and(const std::uint8_t* a, const std::uint8_t* b, std::size_t n);
std::size_t count_or(const std::uint8_t* a, const std::uint8_t* b, std::size_t n);

}  // namespace bamkit::simd
