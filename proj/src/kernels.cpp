#include "weightforge/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>

#if defined(__x86_64__) || defined(_M_X64)
#include <cpuid.h>
#endif

namespace weightforge::kernels {

namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double weighted_abs_sum_scalar(const double* x, const double* w, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += w[i] * std::fabs(x[i]);
  return acc;
}

double weighted_sq_sum_scalar(const double* x, const double* w, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += w[i] * x[i] * x[i];
  return acc;
}

double weighted_abs_max_scalar(const double* x, const double* w, std::size_t n) {
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = w[i] * std::fabs(x[i]);
    if (v > best) best = v;
  }
  return best;
}

void matvec_scalar(const double* a, std::size_t rows, std::size_t cols,
                   const double* x, double* y) {
  for (std::size_t i = 0; i < rows; ++i) {
    y[i] = dot_scalar(a + i * cols, x, cols);
  }
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      "scalar",          dot_scalar,         weighted_abs_sum_scalar,
      weighted_sq_sum_scalar, weighted_abs_max_scalar, matvec_scalar,
      axpy_scalar,
  };
  return table;
}

#if defined(__x86_64__) || defined(_M_X64)
bool avx2_supported() {
  unsigned int eax = 0, ebx = 0, ecx = 0, edx = 0;
  if (!__get_cpuid_count(7, 0, &eax, &ebx, &ecx, &edx)) return false;
  const bool avx2 = (ebx & bit_AVX2) != 0;
  if (!__get_cpuid(1, &eax, &ebx, &ecx, &edx)) return false;
  const bool fma = (ecx & bit_FMA) != 0;
  return avx2 && fma;
}
#endif

namespace {

const KernelTable& select_table() {
  const char* force = std::getenv("WEIGHTFORGE_KERNELS");
  if (force != nullptr) {
    if (std::strcmp(force, "scalar") == 0) return scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
    if (std::strcmp(force, "avx2") == 0 && avx2_supported()) return avx2_table();
#endif
#if defined(__aarch64__)
    if (std::strcmp(force, "neon") == 0) return neon_table();
#endif
    return scalar_table();
  }
#if defined(__x86_64__) || defined(_M_X64)
  if (avx2_supported()) return avx2_table();
#endif
#if defined(__aarch64__)
  return neon_table();
#else
  return scalar_table();
#endif
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = select_table();
  return table;
}

double weighted_pow_sum(const double* x, const double* w, std::size_t n, double p) {
  if (p == 1.0) return active().weighted_abs_sum(x, w, n);
  if (p == 2.0) return active().weighted_sq_sum(x, w, n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += w[i] * std::pow(std::fabs(x[i]), p);
  return acc;
}

}  // namespace weightforge::kernels
