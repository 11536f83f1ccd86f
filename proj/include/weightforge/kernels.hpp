#pragma once
// Arithmetic inner-loop kernels: scalar reference implementations plus SIMD
// variants selected at runtime. Every variant computes the same quantity as
// the scalar reference; equivalence is enforced by tests/test_kernels.cpp.

#include <cstddef>

namespace weightforge::kernels {

// Function table for one implementation (scalar, avx2, neon).
struct KernelTable {
  const char* name;
  // dot = sum_i x[i]*y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // sum_i w[i]*|x[i]|
  double (*weighted_abs_sum)(const double* x, const double* w, std::size_t n);
  // sum_i w[i]*x[i]^2
  double (*weighted_sq_sum)(const double* x, const double* w, std::size_t n);
  // max_i w[i]*|x[i]|
  double (*weighted_abs_max)(const double* x, const double* w, std::size_t n);
  // y = A*x for row-major A (rows x cols)
  void (*matvec)(const double* a, std::size_t rows, std::size_t cols,
                 const double* x, double* y);
  // y += alpha*x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

const KernelTable& scalar_table();

#if defined(__x86_64__) || defined(_M_X64)
bool avx2_supported();
const KernelTable& avx2_table();
#endif

#if defined(__aarch64__)
const KernelTable& neon_table();
#endif

// Active table. Chosen once per process: WEIGHTFORGE_KERNELS=scalar|avx2|neon
// forces a variant, otherwise the best supported one is used.
const KernelTable& active();

// sum_i w[i]*|x[i]|^p. Routes p==1 and p==2 through the active table;
// general p stays scalar (std::pow dominates, vectorising it buys nothing).
double weighted_pow_sum(const double* x, const double* w, std::size_t n, double p);

}  // namespace weightforge::kernels
