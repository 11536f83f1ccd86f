// AVX2 kernel variants. This translation unit is compiled with -mavx2 -mfma;
// nothing here runs unless the dispatcher confirmed AVX2 support via cpuid.

#include "weightforge/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

namespace weightforge::kernels {

namespace {

inline __m256d abs_pd(__m256d v) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  return _mm256_andnot_pd(sign_mask, v);
}

// Lane-ordered horizontal sum so results are reproducible run to run.
inline double hsum_pd(__m256d v) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, v);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

inline double hmax_pd(__m256d v) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, v);
  double m = lane[0];
  if (lane[1] > m) m = lane[1];
  if (lane[2] > m) m = lane[2];
  if (lane[3] > m) m = lane[3];
  return m;
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = _mm256_loadu_pd(x + i);
    __m256d yv = _mm256_loadu_pd(y + i);
    acc = _mm256_fmadd_pd(xv, yv, acc);
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += x[i] * y[i];
  return hsum_pd(acc) + tail;
}

double weighted_abs_sum_avx2(const double* x, const double* w, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = abs_pd(_mm256_loadu_pd(x + i));
    __m256d wv = _mm256_loadu_pd(w + i);
    acc = _mm256_fmadd_pd(wv, xv, acc);
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += w[i] * std::fabs(x[i]);
  return hsum_pd(acc) + tail;
}

double weighted_sq_sum_avx2(const double* x, const double* w, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = _mm256_loadu_pd(x + i);
    __m256d wv = _mm256_loadu_pd(w + i);
    acc = _mm256_fmadd_pd(_mm256_mul_pd(wv, xv), xv, acc);
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += w[i] * x[i] * x[i];
  return hsum_pd(acc) + tail;
}

double weighted_abs_max_avx2(const double* x, const double* w, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = abs_pd(_mm256_loadu_pd(x + i));
    __m256d wv = _mm256_loadu_pd(w + i);
    acc = _mm256_max_pd(acc, _mm256_mul_pd(wv, xv));
  }
  double best = hmax_pd(acc);
  for (; i < n; ++i) {
    double v = w[i] * std::fabs(x[i]);
    if (v > best) best = v;
  }
  return best;
}

void matvec_avx2(const double* a, std::size_t rows, std::size_t cols,
                 const double* x, double* y) {
  for (std::size_t i = 0; i < rows; ++i) {
    y[i] = dot_avx2(a + i * cols, x, cols);
  }
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yv = _mm256_loadu_pd(y + i);
    __m256d xv = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, xv, yv));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{
      "avx2",           dot_avx2,         weighted_abs_sum_avx2,
      weighted_sq_sum_avx2, weighted_abs_max_avx2, matvec_avx2,
      axpy_avx2,
  };
  return table;
}

}  // namespace weightforge::kernels

#endif  // x86_64
