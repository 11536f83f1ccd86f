// NEON kernel variants for AArch64. Mirrors the scalar reference semantics;
// the equivalence suite covers this path when built on ARM.

#include "weightforge/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

namespace weightforge::kernels {

namespace {

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    acc = vfmaq_f64(acc, vld1q_f64(x + i), vld1q_f64(y + i));
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += x[i] * y[i];
  return vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1) + tail;
}

double weighted_abs_sum_neon(const double* x, const double* w, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    acc = vfmaq_f64(acc, vld1q_f64(w + i), vabsq_f64(vld1q_f64(x + i)));
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += w[i] * std::fabs(x[i]);
  return vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1) + tail;
}

double weighted_sq_sum_neon(const double* x, const double* w, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t xv = vld1q_f64(x + i);
    acc = vfmaq_f64(acc, vmulq_f64(vld1q_f64(w + i), xv), xv);
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += w[i] * x[i] * x[i];
  return vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1) + tail;
}

double weighted_abs_max_neon(const double* x, const double* w, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t v = vmulq_f64(vld1q_f64(w + i), vabsq_f64(vld1q_f64(x + i)));
    acc = vmaxq_f64(acc, v);
  }
  double best = vgetq_lane_f64(acc, 0);
  double hi = vgetq_lane_f64(acc, 1);
  if (hi > best) best = hi;
  for (; i < n; ++i) {
    double v = w[i] * std::fabs(x[i]);
    if (v > best) best = v;
  }
  return best;
}

void matvec_neon(const double* a, std::size_t rows, std::size_t cols,
                 const double* x, double* y) {
  for (std::size_t i = 0; i < rows; ++i) {
    y[i] = dot_neon(a + i * cols, x, cols);
  }
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t av = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t yv = vld1q_f64(y + i);
    yv = vfmaq_f64(yv, av, vld1q_f64(x + i));
    vst1q_f64(y + i, yv);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table{
      "neon",           dot_neon,         weighted_abs_sum_neon,
      weighted_sq_sum_neon, weighted_abs_max_neon, matvec_neon,
      axpy_neon,
  };
  return table;
}

}  // namespace weightforge::kernels

#endif  // __aarch64__
