#include <arm_neon.h>

#include "sgmflow/kernels.hpp"

namespace sgmflow::kernels {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double norm_sq_neon(const double* a, std::size_t n) { return dot_neon(a, a, n); }

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  }
  for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

void combine_neon(double* out, const double* y, double h, const double* c,
                  const double* const* k, std::size_t m, std::size_t n) {
  const float64x2_t vh = vdupq_n_f64(h);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t j = 0; j < m; ++j) {
      acc = vaddq_f64(acc, vmulq_f64(vdupq_n_f64(c[j]), vld1q_f64(k[j] + i)));
    }
    vst1q_f64(out + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(vh, acc)));
  }
  for (; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) acc = acc + c[j] * k[j][i];
    out[i] = y[i] + h * acc;
  }
}

constexpr KernelTable kNeon{"neon", dot_neon, norm_sq_neon, axpy_neon, combine_neon};

}  // namespace

// NEON is part of the aarch64 baseline.
const KernelTable* neon_table() { return &kNeon; }

const KernelTable* avx2_table() { return nullptr; }

}  // namespace sgmflow::kernels
