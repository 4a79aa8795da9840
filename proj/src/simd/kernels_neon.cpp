// NEON is part of the aarch64 baseline, so no runtime check is needed.
#include "tagalign/simd/kernels.hpp"

#include <arm_neon.h>

#include <cmath>

namespace tagalign::simd::neon {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

double squared_l2(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float64x2_t d0 = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    const float64x2_t d1 = vsubq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    acc0 = vfmaq_f64(acc0, d0, d0);
    acc1 = vfmaq_f64(acc1, d1, d1);
  }
  double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

// Distances are vectorized; exp stays scalar (no vector exp in NEON).
double gaussian_sum(const double* xs, const double* ys, std::size_t n, double cx, double cy,
                    double scale) {
  const float64x2_t vcx = vdupq_n_f64(cx);
  const float64x2_t vcy = vdupq_n_f64(cy);
  double sum = 0.0;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t dx = vsubq_f64(vld1q_f64(xs + i), vcx);
    const float64x2_t dy = vsubq_f64(vld1q_f64(ys + i), vcy);
    const float64x2_t r2 = vfmaq_f64(vmulq_f64(dx, dx), dy, dy);
    sum += std::exp(scale * vgetq_lane_f64(r2, 0));
    sum += std::exp(scale * vgetq_lane_f64(r2, 1));
  }
  for (; i < n; ++i) {
    const double dx = xs[i] - cx;
    const double dy = ys[i] - cy;
    sum += std::exp(scale * (dx * dx + dy * dy));
  }
  return sum;
}

}  // namespace tagalign::simd::neon
