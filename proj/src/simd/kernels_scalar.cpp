#include "tagalign/simd/kernels.hpp"

#include <cmath>

namespace tagalign::simd::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

double squared_l2(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

double gaussian_sum(const double* xs, const double* ys, std::size_t n, double cx, double cy,
                    double scale) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - cx;
    const double dy = ys[i] - cy;
    sum += std::exp(scale * (dx * dx + dy * dy));
  }
  return sum;
}

}  // namespace tagalign::simd::scalar
