#pragma once

// Data-parallel inner loops used by the distance, clustering and density
// stages. Each kernel has a portable scalar reference and optional vector
// variants; the active table is chosen once at startup from CPU features.

#include <cstddef>
#include <string_view>

namespace tagalign::simd {

enum class Level { scalar, avx2, neon };

std::string_view to_string(Level level) noexcept;

struct KernelTable {
  Level level;
  /// Sum of a[i] * b[i].
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// Sum of (a[i] - b[i])^2.
  double (*squared_l2)(const double* a, const double* b, std::size_t n);
  /// Sum over points p of exp(scale * ((xs[p] - cx)^2 + (ys[p] - cy)^2)).
  /// scale is expected to be non-positive.
  double (*gaussian_sum)(const double* xs, const double* ys, std::size_t n, double cx,
                         double cy, double scale);
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double squared_l2(const double* a, const double* b, std::size_t n);
double gaussian_sum(const double* xs, const double* ys, std::size_t n, double cx, double cy,
                    double scale);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define TAGALIGN_HAVE_AVX2_KERNELS 1
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double squared_l2(const double* a, const double* b, std::size_t n);
double gaussian_sum(const double* xs, const double* ys, std::size_t n, double cx, double cy,
                    double scale);
}  // namespace avx2
#endif

#if defined(__aarch64__)
#define TAGALIGN_HAVE_NEON_KERNELS 1
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
double squared_l2(const double* a, const double* b, std::size_t n);
double gaussian_sum(const double* xs, const double* ys, std::size_t n, double cx, double cy,
                    double scale);
}  // namespace neon
#endif

/// Best level supported by this binary on the running CPU.
Level detected_level() noexcept;

/// True when `level` is compiled in and runnable here.
bool is_supported(Level level) noexcept;

/// Table for an explicit level. Unsupported levels fall back to scalar.
const KernelTable& kernels_for(Level level) noexcept;

/// Table used by the library. Defaults to detected_level(); the
/// TAGALIGN_SIMD environment variable (scalar|avx2|neon) can lower it.
const KernelTable& active() noexcept;

/// Overrides the active table (tests, benchmarking). Returns the level
/// actually installed.
Level set_active_level(Level level) noexcept;

}  // namespace tagalign::simd
