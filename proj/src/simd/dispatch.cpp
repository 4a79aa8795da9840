#include <atomic>
#include <cstdlib>
#include <string>

#include "tagalign/simd/kernels.hpp"

namespace tagalign::simd {
namespace {

constexpr KernelTable kScalar{Level::scalar, &scalar::dot, &scalar::squared_l2,
                              &scalar::gaussian_sum};
#ifdef TAGALIGN_HAVE_AVX2_KERNELS
constexpr KernelTable kAvx2{Level::avx2, &avx2::dot, &avx2::squared_l2, &avx2::gaussian_sum};
#endif
#ifdef TAGALIGN_HAVE_NEON_KERNELS
constexpr KernelTable kNeon{Level::neon, &neon::dot, &neon::squared_l2, &neon::gaussian_sum};
#endif

Level level_from_env(Level fallback) {
  const char* env = std::getenv("TAGALIGN_SIMD");
  if (env == nullptr) return fallback;
  const std::string value(env);
  if (value == "scalar") return Level::scalar;
  if (value == "avx2") return Level::avx2;
  if (value == "neon") return Level::neon;
  return fallback;
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{
      &kernels_for(level_from_env(detected_level()))};
  return slot;
}

}  // namespace

std::string_view to_string(Level level) noexcept {
  switch (level) {
    case Level::scalar: return "scalar";
    case Level::avx2: return "avx2";
    case Level::neon: return "neon";
  }
  return "unknown";
}

bool is_supported(Level level) noexcept {
  switch (level) {
    case Level::scalar: return true;
    case Level::avx2:
#ifdef TAGALIGN_HAVE_AVX2_KERNELS
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Level::neon:
#ifdef TAGALIGN_HAVE_NEON_KERNELS
      return true;
#else
      return false;
#endif
  }
  return false;
}

Level detected_level() noexcept {
  if (is_supported(Level::avx2)) return Level::avx2;
  if (is_supported(Level::neon)) return Level::neon;
  return Level::scalar;
}

const KernelTable& kernels_for(Level level) noexcept {
  if (!is_supported(level)) return kScalar;
  switch (level) {
#ifdef TAGALIGN_HAVE_AVX2_KERNELS
    case Level::avx2: return kAvx2;
#endif
#ifdef TAGALIGN_HAVE_NEON_KERNELS
    case Level::neon: return kNeon;
#endif
    default: return kScalar;
  }
}

const KernelTable& active() noexcept { return *active_slot().load(std::memory_order_acquire); }

Level set_active_level(Level level) noexcept {
  const KernelTable& table = kernels_for(level);
  active_slot().store(&table, std::memory_order_release);
  return table.level;
}

}  // namespace tagalign::simd
