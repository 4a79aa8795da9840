#include <cmath>
#include <random>

#include "doctest.h"
#include "tagalign/simd/kernels.hpp"

using namespace tagalign::simd;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

void check_equivalent(const KernelTable& k) {
  const auto& ref = kernels_for(Level::scalar);
  std::mt19937_64 rng(0);
  for (std::size_t n = 0; n < 70; ++n) {
    const auto a = random_vector(n, rng);
    const auto b = random_vector(n, rng);
    CHECK(k.dot(a.data(), b.data(), n) == doctest::Approx(ref.dot(a.data(), b.data(), n)).epsilon(1e-12));
    CHECK(k.squared_l2(a.data(), b.data(), n) ==
          doctest::Approx(ref.squared_l2(a.data(), b.data(), n)).epsilon(1e-12));
    for (double scale : {-0.5, -2.0, -50.0}) {
      const double got = k.gaussian_sum(a.data(), b.data(), n, 0.3, -0.4, scale);
      const double want = ref.gaussian_sum(a.data(), b.data(), n, 0.3, -0.4, scale);
      CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)));
    }
  }
}

}  // namespace

TEST_CASE("scalar kernels are correct") {
  const double a[] = {1, 2, 3};
  const double b[] = {4, -5, 6};
  const auto& s = kernels_for(Level::scalar);
  CHECK(s.dot(a, b, 3) == 12.0);
  CHECK(s.squared_l2(a, b, 3) == 9.0 + 49.0 + 9.0);
  const double xs[] = {0.0, 1.0};
  const double ys[] = {0.0, 0.0};
  CHECK(s.gaussian_sum(xs, ys, 2, 0.0, 0.0, -0.5) == doctest::Approx(1.0 + std::exp(-0.5)));
  CHECK(s.dot(a, b, 0) == 0.0);
}

TEST_CASE("every supported vector level matches the scalar reference") {
  CHECK(is_supported(Level::scalar));
  for (Level level : {Level::avx2, Level::neon}) {
    if (!is_supported(level)) continue;
    CAPTURE(to_string(level));
    const auto& k = kernels_for(level);
    CHECK(k.level == level);
    check_equivalent(k);
  }
}

TEST_CASE("the active level can be switched") {
  const Level before = active().level;
  CHECK(set_active_level(Level::scalar) == Level::scalar);
  CHECK(active().level == Level::scalar);
  set_active_level(before);
  CHECK(active().level == before);
  CHECK(is_supported(detected_level()));
}
