#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "vmfem/simd.hpp"

using namespace vmfem;

namespace {

// scalar and vector kernels differ only by FMA rounding and summation order
bool close(double a, double b, double scale) { return std::abs(a - b) <= 1e-14 * scale; }

}  // namespace

TEST_CASE("dispatch reports a usable instruction set") {
  CHECK(simd::isa_available(simd::Isa::scalar));
  auto old = simd::active_isa();
  simd::set_isa(simd::Isa::scalar);
  CHECK(simd::active_isa() == simd::Isa::scalar);
  if (simd::isa_available(simd::Isa::avx2)) {
    simd::set_isa(simd::Isa::avx2);
    CHECK(simd::active_isa() == simd::Isa::avx2);
  }
  simd::set_isa(old);
  MESSAGE("active kernels: " << simd::isa_name(simd::active_isa()));
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
  const auto* v = simd::avx2_kernels();
  if (!v) {
    MESSAGE("avx2 not available; skipped");
    return;
  }
  const auto& s = simd::scalar_kernels();
  std::mt19937_64 rng(11);
  for (std::size_t n = 1; n <= 75; ++n) {
    auto x = oracle::random_vector(n, rng), y = oracle::random_vector(n, rng),
         c = oracle::random_vector(n, rng);
    double a = 0.37, b = -1.3;

    auto y1 = y, y2 = y;
    s.axpy(n, a, x.data(), y1.data());
    v->axpy(n, a, x.data(), y2.data());
    for (std::size_t j = 0; j < n; ++j) REQUIRE(close(y1[j], y2[j], 2.0));

    y1 = y;
    y2 = y;
    s.axpby(n, a, x.data(), b, y1.data());
    v->axpby(n, a, x.data(), b, y2.data());
    for (std::size_t j = 0; j < n; ++j) REQUIRE(close(y1[j], y2[j], 2.0));

    REQUIRE(close(s.dot(n, x.data(), y.data()), v->dot(n, x.data(), y.data()),
                  static_cast<double>(n)));

    for (std::ptrdiff_t sh = -static_cast<std::ptrdiff_t>(n) + 1;
         sh < static_cast<std::ptrdiff_t>(n); ++sh) {
      y1 = y;
      y2 = y;
      s.shifted_fma(n, sh, c.data(), x.data(), y1.data());
      v->shifted_fma(n, sh, c.data(), x.data(), y2.data());
      for (std::size_t j = 0; j < n; ++j) REQUIRE(close(y1[j], y2[j], 2.0));
      y1 = y;
      y2 = y;
      s.shifted_fma_scaled(n, sh, b, c.data(), x.data(), y1.data());
      v->shifted_fma_scaled(n, sh, b, c.data(), x.data(), y2.data());
      for (std::size_t j = 0; j < n; ++j) REQUIRE(close(y1[j], y2[j], 4.0));
    }
  }
}

TEST_CASE("shifted multiply-add wraps periodically") {
  const auto& s = simd::kernels();
  std::vector<double> c{1, 1, 1, 1, 1}, x{0, 1, 2, 3, 4}, y(5, 0.0);
  s.shifted_fma(5, 2, c.data(), x.data(), y.data());
  CHECK(y == std::vector<double>{2, 3, 4, 0, 1});
  std::fill(y.begin(), y.end(), 0.0);
  s.shifted_fma(5, -1, c.data(), x.data(), y.data());
  CHECK(y == std::vector<double>{4, 0, 1, 2, 3});
}
