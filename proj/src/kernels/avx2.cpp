// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include "vmfem/simd.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace vmfem::simd {
namespace {

void axpy(std::size_t n, double a, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    __m256d y0 = _mm256_loadu_pd(y + j);
    __m256d y1 = _mm256_loadu_pd(y + j + 4);
    y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + j), y0);
    y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + j + 4), y1);
    _mm256_storeu_pd(y + j, y0);
    _mm256_storeu_pd(y + j + 4, y1);
  }
  for (; j + 4 <= n; j += 4)
    _mm256_storeu_pd(y + j, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + j), _mm256_loadu_pd(y + j)));
  for (; j < n; ++j) y[j] += a * x[j];
}

void axpby(std::size_t n, double a, const double* x, double b, double* y) {
  const __m256d va = _mm256_set1_pd(a);
  const __m256d vb = _mm256_set1_pd(b);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    __m256d t = _mm256_mul_pd(vb, _mm256_loadu_pd(y + j));
    _mm256_storeu_pd(y + j, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + j), t));
  }
  for (; j < n; ++j) y[j] = a * x[j] + b * y[j];
}

double dot(std::size_t n, const double* x, const double* y) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + j), _mm256_loadu_pd(y + j), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + j + 4), _mm256_loadu_pd(y + j + 4), s1);
  }
  for (; j + 4 <= n; j += 4)
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + j), _mm256_loadu_pd(y + j), s0);
  s0 = _mm256_add_pd(s0, s1);
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, s0);
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; j < n; ++j) s += x[j] * y[j];
  return s;
}

// body covers j with j+shift inside [0, n); the wrapped ends are scalar
template <bool Scaled>
inline void shifted_impl(std::size_t n, std::ptrdiff_t shift, double a, const double* c,
                         const double* x, double* y) {
  const auto nn = static_cast<std::ptrdiff_t>(n);
  const std::ptrdiff_t lo = shift < 0 ? -shift : 0;
  const std::ptrdiff_t hi = shift > 0 ? nn - shift : nn;
  for (std::ptrdiff_t j = 0; j < lo; ++j) {
    double t = c[j] * x[j + shift + nn];
    y[j] += Scaled ? a * t : t;
  }
  const __m256d va = _mm256_set1_pd(a);
  std::ptrdiff_t j = lo;
  for (; j + 4 <= hi; j += 4) {
    __m256d t = _mm256_mul_pd(_mm256_loadu_pd(c + j), _mm256_loadu_pd(x + j + shift));
    __m256d yy = _mm256_loadu_pd(y + j);
    if constexpr (Scaled) yy = _mm256_fmadd_pd(va, t, yy);
    else yy = _mm256_add_pd(yy, t);
    _mm256_storeu_pd(y + j, yy);
  }
  for (; j < hi; ++j) {
    double t = c[j] * x[j + shift];
    y[j] += Scaled ? a * t : t;
  }
  for (j = hi > lo ? hi : lo; j < nn; ++j) {
    double t = c[j] * x[j + shift - nn];
    y[j] += Scaled ? a * t : t;
  }
}

void shifted_fma(std::size_t n, std::ptrdiff_t shift, const double* c, const double* x,
                 double* y) {
  shifted_impl<false>(n, shift, 1.0, c, x, y);
}

void shifted_fma_scaled(std::size_t n, std::ptrdiff_t shift, double a, const double* c,
                        const double* x, double* y) {
  shifted_impl<true>(n, shift, a, c, x, y);
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable table{axpy, axpby, dot, shifted_fma, shifted_fma_scaled};
  if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) return nullptr;
  return &table;
}

}  // namespace vmfem::simd

#else

namespace vmfem::simd {
const KernelTable* avx2_kernels() { return nullptr; }
}  // namespace vmfem::simd

#endif
