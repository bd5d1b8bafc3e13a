#include "vmfem/simd.hpp"

namespace vmfem::simd {
namespace {

void axpy(std::size_t n, double a, const double* x, double* y) {
  for (std::size_t j = 0; j < n; ++j) y[j] += a * x[j];
}

void axpby(std::size_t n, double a, const double* x, double b, double* y) {
  for (std::size_t j = 0; j < n; ++j) y[j] = a * x[j] + b * y[j];
}

double dot(std::size_t n, const double* x, const double* y) {
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += x[j] * y[j];
  return s;
}

void shifted_fma(std::size_t n, std::ptrdiff_t shift, const double* c, const double* x,
                 double* y) {
  const auto nn = static_cast<std::ptrdiff_t>(n);
  for (std::ptrdiff_t j = 0; j < nn; ++j) {
    std::ptrdiff_t s = j + shift;
    if (s < 0) s += nn;
    else if (s >= nn) s -= nn;
    y[j] += c[j] * x[s];
  }
}

void shifted_fma_scaled(std::size_t n, std::ptrdiff_t shift, double a, const double* c,
                        const double* x, double* y) {
  const auto nn = static_cast<std::ptrdiff_t>(n);
  for (std::ptrdiff_t j = 0; j < nn; ++j) {
    std::ptrdiff_t s = j + shift;
    if (s < 0) s += nn;
    else if (s >= nn) s -= nn;
    y[j] += a * (c[j] * x[s]);
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{axpy, axpby, dot, shifted_fma, shifted_fma_scaled};
  return table;
}

}  // namespace vmfem::simd
