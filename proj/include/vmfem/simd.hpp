#pragma once
// Inner-loop kernels used by the Kronecker operators.
// A scalar reference set is always built; an AVX2/FMA set is selected at
// runtime when the CPU supports it. VMFEM_SIMD=scalar forces the reference.

#include <cstddef>
#include <string_view>

namespace vmfem::simd {

enum class Isa { scalar, avx2 };

struct KernelTable {
  // y += a*x
  void (*axpy)(std::size_t n, double a, const double* x, double* y);
  // y = a*x + b*y
  void (*axpby)(std::size_t n, double a, const double* x, double b, double* y);
  double (*dot)(std::size_t n, const double* x, const double* y);
  // y[j] += c[j] * x[(j + shift) mod n], |shift| < n
  void (*shifted_fma)(std::size_t n, std::ptrdiff_t shift, const double* c, const double* x,
                      double* y);
  // y[j] += s * c[j] * x[(j + shift) mod n]
  void (*shifted_fma_scaled)(std::size_t n, std::ptrdiff_t shift, double s, const double* c,
                             const double* x, double* y);
};

const KernelTable& scalar_kernels();
// nullptr when the ISA is not compiled in or not supported by this CPU
const KernelTable* avx2_kernels();

bool isa_available(Isa isa);
// The table in use. Chosen once from the CPU and VMFEM_SIMD, can be overridden.
const KernelTable& kernels();
Isa active_isa();
void set_isa(Isa isa);  // throws std::invalid_argument when unavailable
std::string_view isa_name(Isa isa);

}  // namespace vmfem::simd
