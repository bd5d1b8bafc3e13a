#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "vmfem/simd.hpp"

namespace vmfem::simd {
namespace {

Isa detect() {
  if (const char* env = std::getenv("VMFEM_SIMD")) {
    if (std::string(env) == "scalar") return Isa::scalar;
  }
  return avx2_kernels() ? Isa::avx2 : Isa::scalar;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{detect() == Isa::avx2 ? avx2_kernels()
                                                                     : &scalar_kernels()};
  return table;
}

}  // namespace

bool isa_available(Isa isa) { return isa == Isa::scalar || avx2_kernels() != nullptr; }

const KernelTable& kernels() { return *current().load(std::memory_order_relaxed); }

Isa active_isa() { return &kernels() == &scalar_kernels() ? Isa::scalar : Isa::avx2; }

void set_isa(Isa isa) {
  if (!isa_available(isa)) throw std::invalid_argument("instruction set not available");
  current().store(isa == Isa::avx2 ? avx2_kernels() : &scalar_kernels());
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

}  // namespace vmfem::simd
