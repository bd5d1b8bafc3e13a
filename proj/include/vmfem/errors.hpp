#pragma once
#include <stdexcept>

namespace vmfem {

// Solver breakdown, non-finite state, failed factorization.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vmfem
