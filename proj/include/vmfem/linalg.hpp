#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace vmfem {

struct Triplet {
  std::size_t row, col;
  double value;
};

// Compressed sparse rows; columns sorted within each row.
struct SparseMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col;
  std::vector<double> val;

  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet> entries);
  static SparseMatrix from_dense(std::size_t rows, std::size_t cols, std::span<const double> a);
  static SparseMatrix identity(std::size_t n);

  std::size_t nnz() const { return val.size(); }
  double at(std::size_t i, std::size_t j) const;
  void multiply(const double* x, double* y) const;  // y = A x
  SparseMatrix transpose() const;
  std::vector<double> to_dense() const;  // row-major
};

// (A_x ⊗ A_v) f without forming the product, v index fastest.
std::vector<double> kron_apply(const SparseMatrix& a_x, const SparseMatrix& a_v,
                               std::span<const double> f);

// Square operator on a periodic tensor node array: entry (i, i + o) stored
// per offset o in [-b, b]^d as a length-n array over rows i.
class PeriodicStencil {
 public:
  PeriodicStencil() = default;
  PeriodicStencil(std::vector<std::size_t> dims, int bandwidth);

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t size() const { return n_; }
  int bandwidth() const { return bw_; }
  std::size_t offset_count() const { return noff_; }
  std::size_t offset_index(std::span<const int> o) const;
  std::vector<int> offset(std::size_t oi) const;
  std::size_t column(std::size_t row, std::size_t oi) const { return cols_[oi * n_ + row]; }

  double* coeffs(std::size_t oi) { return coeff_.data() + oi * n_; }
  const double* coeffs(std::size_t oi) const { return coeff_.data() + oi * n_; }
  void add(std::size_t row, std::size_t oi, double v) { coeff_[oi * n_ + row] += v; }
  void set_zero();
  void scale(double s);
  // this += s * other (same shape)
  void add_scaled(const PeriodicStencil& other, double s);
  // flags offsets whose coefficients are all zero so applications skip them
  void finalize();
  bool offset_active(std::size_t oi) const { return active_[oi] != 0; }

  // y (+)= s * S x with scalar entries
  void apply(const double* x, double* y, double s = 1.0, bool accumulate = true) const;
  // rows are blocks of length `block`: y_i (+)= s * sum_o c_o[i] x_{col(i,o)}
  void apply_blocks(const double* x, double* y, std::size_t block, double s = 1.0,
                    bool accumulate = true) const;

  PeriodicStencil transpose() const;
  SparseMatrix to_csr() const;

 private:
  std::vector<std::size_t> dims_;
  int bw_ = 0;
  std::size_t n_ = 0, noff_ = 0;
  std::vector<double> coeff_;
  std::vector<std::size_t> cols_;
  std::vector<char> active_;
  std::vector<std::vector<int>> offsets_;
};

// Kronecker product of 1D stencils (one per direction, leading direction first).
PeriodicStencil kron_stencil(const std::vector<const PeriodicStencil*>& factors);

// y += s * (I ⊗ S ⊗ I) x, with S a 1D stencil acting on direction `axis` of a tensor of shape dims.
void apply_along_axis(const PeriodicStencil& s1d, std::span<const std::size_t> dims,
                      std::size_t axis, const double* x, double* y, double s = 1.0);

// Envelope (skyline) Cholesky factor of a symmetric positive definite matrix.
class FactoredSPD {
 public:
  FactoredSPD() = default;
  explicit FactoredSPD(const SparseMatrix& a);  // NumericalError if not SPD
  static FactoredSPD from_dense(std::size_t n, std::span<const double> a);

  std::size_t size() const { return n_; }
  void solve(double* x) const;
  // x holds n rows of length `block`, contiguous
  void solve_blocks(double* x, std::size_t block) const;
  std::vector<double> solve(std::span<const double> rhs) const;

 private:
  void factor(const std::vector<std::vector<std::pair<std::size_t, double>>>& lower);
  std::size_t n_ = 0;
  std::vector<std::size_t> first_;  // first stored column per row
  std::vector<std::size_t> start_;  // offset of row i in l_
  std::vector<double> l_;
  double at(std::size_t i, std::size_t j) const { return l_[start_[i] + (j - first_[i])]; }
};

// Solve along direction `axis` of a tensor of shape dims, in place.
void solve_along_axis(const FactoredSPD& m, std::span<const std::size_t> dims, std::size_t axis,
                      double* x);

// (M_x ⊗ M_v)^{-1} rhs as (M_x^{-1} ⊗ I)(I ⊗ M_v^{-1}) rhs.
std::vector<double> mass_solve(const FactoredSPD& m_x, const FactoredSPD& m_v,
                               std::span<const double> rhs);

// Inverse of a Kronecker product of 1D factors, one per tensor direction.
class KroneckerSolver {
 public:
  KroneckerSolver() = default;
  KroneckerSolver(std::vector<FactoredSPD> factors, std::vector<std::size_t> dims);
  void solve(double* x) const;
  const std::vector<std::size_t>& dims() const { return dims_; }

 private:
  std::vector<FactoredSPD> factors_;
  std::vector<std::size_t> dims_;
};

using LinearMap = std::function<void(std::span<const double>, std::span<double>)>;

struct CgOptions {
  std::vector<double> jacobi;  // diagonal of the operator; empty = no preconditioning
  // for a singular operator with constant kernel: weights w, iterate projected to w^T x = 0
  std::vector<double> kernel_weights;
};

struct CgResult {
  std::vector<double> x;
  int iterations = 0;
  double relative_residual = 0.0;
};

// NumericalError when the relative residual stays above tol after max_iter iterations.
CgResult cg_solve(const LinearMap& op, std::span<const double> rhs, double tol, int max_iter,
                  const CgOptions& options = {});

}  // namespace vmfem
