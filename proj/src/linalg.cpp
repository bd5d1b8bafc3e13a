#include "vmfem/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "vmfem/errors.hpp"
#include "vmfem/simd.hpp"

namespace vmfem {

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> entries) {
  for (const auto& t : entries)
    if (t.row >= rows || t.col >= cols) throw std::invalid_argument("triplet out of range");
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.row_ptr.assign(rows + 1, 0);
  const Triplet* last = nullptr;
  for (const auto& t : entries) {
    if (last && last->row == t.row && last->col == t.col) {
      m.val.back() += t.value;
      continue;
    }
    m.col.push_back(t.col);
    m.val.push_back(t.value);
    m.row_ptr[t.row + 1]++;
    last = &t;
  }
  for (std::size_t i = 0; i < rows; ++i) m.row_ptr[i + 1] += m.row_ptr[i];
  return m;
}

SparseMatrix SparseMatrix::from_dense(std::size_t rows, std::size_t cols,
                                      std::span<const double> a) {
  if (a.size() != rows * cols) throw std::invalid_argument("dense size mismatch");
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      if (a[i * cols + j] != 0.0) t.push_back({i, j, a[i * cols + j]});
  return from_triplets(rows, cols, std::move(t));
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return from_triplets(n, n, std::move(t));
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
  auto b = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
  auto e = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
  auto it = std::lower_bound(b, e, j);
  return (it != e && *it == j) ? val[static_cast<std::size_t>(it - col.begin())] : 0.0;
}

void SparseMatrix::multiply(const double* x, double* y) const {
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
    y[i] = s;
  }
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<Triplet> t;
  t.reserve(nnz());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) t.push_back({col[k], i, val[k]});
  return from_triplets(cols, rows, std::move(t));
}

std::vector<double> SparseMatrix::to_dense() const {
  std::vector<double> a(rows * cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) a[i * cols + col[k]] += val[k];
  return a;
}

std::vector<double> kron_apply(const SparseMatrix& a_x, const SparseMatrix& a_v,
                               std::span<const double> f) {
  if (a_x.rows != a_x.cols || a_v.rows != a_v.cols)
    throw std::invalid_argument("kron_apply expects square factors");
  const std::size_t nx = a_x.rows, nv = a_v.rows;
  if (f.size() != nx * nv) throw std::invalid_argument("kron_apply dimension mismatch");
  // h = (I ⊗ A_v) f, then (A_x ⊗ I) h
  std::vector<double> h(f.size()), out(f.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < nx; ++i) a_v.multiply(f.data() + i * nv, h.data() + i * nv);
  const auto& kern = simd::kernels();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t k = a_x.row_ptr[i]; k < a_x.row_ptr[i + 1]; ++k)
      kern.axpy(nv, a_x.val[k], h.data() + a_x.col[k] * nv, out.data() + i * nv);
  return out;
}

PeriodicStencil::PeriodicStencil(std::vector<std::size_t> dims, int bandwidth)
    : dims_(std::move(dims)), bw_(bandwidth) {
  if (dims_.empty()) throw std::invalid_argument("stencil needs at least one direction");
  if (bandwidth < 0) throw std::invalid_argument("negative bandwidth");
  n_ = 1;
  noff_ = 1;
  for (std::size_t n : dims_) {
    if (n == 0) throw std::invalid_argument("empty stencil direction");
    if (static_cast<std::size_t>(bandwidth) >= n && n > 1)
      throw std::invalid_argument("stencil bandwidth must be smaller than the direction size");
    n_ *= n;
    noff_ *= static_cast<std::size_t>(2 * bandwidth + 1);
  }
  coeff_.assign(noff_ * n_, 0.0);
  active_.assign(noff_, 1);
  offsets_.resize(noff_);
  const std::size_t d = dims_.size();
  const std::size_t w = static_cast<std::size_t>(2 * bw_ + 1);
  for (std::size_t oi = 0; oi < noff_; ++oi) {
    offsets_[oi].resize(d);
    std::size_t r = oi;
    for (std::size_t e = d; e-- > 0;) {
      offsets_[oi][e] = static_cast<int>(r % w) - bw_;
      r /= w;
    }
  }
  cols_.resize(noff_ * n_);
  std::vector<std::size_t> idx(d);
  for (std::size_t row = 0; row < n_; ++row) {
    std::size_t r = row;
    for (std::size_t e = d; e-- > 0;) {
      idx[e] = r % dims_[e];
      r /= dims_[e];
    }
    for (std::size_t oi = 0; oi < noff_; ++oi) {
      std::size_t c = 0;
      for (std::size_t e = 0; e < d; ++e) {
        auto n = static_cast<long>(dims_[e]);
        long j = (static_cast<long>(idx[e]) + offsets_[oi][e]) % n;
        if (j < 0) j += n;
        c = c * dims_[e] + static_cast<std::size_t>(j);
      }
      cols_[oi * n_ + row] = c;
    }
  }
}

std::size_t PeriodicStencil::offset_index(std::span<const int> o) const {
  std::size_t oi = 0;
  const auto w = static_cast<std::size_t>(2 * bw_ + 1);
  for (std::size_t e = 0; e < dims_.size(); ++e) {
    if (o[e] < -bw_ || o[e] > bw_) throw std::out_of_range("stencil offset outside bandwidth");
    oi = oi * w + static_cast<std::size_t>(o[e] + bw_);
  }
  return oi;
}

std::vector<int> PeriodicStencil::offset(std::size_t oi) const { return offsets_[oi]; }

void PeriodicStencil::set_zero() {
  std::fill(coeff_.begin(), coeff_.end(), 0.0);
  std::fill(active_.begin(), active_.end(), 1);
}

void PeriodicStencil::scale(double s) {
  for (double& c : coeff_) c *= s;
}

void PeriodicStencil::add_scaled(const PeriodicStencil& other, double s) {
  if (other.dims_ != dims_ || other.bw_ != bw_)
    throw std::invalid_argument("stencil shapes differ");
  for (std::size_t k = 0; k < coeff_.size(); ++k) coeff_[k] += s * other.coeff_[k];
  for (std::size_t oi = 0; oi < noff_; ++oi) active_[oi] = 1;
}

void PeriodicStencil::finalize() {
  for (std::size_t oi = 0; oi < noff_; ++oi) {
    const double* c = coeffs(oi);
    active_[oi] = std::any_of(c, c + n_, [](double v) { return v != 0.0; }) ? 1 : 0;
  }
}

void PeriodicStencil::apply(const double* x, double* y, double s, bool accumulate) const {
  const std::size_t nl = dims_.back();
  const std::size_t lines = n_ / nl;
  const auto& kern = simd::kernels();
#pragma omp parallel for schedule(static)
  for (std::size_t line = 0; line < lines; ++line) {
    double* yl = y + line * nl;
    if (!accumulate) std::fill(yl, yl + nl, 0.0);
    for (std::size_t oi = 0; oi < noff_; ++oi) {
      if (!active_[oi]) continue;
      const std::size_t src = cols_[oi * n_ + line * nl] / nl;
      const std::ptrdiff_t shift = offsets_[oi].back();
      const double* c = coeff_.data() + oi * n_ + line * nl;
      if (nl == 1) {
        yl[0] += s * c[0] * x[src];
      } else if (s == 1.0) {
        kern.shifted_fma(nl, shift, c, x + src * nl, yl);
      } else {
        kern.shifted_fma_scaled(nl, shift, s, c, x + src * nl, yl);
      }
    }
  }
}

void PeriodicStencil::apply_blocks(const double* x, double* y, std::size_t block, double s,
                                   bool accumulate) const {
  const auto& kern = simd::kernels();
#pragma omp parallel for schedule(static)
  for (std::size_t row = 0; row < n_; ++row) {
    double* yr = y + row * block;
    if (!accumulate) std::fill(yr, yr + block, 0.0);
    for (std::size_t oi = 0; oi < noff_; ++oi) {
      if (!active_[oi]) continue;
      const double c = coeff_[oi * n_ + row];
      if (c == 0.0) continue;
      kern.axpy(block, s * c, x + cols_[oi * n_ + row] * block, yr);
    }
  }
}

PeriodicStencil PeriodicStencil::transpose() const {
  PeriodicStencil t(dims_, bw_);
  std::vector<int> neg(dims_.size());
  for (std::size_t oi = 0; oi < noff_; ++oi) {
    for (std::size_t e = 0; e < dims_.size(); ++e) neg[e] = -offsets_[oi][e];
    const std::size_t ti = t.offset_index(neg);
    for (std::size_t row = 0; row < n_; ++row) t.add(column(row, oi), ti, coeff_[oi * n_ + row]);
  }
  t.finalize();
  return t;
}

SparseMatrix PeriodicStencil::to_csr() const {
  std::vector<Triplet> t;
  for (std::size_t row = 0; row < n_; ++row)
    for (std::size_t oi = 0; oi < noff_; ++oi) {
      double c = coeff_[oi * n_ + row];
      if (c != 0.0) t.push_back({row, column(row, oi), c});
    }
  return SparseMatrix::from_triplets(n_, n_, std::move(t));
}

PeriodicStencil kron_stencil(const std::vector<const PeriodicStencil*>& factors) {
  std::vector<std::size_t> dims;
  int bw = 0;
  for (const auto* f : factors) {
    if (f->dims().size() != 1) throw std::invalid_argument("kron_stencil takes 1D factors");
    dims.push_back(f->size());
    bw = std::max(bw, f->bandwidth());
  }
  PeriodicStencil out(dims, bw);
  const std::size_t d = dims.size();
  std::vector<std::size_t> idx(d);
  for (std::size_t oi = 0; oi < out.offset_count(); ++oi) {
    auto o = out.offset(oi);
    std::vector<std::size_t> foi(d);
    bool inside = true;
    for (std::size_t e = 0; e < d; ++e) {
      if (std::abs(o[e]) > factors[e]->bandwidth()) inside = false;
      else foi[e] = factors[e]->offset_index(std::span<const int>(&o[e], 1));
    }
    if (!inside) continue;
    double* c = out.coeffs(oi);
    for (std::size_t row = 0; row < out.size(); ++row) {
      std::size_t r = row;
      for (std::size_t e = d; e-- > 0;) {
        idx[e] = r % dims[e];
        r /= dims[e];
      }
      double v = 1.0;
      for (std::size_t e = 0; e < d; ++e) v *= factors[e]->coeffs(foi[e])[idx[e]];
      c[row] = v;
    }
  }
  out.finalize();
  return out;
}

namespace {

void split_dims(std::span<const std::size_t> dims, std::size_t axis, std::size_t& outer,
                std::size_t& n, std::size_t& inner) {
  if (axis >= dims.size()) throw std::invalid_argument("axis out of range");
  outer = 1;
  inner = 1;
  for (std::size_t e = 0; e < axis; ++e) outer *= dims[e];
  for (std::size_t e = axis + 1; e < dims.size(); ++e) inner *= dims[e];
  n = dims[axis];
}

}  // namespace

void apply_along_axis(const PeriodicStencil& s1d, std::span<const std::size_t> dims,
                      std::size_t axis, const double* x, double* y, double s) {
  std::size_t outer, n, inner;
  split_dims(dims, axis, outer, n, inner);
  if (s1d.dims().size() != 1 || s1d.size() != n)
    throw std::invalid_argument("1D stencil does not match the tensor direction");
  const auto& kern = simd::kernels();
  const std::size_t noff = s1d.offset_count();
  const int bw = s1d.bandwidth();
  if (inner == 1) {
#pragma omp parallel for schedule(static)
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t oi = 0; oi < noff; ++oi) {
        if (!s1d.offset_active(oi)) continue;
        const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(oi) - bw;
        kern.shifted_fma_scaled(n, shift, s, s1d.coeffs(oi), x + o * n, y + o * n);
      }
    return;
  }
#pragma omp parallel for collapse(2) schedule(static)
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t j = 0; j < n; ++j) {
      double* yj = y + (o * n + j) * inner;
      for (std::size_t oi = 0; oi < noff; ++oi) {
        if (!s1d.offset_active(oi)) continue;
        const double c = s1d.coeffs(oi)[j];
        if (c == 0.0) continue;
        kern.axpy(inner, s * c, x + (o * n + s1d.column(j, oi)) * inner, yj);
      }
    }
}

FactoredSPD::FactoredSPD(const SparseMatrix& a) {
  if (a.rows != a.cols) throw std::invalid_argument("factorization needs a square matrix");
  std::vector<std::vector<std::pair<std::size_t, double>>> lower(a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
      if (a.col[k] <= i) lower[i].push_back({a.col[k], a.val[k]});
  factor(lower);
}

FactoredSPD FactoredSPD::from_dense(std::size_t n, std::span<const double> a) {
  if (a.size() != n * n) throw std::invalid_argument("dense size mismatch");
  std::vector<std::vector<std::pair<std::size_t, double>>> lower(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      if (a[i * n + j] != 0.0 || j == i) lower[i].push_back({j, a[i * n + j]});
  FactoredSPD f;
  f.factor(lower);
  return f;
}

void FactoredSPD::factor(const std::vector<std::vector<std::pair<std::size_t, double>>>& lower) {
  n_ = lower.size();
  first_.resize(n_);
  start_.resize(n_ + 1);
  start_[0] = 0;
  for (std::size_t i = 0; i < n_; ++i) {
    std::size_t f = i;
    for (auto [j, v] : lower[i]) f = std::min(f, j);
    first_[i] = f;
    start_[i + 1] = start_[i] + (i - f + 1);
  }
  l_.assign(start_[n_], 0.0);
  for (std::size_t i = 0; i < n_; ++i)
    for (auto [j, v] : lower[i]) l_[start_[i] + (j - first_[i])] += v;
  for (std::size_t i = 0; i < n_; ++i) {
    double* li = l_.data() + start_[i];
    const std::size_t fi = first_[i];
    for (std::size_t j = fi; j < i; ++j) {
      const double* lj = l_.data() + start_[j];
      const std::size_t m0 = std::max(fi, first_[j]);
      double s = li[j - fi];
      for (std::size_t m = m0; m < j; ++m) s -= li[m - fi] * lj[m - first_[j]];
      li[j - fi] = s / lj[j - first_[j]];
    }
    double d = li[i - fi];
    for (std::size_t m = fi; m < i; ++m) d -= li[m - fi] * li[m - fi];
    if (!(d > 0.0))
      throw NumericalError("matrix is not positive definite (pivot " + std::to_string(i) + ")");
    li[i - fi] = std::sqrt(d);
  }
}

void FactoredSPD::solve(double* x) const {
  for (std::size_t i = 0; i < n_; ++i) {
    double s = x[i];
    for (std::size_t j = first_[i]; j < i; ++j) s -= at(i, j) * x[j];
    x[i] = s / at(i, i);
  }
  for (std::size_t i = n_; i-- > 0;) {
    x[i] /= at(i, i);
    const double xi = x[i];
    for (std::size_t j = first_[i]; j < i; ++j) x[j] -= at(i, j) * xi;
  }
}

void FactoredSPD::solve_blocks(double* x, std::size_t block) const {
  const auto& kern = simd::kernels();
  for (std::size_t i = 0; i < n_; ++i) {
    double* xi = x + i * block;
    for (std::size_t j = first_[i]; j < i; ++j) kern.axpy(block, -at(i, j), x + j * block, xi);
    kern.axpby(block, 0.0, xi, 1.0 / at(i, i), xi);
  }
  for (std::size_t i = n_; i-- > 0;) {
    double* xi = x + i * block;
    kern.axpby(block, 0.0, xi, 1.0 / at(i, i), xi);
    for (std::size_t j = first_[i]; j < i; ++j) kern.axpy(block, -at(i, j), xi, x + j * block);
  }
}

std::vector<double> FactoredSPD::solve(std::span<const double> rhs) const {
  if (rhs.size() != n_) throw std::invalid_argument("solve size mismatch");
  std::vector<double> x(rhs.begin(), rhs.end());
  solve(x.data());
  return x;
}

void solve_along_axis(const FactoredSPD& m, std::span<const std::size_t> dims, std::size_t axis,
                      double* x) {
  std::size_t outer, n, inner;
  split_dims(dims, axis, outer, n, inner);
  if (m.size() != n) throw std::invalid_argument("factor does not match the tensor direction");
  if (inner == 1) {
    // transpose tiles of lines so the solve runs on contiguous blocks
    constexpr std::size_t tile = 64;
    const std::size_t tiles = (outer + tile - 1) / tile;
#pragma omp parallel
    {
      std::vector<double> buf(n * tile);
#pragma omp for schedule(static)
      for (std::size_t tb = 0; tb < tiles; ++tb) {
        const std::size_t o0 = tb * tile, w = std::min(tile, outer - o0);
        for (std::size_t o = 0; o < w; ++o)
          for (std::size_t i = 0; i < n; ++i) buf[i * w + o] = x[(o0 + o) * n + i];
        m.solve_blocks(buf.data(), w);
        for (std::size_t o = 0; o < w; ++o)
          for (std::size_t i = 0; i < n; ++i) x[(o0 + o) * n + i] = buf[i * w + o];
      }
    }
    return;
  }
  // rows of one outer slab are contiguous blocks of length `inner`
  for (std::size_t o = 0; o < outer; ++o) m.solve_blocks(x + o * n * inner, inner);
}

std::vector<double> mass_solve(const FactoredSPD& m_x, const FactoredSPD& m_v,
                               std::span<const double> rhs) {
  const std::size_t nx = m_x.size(), nv = m_v.size();
  if (rhs.size() != nx * nv) throw std::invalid_argument("mass_solve dimension mismatch");
  std::vector<double> out(rhs.begin(), rhs.end());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < nx; ++i) m_v.solve(out.data() + i * nv);
  m_x.solve_blocks(out.data(), nv);
  return out;
}

KroneckerSolver::KroneckerSolver(std::vector<FactoredSPD> factors, std::vector<std::size_t> dims)
    : factors_(std::move(factors)), dims_(std::move(dims)) {
  if (factors_.size() != dims_.size()) throw std::invalid_argument("one factor per direction");
  for (std::size_t d = 0; d < dims_.size(); ++d)
    if (factors_[d].size() != dims_[d]) throw std::invalid_argument("factor size mismatch");
}

void KroneckerSolver::solve(double* x) const {
  for (std::size_t d = dims_.size(); d-- > 0;) solve_along_axis(factors_[d], dims_, d, x);
}

CgResult cg_solve(const LinearMap& op, std::span<const double> rhs, double tol, int max_iter,
                  const CgOptions& options) {
  const std::size_t n = rhs.size();
  const auto& kern = simd::kernels();
  CgResult res;
  res.x.assign(n, 0.0);
  std::vector<double> r(rhs.begin(), rhs.end());
  const bool singular = !options.kernel_weights.empty();
  if (singular) {
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(n);
    for (double& v : r) v -= mean;
  }
  const double bnorm = std::sqrt(kern.dot(n, r.data(), r.data()));
  if (bnorm == 0.0) return res;
  auto precond = [&](const std::vector<double>& in, std::vector<double>& out) {
    if (options.jacobi.empty()) {
      out = in;
      return;
    }
    for (std::size_t i = 0; i < n; ++i) out[i] = in[i] / options.jacobi[i];
  };
  std::vector<double> z(n), p(n), ap(n);
  precond(r, z);
  p = z;
  double rz = kern.dot(n, r.data(), z.data());
  for (int it = 1; it <= max_iter; ++it) {
    op(p, ap);
    const double pap = kern.dot(n, p.data(), ap.data());
    if (!(pap > 0.0)) throw NumericalError("cg breakdown: operator not positive on search direction");
    const double alpha = rz / pap;
    kern.axpy(n, alpha, p.data(), res.x.data());
    kern.axpy(n, -alpha, ap.data(), r.data());
    res.iterations = it;
    res.relative_residual = std::sqrt(kern.dot(n, r.data(), r.data())) / bnorm;
    if (res.relative_residual <= tol) break;
    precond(r, z);
    const double rz_new = kern.dot(n, r.data(), z.data());
    kern.axpby(n, 1.0, z.data(), rz_new / rz, p.data());
    rz = rz_new;
  }
  if (res.relative_residual > tol)
    throw NumericalError("cg did not converge: relative residual " +
                         std::to_string(res.relative_residual) + " after " +
                         std::to_string(max_iter) + " iterations");
  if (singular) {
    const auto& w = options.kernel_weights;
    double wx = 0.0, ws = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      wx += w[i] * res.x[i];
      ws += w[i];
    }
    for (double& v : res.x) v -= wx / ws;
  }
  return res;
}

}  // namespace vmfem
