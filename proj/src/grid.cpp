#include "vmfem/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace vmfem {

void DomainSpec::validate() const {
  const std::size_t d = lower.size();
  if (d == 0) throw std::invalid_argument("domain has no directions");
  if (upper.size() != d || cells.size() != d || periodic.size() != d)
    throw std::invalid_argument("domain spec arrays differ in length");
  if (degree < 1) throw std::invalid_argument("polynomial degree must be >= 1");
  for (std::size_t l = 0; l < d; ++l) {
    if (!(upper[l] > lower[l]))
      throw std::invalid_argument("upper bound must exceed lower bound in direction " +
                                  std::to_string(l));
    if (cells[l] < 1) throw std::invalid_argument("cell count must be positive");
    if (!periodic[l]) throw std::invalid_argument("only periodic directions are supported");
    if (cells[l] < 2) throw std::invalid_argument("periodic directions need at least 2 cells");
  }
}

namespace {

// P_n(x) and P_n'(x) by the three-term recurrence
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int m = 2; m <= n; ++m) {
    double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
    p0 = p1;
    p1 = p2;
  }
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

}  // namespace

QuadratureRule quadrature_rule(int n) {
  if (n < 1) throw std::invalid_argument("quadrature needs at least one point");
  QuadratureRule q;
  q.points.resize(n);
  q.weights.resize(n);
  q.exact_degree = 2 * n - 1;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      auto [p, dp] = legendre(n, x);
      double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double dp = legendre(n, x).second;
    double w = 1.0 / ((1.0 - x * x) * dp * dp);
    q.points[i] = 0.5 * (1.0 - x);
    q.points[n - 1 - i] = 0.5 * (1.0 + x);
    q.weights[i] = q.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) q.points[n / 2] = 0.5;
  return q;
}

std::vector<double> reference_nodes(int k, NodeFamily family) {
  if (k < 1) throw std::invalid_argument("polynomial degree must be >= 1");
  std::vector<double> t(k + 1);
  if (family == NodeFamily::equispaced || k == 1) {
    for (int a = 0; a <= k; ++a) t[a] = static_cast<double>(a) / k;
    return t;
  }
  // Gauss-Lobatto: endpoints and roots of P_k'
  for (int a = 0; a <= k; ++a) {
    double x = -std::cos(std::numbers::pi * a / k);
    if (a > 0 && a < k) {
      for (int it = 0; it < 100; ++it) {
        double pk = legendre(k, x).first;
        double pkm = legendre(k - 1, x).first;
        double dx = (x * pk - pkm) / ((k + 1) * pk);
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
    }
    t[a] = 0.5 * (1.0 + x);
  }
  return t;
}

BasisValues lagrange_eval(std::span<const double> nodes, double t) {
  const std::size_t m = nodes.size();
  BasisValues b;
  b.values.assign(m, 1.0);
  b.derivatives.assign(m, 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    double denom = 1.0;
    for (std::size_t c = 0; c < m; ++c)
      if (c != a) denom *= nodes[a] - nodes[c];
    double val = 1.0;
    for (std::size_t c = 0; c < m; ++c)
      if (c != a) val *= t - nodes[c];
    double der = 0.0;
    for (std::size_t e = 0; e < m; ++e) {
      if (e == a) continue;
      double prod = 1.0;
      for (std::size_t c = 0; c < m; ++c)
        if (c != a && c != e) prod *= t - nodes[c];
      der += prod;
    }
    b.values[a] = val / denom;
    b.derivatives[a] = der / denom;
  }
  return b;
}

BasisValues basis_eval(int degree, double t, NodeFamily family) {
  auto nodes = reference_nodes(degree, family);
  return lagrange_eval(nodes, t);
}

Axis::Axis(double lower, double upper, int cells, int degree, NodeFamily family)
    : lower_(lower),
      upper_(upper),
      h_((upper - lower) / cells),
      cells_(cells),
      degree_(degree),
      n_(static_cast<std::size_t>(cells) * degree),
      ref_(reference_nodes(degree, family)) {}

double Axis::node(std::size_t i) const {
  std::size_t c = i / degree_;
  std::size_t a = i % degree_;
  return lower_ + (static_cast<double>(c) + ref_[a]) * h_;
}

std::pair<int, int> Axis::support(std::size_t i) const {
  int a = static_cast<int>(i % degree_);
  if (a == 0) return {-degree_, degree_};
  return {-a, degree_ - a};
}

CartesianMesh::CartesianMesh(const DomainSpec& spec) : spec_(spec) {
  spec_.validate();
  size_ = 1;
  for (std::size_t d = 0; d < spec_.dim(); ++d) {
    axes_.emplace_back(spec_.lower[d], spec_.upper[d], spec_.cells[d], spec_.degree,
                       spec_.nodes);
    dims_.push_back(axes_.back().size());
    size_ *= dims_.back();
  }
}

std::size_t CartesianMesh::cell_count() const {
  std::size_t c = 1;
  for (const auto& a : axes_) c *= static_cast<std::size_t>(a.cells());
  return c;
}

double CartesianMesh::measure() const {
  double m = 1.0;
  for (const auto& a : axes_) m *= a.length();
  return m;
}

double CartesianMesh::min_h() const {
  double h = axes_.front().h();
  for (const auto& a : axes_) h = std::min(h, a.h());
  return h;
}

std::size_t CartesianMesh::flat(std::span<const std::size_t> idx) const {
  std::size_t l = 0;
  for (std::size_t d = 0; d < dims_.size(); ++d) l = l * dims_[d] + idx[d];
  return l;
}

void CartesianMesh::unflat(std::size_t l, std::span<std::size_t> idx) const {
  for (std::size_t d = dims_.size(); d-- > 0;) {
    idx[d] = l % dims_[d];
    l /= dims_[d];
  }
}

double CartesianMesh::coordinate(std::size_t l, std::size_t d) const {
  std::size_t stride = 1;
  for (std::size_t e = dims_.size(); e-- > d + 1;) stride *= dims_[e];
  return axes_[d].node((l / stride) % dims_[d]);
}

std::vector<std::size_t> CartesianMesh::support(std::size_t l) const {
  const std::size_t dim = dims_.size();
  std::vector<std::size_t> idx(dim);
  unflat(l, idx);
  std::vector<std::size_t> out{0};
  for (std::size_t d = 0; d < dim; ++d) {
    auto [lo, hi] = axes_[d].support(idx[d]);
    const auto n = static_cast<long>(dims_[d]);
    std::vector<std::size_t> next;
    for (std::size_t base : out)
      for (int o = lo; o <= hi; ++o) {
        long j = (static_cast<long>(idx[d]) + o) % n;
        if (j < 0) j += n;
        next.push_back(base * dims_[d] + static_cast<std::size_t>(j));
      }
    out.swap(next);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

TensorGrid::TensorGrid(const DomainSpec& x_spec, const DomainSpec& v_spec)
    : x_(x_spec), v_(v_spec) {
  if (x_spec.degree != v_spec.degree)
    throw std::invalid_argument("x and v meshes must share the polynomial degree");
}

double TensorGrid::h_min() const { return std::min(x_.min_h(), v_.min_h()); }

TensorGrid build_grid(const DomainSpec& x_spec, const DomainSpec& v_spec) {
  return TensorGrid(x_spec, v_spec);
}

std::vector<std::size_t> velocity_reflection(const TensorGrid& grid) {
  const CartesianMesh& v = grid.v();
  for (std::size_t d = 0; d < v.dim(); ++d) {
    const Axis& a = v.axis(d);
    double scale = std::max(std::abs(a.lower()), std::abs(a.upper()));
    if (std::abs(a.lower() + a.upper()) > 1e-12 * scale)
      throw std::invalid_argument("velocity domain is not symmetric about 0");
    const auto& r = a.ref_nodes();
    for (std::size_t m = 0; m < r.size(); ++m)
      if (std::abs(r[m] + r[r.size() - 1 - m] - 1.0) > 1e-12)
        throw std::invalid_argument("velocity node set is not reflection symmetric");
  }
  std::vector<std::size_t> perm(v.size());
  std::vector<std::size_t> idx(v.dim());
  for (std::size_t j = 0; j < v.size(); ++j) {
    v.unflat(j, idx);
    for (std::size_t d = 0; d < v.dim(); ++d) idx[d] = (v.dims()[d] - idx[d]) % v.dims()[d];
    perm[j] = v.flat(idx);
  }
  return perm;
}

std::vector<double> reflect_velocity(const TensorGrid& grid, std::span<const double> f) {
  if (f.size() != grid.size()) throw std::invalid_argument("coefficient vector size mismatch");
  auto perm = velocity_reflection(grid);
  std::vector<double> out(f.size());
  const std::size_t nv = grid.nv();
  for (std::size_t i = 0; i < grid.nx(); ++i)
    for (std::size_t j = 0; j < nv; ++j) out[i * nv + perm[j]] = f[i * nv + j];
  return out;
}

DomainSpec domain_from_nodes(std::vector<double> lower, std::vector<double> upper,
                             const std::vector<int>& nodes, int degree, NodeFamily family) {
  if (degree < 1) throw std::invalid_argument("polynomial degree must be >= 1");
  DomainSpec s;
  s.lower = std::move(lower);
  s.upper = std::move(upper);
  s.degree = degree;
  s.nodes = family;
  for (int n : nodes) {
    if (n < 2 || (n - 1) % degree != 0)
      throw std::invalid_argument("node count " + std::to_string(n) +
                                  " is not 1 + cells * degree for degree " +
                                  std::to_string(degree));
    s.cells.push_back((n - 1) / degree);
    s.periodic.push_back(true);
  }
  s.validate();
  return s;
}

DomainSpec composite_spec(const TensorGrid& grid) {
  DomainSpec s = grid.x().spec();
  const DomainSpec& b = grid.v().spec();
  s.lower.insert(s.lower.end(), b.lower.begin(), b.lower.end());
  s.upper.insert(s.upper.end(), b.upper.begin(), b.upper.end());
  s.cells.insert(s.cells.end(), b.cells.begin(), b.cells.end());
  s.periodic.insert(s.periodic.end(), b.periodic.begin(), b.periodic.end());
  return s;
}

}  // namespace vmfem
