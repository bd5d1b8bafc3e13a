#include "vmfem/densities.hpp"

#include <stdexcept>

#include "vmfem/operators.hpp"
#include "vmfem/simd.hpp"

namespace vmfem {

namespace {

// ∫ w(z) φ_i dz per 1D node of one axis
std::vector<double> axis_moment(const Axis& ax, int power) {
  AxisSpace s(ax, SpaceKind::cg);
  const auto q = quadrature_rule(ax.degree() + 2);
  const auto t = tabulate(s, q);
  std::vector<double> out(ax.size(), 0.0);
  for (int c = 0; c < ax.cells(); ++c)
    for (int iq = 0; iq < t.nq; ++iq) {
      const double z = ax.lower() + (c + q.points[iq]) * ax.h();
      double w = q.weights[iq] * ax.h();
      for (int p = 0; p < power; ++p) w *= z;
      for (int a = 0; a < t.nl; ++a)
        out[s.global(static_cast<std::size_t>(c), a)] += w * t.val[iq * t.nl + a];
    }
  return out;
}

// tensor product of per-direction node weights, last direction fastest
std::vector<double> outer(const std::vector<std::vector<double>>& f) {
  std::vector<double> out{1.0};
  for (const auto& a : f) {
    std::vector<double> next;
    next.reserve(out.size() * a.size());
    for (double x : out)
      for (double y : a) next.push_back(x * y);
    out.swap(next);
  }
  return out;
}

}  // namespace

MarginalWeights marginal_weights(const TensorGrid& grid) {
  MarginalWeights w;
  const CartesianMesh& xm = grid.x();
  const CartesianMesh& vm = grid.v();
  std::vector<std::vector<double>> f;
  for (std::size_t d = 0; d < xm.dim(); ++d) f.push_back(axis_moment(xm.axis(d), 0));
  w.x = outer(f);
  std::vector<std::vector<double>> m0, m1, m2;
  for (std::size_t d = 0; d < vm.dim(); ++d) {
    m0.push_back(axis_moment(vm.axis(d), 0));
    m1.push_back(axis_moment(vm.axis(d), 1));
    m2.push_back(axis_moment(vm.axis(d), 2));
  }
  w.v = outer(m0);
  w.v_energy.assign(vm.size(), 0.0);
  for (std::size_t l = 0; l < vm.dim(); ++l) {
    auto g = m0;
    g[l] = m1[l];
    w.v_moment.push_back(outer(g));
    auto e = m0;
    e[l] = m2[l];
    auto el = outer(e);
    for (std::size_t j = 0; j < el.size(); ++j) w.v_energy[j] += el[j];
    std::vector<double> nodes(vm.size());
    for (std::size_t j = 0; j < vm.size(); ++j) nodes[j] = vm.coordinate(j, l);
    w.v_nodes.push_back(std::move(nodes));
  }
  return w;
}

std::vector<double> charge_density(const TensorGrid& grid, const MarginalWeights& w,
                                   std::span<const double> f, double charge) {
  if (f.size() != grid.size()) throw std::invalid_argument("distribution size mismatch");
  const std::size_t nv = grid.nv();
  const auto& k = simd::kernels();
  std::vector<double> rho(grid.nx());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < grid.nx(); ++i)
    rho[i] = charge * k.dot(nv, w.v.data(), f.data() + i * nv);
  return rho;
}

std::vector<std::vector<double>> current_density(const TensorGrid& grid, const MarginalWeights& w,
                                                 std::span<const double> f, double charge) {
  if (f.size() != grid.size()) throw std::invalid_argument("distribution size mismatch");
  const std::size_t nv = grid.nv();
  const auto& k = simd::kernels();
  std::vector<std::vector<double>> j(w.v_moment.size(), std::vector<double>(grid.nx()));
  for (std::size_t l = 0; l < w.v_moment.size(); ++l)
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < grid.nx(); ++i)
      j[l][i] = charge * k.dot(nv, w.v_moment[l].data(), f.data() + i * nv);
  return j;
}

void velocity_marginal(const TensorGrid& grid, const MarginalWeights& w,
                       std::span<const double> f, const FieldMoments& fm,
                       std::vector<double>& u_v, std::vector<std::vector<double>>& flux_v) {
  if (f.size() != grid.size()) throw std::invalid_argument("distribution size mismatch");
  const std::size_t nv = grid.nv(), nx = grid.nx();
  const auto& k = simd::kernels();
  u_v.assign(nv, 0.0);
  std::vector<double> ae1(nv, 0.0), ae2(nv, 0.0), ab(nv, 0.0);
  for (std::size_t i = 0; i < nx; ++i) {
    const double* fi = f.data() + i * nv;
    k.axpy(nv, w.x[i], fi, u_v.data());
    if (!fm.e1.empty()) k.axpy(nv, fm.e1[i], fi, ae1.data());
    if (!fm.e2.empty()) k.axpy(nv, fm.e2[i], fi, ae2.data());
    if (!fm.b3.empty()) k.axpy(nv, fm.b3[i], fi, ab.data());
  }
  flux_v.assign(2, std::vector<double>(nv));
  for (std::size_t j = 0; j < nv; ++j) {
    flux_v[0][j] = ae1[j] + w.v_nodes[1][j] * ab[j];
    flux_v[1][j] = ae2[j] - w.v_nodes[0][j] * ab[j];
  }
}

Marginals compute_marginals(const TensorGrid& grid, const MarginalWeights& w,
                            std::span<const double> f, const FieldMoments& fm, double charge) {
  Marginals m;
  m.rho = charge_density(grid, w, f, charge);
  m.current = current_density(grid, w, f, charge);
  velocity_marginal(grid, w, f, fm, m.u_v, m.flux_v);
  return m;
}

std::vector<double> modified_current_load(const TensorSpace& test, std::span<const double> j_l,
                                          std::span<const double> rho,
                                          std::span<const double> nu_l, int l) {
  const CartesianMesh& x = test.mesh();
  auto cg = TensorSpace::continuous(x);
  const int nq = field_quadrature_points(x.degree());
  auto coef = evaluate(cg, j_l, nq);
  if (!nu_l.empty() && l < static_cast<int>(x.dim())) {
    auto nu = evaluate(cg, nu_l, nq);
    auto drho = evaluate(cg, rho, nq, l);
    for (std::size_t q = 0; q < coef.size(); ++q) coef[q] -= nu[q] * drho[q];
  }
  return assemble_load(test, nq, coef);
}

std::vector<double> modified_current(const CartesianMesh& x, std::span<const double> j_l,
                                     std::span<const double> rho, std::span<const double> nu_l,
                                     int l) {
  auto cg = TensorSpace::continuous(x);
  auto b = modified_current_load(cg, j_l, rho, nu_l, l);
  mass_solver(cg).solve(b.data());
  return b;
}

}  // namespace vmfem
