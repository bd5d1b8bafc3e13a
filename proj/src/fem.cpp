#include "vmfem/fem.hpp"

#include <cmath>
#include <stdexcept>

namespace vmfem {

AxisSpace::AxisSpace(const Axis& axis, SpaceKind kind) : axis_(&axis), kind_(kind) {
  if (kind == SpaceKind::cg) ref_ = axis.ref_nodes();
  else ref_ = quadrature_rule(axis.degree()).points;
}

std::size_t AxisSpace::global(std::size_t cell, int a) const {
  const std::size_t k = static_cast<std::size_t>(axis_->degree());
  const std::size_t g = cell * k + static_cast<std::size_t>(a);
  return kind_ == SpaceKind::cg ? g % axis_->size() : g;
}

AxisTable tabulate(const AxisSpace& s, const QuadratureRule& q) {
  AxisTable t;
  t.nq = static_cast<int>(q.points.size());
  t.nl = s.local_count();
  t.val.resize(static_cast<std::size_t>(t.nq * t.nl));
  t.der.resize(t.val.size());
  for (int iq = 0; iq < t.nq; ++iq) {
    auto b = lagrange_eval(s.ref_nodes(), q.points[iq]);
    for (int a = 0; a < t.nl; ++a) {
      t.val[iq * t.nl + a] = b.values[a];
      t.der[iq * t.nl + a] = b.derivatives[a] / s.axis().h();
    }
  }
  return t;
}

TensorSpace::TensorSpace(const CartesianMesh& mesh, std::vector<SpaceKind> kinds) : mesh_(&mesh) {
  if (kinds.size() != mesh.dim()) throw std::invalid_argument("one space kind per direction");
  for (std::size_t d = 0; d < kinds.size(); ++d) axes_.emplace_back(mesh.axis(d), kinds[d]);
}

TensorSpace TensorSpace::continuous(const CartesianMesh& mesh) {
  return TensorSpace(mesh, std::vector<SpaceKind>(mesh.dim(), SpaceKind::cg));
}

namespace {

// Tensor products of per-direction tables: [q][a] with both multi-indices last-fastest.
struct ProductTable {
  std::size_t nqt = 1, nlt = 1;
  std::vector<double> p;
  std::vector<std::vector<int>> local;  // per local multi-index, per direction
};

ProductTable product_table(const TensorSpace& s, const QuadratureRule& q, int deriv) {
  const std::size_t d = s.dim();
  std::vector<AxisTable> tabs;
  for (std::size_t e = 0; e < d; ++e) tabs.push_back(tabulate(s.axis(e), q));
  ProductTable t;
  const std::size_t nq = q.points.size();
  for (std::size_t e = 0; e < d; ++e) {
    t.nqt *= nq;
    t.nlt *= static_cast<std::size_t>(tabs[e].nl);
  }
  t.local.resize(t.nlt, std::vector<int>(d));
  for (std::size_t a = 0; a < t.nlt; ++a) {
    std::size_t r = a;
    for (std::size_t e = d; e-- > 0;) {
      t.local[a][e] = static_cast<int>(r % static_cast<std::size_t>(tabs[e].nl));
      r /= static_cast<std::size_t>(tabs[e].nl);
    }
  }
  t.p.resize(t.nqt * t.nlt);
  std::vector<std::size_t> qi(d);
  for (std::size_t iq = 0; iq < t.nqt; ++iq) {
    std::size_t r = iq;
    for (std::size_t e = d; e-- > 0;) {
      qi[e] = r % nq;
      r /= nq;
    }
    for (std::size_t a = 0; a < t.nlt; ++a) {
      double v = 1.0;
      for (std::size_t e = 0; e < d; ++e) {
        const auto& tab = tabs[e];
        const std::size_t k = qi[e] * static_cast<std::size_t>(tab.nl) +
                              static_cast<std::size_t>(t.local[a][e]);
        v *= (static_cast<int>(e) == deriv) ? tab.der[k] : tab.val[k];
      }
      t.p[iq * t.nlt + a] = v;
    }
  }
  return t;
}

void cell_multi(const CartesianMesh& mesh, std::size_t c, std::vector<std::size_t>& idx) {
  for (std::size_t e = mesh.dim(); e-- > 0;) {
    const auto nc = static_cast<std::size_t>(mesh.axis(e).cells());
    idx[e] = c % nc;
    c /= nc;
  }
}

// flat global index of local node a in cell idx
std::size_t global_flat(const TensorSpace& s, const std::vector<std::size_t>& cell,
                        const std::vector<int>& local) {
  std::size_t g = 0;
  for (std::size_t e = 0; e < s.dim(); ++e)
    g = g * s.axis(e).size() + s.axis(e).global(cell[e], local[e]);
  return g;
}

}  // namespace

std::size_t quad_points_per_cell(const CartesianMesh& mesh, int nq) {
  std::size_t n = 1;
  for (std::size_t e = 0; e < mesh.dim(); ++e) n *= static_cast<std::size_t>(nq);
  return n;
}

std::vector<CellQuadValues> quadrature_coordinates(const CartesianMesh& mesh, int nq) {
  const auto q = quadrature_rule(nq);
  const std::size_t d = mesh.dim(), nqt = quad_points_per_cell(mesh, nq);
  const std::size_t nc = mesh.cell_count();
  std::vector<CellQuadValues> out(d, CellQuadValues(nc * nqt));
  std::vector<std::size_t> cell(d), qi(d);
  for (std::size_t c = 0; c < nc; ++c) {
    cell_multi(mesh, c, cell);
    for (std::size_t iq = 0; iq < nqt; ++iq) {
      std::size_t r = iq;
      for (std::size_t e = d; e-- > 0;) {
        qi[e] = r % static_cast<std::size_t>(nq);
        r /= static_cast<std::size_t>(nq);
      }
      for (std::size_t e = 0; e < d; ++e) {
        const Axis& ax = mesh.axis(e);
        out[e][c * nqt + iq] =
            ax.lower() + (static_cast<double>(cell[e]) + q.points[qi[e]]) * ax.h();
      }
    }
  }
  return out;
}

CellQuadValues quadrature_weights(const CartesianMesh& mesh, int nq) {
  const auto q = quadrature_rule(nq);
  const std::size_t d = mesh.dim(), nqt = quad_points_per_cell(mesh, nq);
  double jac = 1.0;
  for (std::size_t e = 0; e < d; ++e) jac *= mesh.axis(e).h();
  std::vector<double> w(nqt);
  for (std::size_t iq = 0; iq < nqt; ++iq) {
    std::size_t r = iq;
    double v = jac;
    for (std::size_t e = d; e-- > 0;) {
      v *= q.weights[r % static_cast<std::size_t>(nq)];
      r /= static_cast<std::size_t>(nq);
    }
    w[iq] = v;
  }
  CellQuadValues out(mesh.cell_count() * nqt);
  for (std::size_t c = 0; c < mesh.cell_count(); ++c)
    for (std::size_t iq = 0; iq < nqt; ++iq) out[c * nqt + iq] = w[iq];
  return out;
}

CellQuadValues evaluate_points(const TensorSpace& s, std::span<const double> coeffs,
                               std::span<const double> points, int dir) {
  if (coeffs.size() != s.size()) throw std::invalid_argument("coefficient size mismatch");
  QuadratureRule q;
  q.points.assign(points.begin(), points.end());
  q.weights.assign(points.size(), 0.0);
  const auto t = product_table(s, q, dir);
  const CartesianMesh& mesh = s.mesh();
  const std::size_t nc = mesh.cell_count();
  CellQuadValues out(nc * t.nqt, 0.0);
#pragma omp parallel
  {
    std::vector<std::size_t> cell(s.dim());
    std::vector<double> u(t.nlt);
#pragma omp for schedule(static)
    for (std::size_t c = 0; c < nc; ++c) {
      cell_multi(mesh, c, cell);
      for (std::size_t a = 0; a < t.nlt; ++a) u[a] = coeffs[global_flat(s, cell, t.local[a])];
      for (std::size_t iq = 0; iq < t.nqt; ++iq) {
        double v = 0.0;
        const double* p = t.p.data() + iq * t.nlt;
        for (std::size_t a = 0; a < t.nlt; ++a) v += p[a] * u[a];
        out[c * t.nqt + iq] = v;
      }
    }
  }
  return out;
}

CellQuadValues evaluate(const TensorSpace& s, std::span<const double> coeffs, int nq, int dir) {
  return evaluate_points(s, coeffs, quadrature_rule(nq).points, dir);
}

CellQuadValues evaluate_closure(const CartesianMesh& mesh, int nq,
                                const std::function<double(std::span<const double>)>& fn) {
  auto xs = quadrature_coordinates(mesh, nq);
  const std::size_t d = mesh.dim();
  CellQuadValues out(xs[0].size());
  std::vector<double> pt(d);
  for (std::size_t k = 0; k < out.size(); ++k) {
    for (std::size_t e = 0; e < d; ++e) pt[e] = xs[e][k];
    out[k] = fn(pt);
  }
  return out;
}

PeriodicStencil assemble_form(const TensorSpace& test, const TensorSpace& trial, int nq,
                              int test_deriv, int trial_deriv, const CellQuadValues& coef) {
  if (&test.mesh() != &trial.mesh()) throw std::invalid_argument("spaces on different meshes");
  const CartesianMesh& mesh = test.mesh();
  const std::size_t d = mesh.dim();
  const auto q = quadrature_rule(nq);
  const auto tt = product_table(test, q, test_deriv);
  const auto ts = product_table(trial, q, trial_deriv);
  const auto w = quadrature_weights(mesh, nq);
  const std::size_t nqt = tt.nqt, nc = mesh.cell_count();
  if (!coef.empty() && coef.size() != nc * nqt)
    throw std::invalid_argument("coefficient table size mismatch");
  PeriodicStencil out(mesh.dims(), mesh.degree());
  // offset index per local pair
  std::vector<std::size_t> pair_oi(tt.nlt * ts.nlt);
  std::vector<int> o(d);
  for (std::size_t a = 0; a < tt.nlt; ++a)
    for (std::size_t b = 0; b < ts.nlt; ++b) {
      for (std::size_t e = 0; e < d; ++e) o[e] = ts.local[b][e] - tt.local[a][e];
      pair_oi[a * ts.nlt + b] = out.offset_index(o);
    }
  std::vector<std::size_t> cell(d);
  std::vector<double> tmp(nqt * ts.nlt);
  for (std::size_t c = 0; c < nc; ++c) {
    cell_multi(mesh, c, cell);
    for (std::size_t iq = 0; iq < nqt; ++iq) {
      const double cw = w[c * nqt + iq] * (coef.empty() ? 1.0 : coef[c * nqt + iq]);
      for (std::size_t b = 0; b < ts.nlt; ++b) tmp[iq * ts.nlt + b] = cw * ts.p[iq * ts.nlt + b];
    }
    for (std::size_t a = 0; a < tt.nlt; ++a) {
      const std::size_t row = global_flat(test, cell, tt.local[a]);
      for (std::size_t b = 0; b < ts.nlt; ++b) {
        double v = 0.0;
        for (std::size_t iq = 0; iq < nqt; ++iq) v += tt.p[iq * tt.nlt + a] * tmp[iq * ts.nlt + b];
        out.add(row, pair_oi[a * ts.nlt + b], v);
      }
    }
  }
  out.finalize();
  return out;
}

WeightedStiffness::WeightedStiffness(const TensorSpace& s, int nq) : s_(&s) {
  const CartesianMesh& mesh = s.mesh();
  const std::size_t d = mesh.dim();
  for (std::size_t e = 0; e < d; ++e)
    if (s.kind(e) != SpaceKind::cg) throw std::invalid_argument("weighted stiffness needs a CG space");
  const auto q = quadrature_rule(nq);
  const auto val = product_table(s, q, -1);
  nlt_ = val.nlt;
  nc_ = mesh.cell_count();
  // uniform cells: the weights of cell 0 serve every cell
  const auto w = quadrature_weights(mesh, nq);
  t_.assign(d, std::vector<double>(nlt_ * nlt_ * nlt_, 0.0));
  for (std::size_t l = 0; l < d; ++l) {
    const auto der = product_table(s, q, static_cast<int>(l));
    for (std::size_t iq = 0; iq < val.nqt; ++iq)
      for (std::size_t e = 0; e < nlt_; ++e) {
        const double we = w[iq] * val.p[iq * nlt_ + e];
        for (std::size_t a = 0; a < nlt_; ++a)
          for (std::size_t b = 0; b < nlt_; ++b)
            t_[l][(e * nlt_ + a) * nlt_ + b] += we * der.p[iq * nlt_ + a] * der.p[iq * nlt_ + b];
      }
  }
  PeriodicStencil probe(mesh.dims(), mesh.degree());
  pair_oi_.resize(nlt_ * nlt_);
  std::vector<int> o(d);
  for (std::size_t a = 0; a < nlt_; ++a)
    for (std::size_t b = 0; b < nlt_; ++b) {
      for (std::size_t e = 0; e < d; ++e) o[e] = val.local[b][e] - val.local[a][e];
      pair_oi_[a * nlt_ + b] = probe.offset_index(o);
    }
  nodes_.resize(nc_ * nlt_);
  std::vector<std::size_t> cell(d);
  for (std::size_t c = 0; c < nc_; ++c) {
    cell_multi(mesh, c, cell);
    for (std::size_t a = 0; a < nlt_; ++a) nodes_[c * nlt_ + a] = global_flat(s, cell, val.local[a]);
  }
}

void WeightedStiffness::assemble(const std::vector<std::vector<double>>& nu,
                                 PeriodicStencil& out) const {
  const CartesianMesh& mesh = s_->mesh();
  if (nu.size() != mesh.dim()) throw std::invalid_argument("one viscosity field per direction");
  if (out.size() != mesh.size() || out.bandwidth() != mesh.degree())
    out = PeriodicStencil(mesh.dims(), mesh.degree());
  else
    out.set_zero();
  std::vector<double> ne(nlt_);
  for (std::size_t l = 0; l < nu.size(); ++l) {
    if (nu[l].empty()) continue;
    if (nu[l].size() != mesh.size()) throw std::invalid_argument("viscosity size mismatch");
    bool any = false;
    for (double v : nu[l]) {
      if (v < 0.0) throw std::invalid_argument("negative viscosity");
      any = any || v != 0.0;
    }
    if (!any) continue;
    const double* t = t_[l].data();
    for (std::size_t c = 0; c < nc_; ++c) {
      const std::size_t* nd = nodes_.data() + c * nlt_;
      for (std::size_t e = 0; e < nlt_; ++e) ne[e] = nu[l][nd[e]];
      for (std::size_t a = 0; a < nlt_; ++a)
        for (std::size_t b = 0; b < nlt_; ++b) {
          double v = 0.0;
          for (std::size_t e = 0; e < nlt_; ++e) v += ne[e] * t[(e * nlt_ + a) * nlt_ + b];
          out.add(nd[a], pair_oi_[a * nlt_ + b], v);
        }
    }
  }
  out.finalize();
}

std::vector<double> assemble_load(const TensorSpace& test, int nq, const CellQuadValues& coef,
                                  int test_deriv) {
  const CartesianMesh& mesh = test.mesh();
  const auto q = quadrature_rule(nq);
  const auto tt = product_table(test, q, test_deriv);
  const auto w = quadrature_weights(mesh, nq);
  const std::size_t nqt = tt.nqt, nc = mesh.cell_count();
  if (coef.size() != nc * nqt) throw std::invalid_argument("coefficient table size mismatch");
  std::vector<double> out(test.size(), 0.0);
  std::vector<std::size_t> cell(mesh.dim());
  for (std::size_t c = 0; c < nc; ++c) {
    cell_multi(mesh, c, cell);
    for (std::size_t a = 0; a < tt.nlt; ++a) {
      double v = 0.0;
      for (std::size_t iq = 0; iq < nqt; ++iq)
        v += tt.p[iq * tt.nlt + a] * w[c * nqt + iq] * coef[c * nqt + iq];
      out[global_flat(test, cell, tt.local[a])] += v;
    }
  }
  return out;
}

PeriodicStencil assemble_axis_form(const AxisSpace& test, const AxisSpace& trial, int nq,
                                   bool test_deriv, bool trial_deriv,
                                   const std::function<double(double)>& weight) {
  const Axis& ax = test.axis();
  if (&ax != &trial.axis()) throw std::invalid_argument("spaces on different axes");
  const auto q = quadrature_rule(nq);
  const auto tt = tabulate(test, q);
  const auto ts = tabulate(trial, q);
  const int k = ax.degree();
  PeriodicStencil out({ax.size()}, k);
  for (int c = 0; c < ax.cells(); ++c) {
    for (int iq = 0; iq < nq; ++iq) {
      double cw = q.weights[iq] * ax.h();
      if (weight) cw *= weight(ax.lower() + (c + q.points[iq]) * ax.h());
      for (int a = 0; a < tt.nl; ++a) {
        const double ta = (test_deriv ? tt.der : tt.val)[iq * tt.nl + a];
        for (int b = 0; b < ts.nl; ++b) {
          const double sb = (trial_deriv ? ts.der : ts.val)[iq * ts.nl + b];
          const int o = b - a;
          out.add(test.global(static_cast<std::size_t>(c), a), static_cast<std::size_t>(o + k),
                  cw * ta * sb);
        }
      }
    }
  }
  out.finalize();
  return out;
}

PeriodicStencil axis_mass(const AxisSpace& s) {
  return assemble_axis_form(s, s, s.axis().degree() + 2, false, false);
}

KroneckerSolver mass_solver(const TensorSpace& s) {
  std::vector<FactoredSPD> f;
  for (std::size_t d = 0; d < s.dim(); ++d) f.emplace_back(axis_mass(s.axis(d)).to_csr());
  return KroneckerSolver(std::move(f), s.dims());
}

PeriodicStencil mass_stencil(const TensorSpace& s) {
  std::vector<PeriodicStencil> m;
  for (std::size_t d = 0; d < s.dim(); ++d) m.push_back(axis_mass(s.axis(d)));
  std::vector<const PeriodicStencil*> ptr;
  for (const auto& x : m) ptr.push_back(&x);
  return kron_stencil(ptr);
}

std::vector<double> interpolate(const TensorSpace& s,
                                const std::function<double(std::span<const double>)>& fn) {
  const std::size_t d = s.dim();
  std::vector<double> out(s.size());
  std::vector<std::size_t> idx(d);
  std::vector<double> pt(d);
  for (std::size_t l = 0; l < s.size(); ++l) {
    s.mesh().unflat(l, idx);
    for (std::size_t e = 0; e < d; ++e) {
      const AxisSpace& ax = s.axis(e);
      const auto k = static_cast<std::size_t>(ax.axis().degree());
      const std::size_t c = idx[e] / k, a = idx[e] % k;
      pt[e] = ax.axis().lower() + (static_cast<double>(c) + ax.ref_nodes()[a]) * ax.axis().h();
    }
    out[l] = fn(pt);
  }
  return out;
}

std::vector<double> l2_project(const TensorSpace& s,
                               const std::function<double(std::span<const double>)>& fn,
                               int nq) {
  auto b = assemble_load(s, nq, evaluate_closure(s.mesh(), nq, fn));
  mass_solver(s).solve(b.data());
  return b;
}

double l2_error(const TensorSpace& s, std::span<const double> coeffs,
                const std::function<double(std::span<const double>)>& fn, int nq) {
  auto uh = evaluate(s, coeffs, nq);
  auto ex = evaluate_closure(s.mesh(), nq, fn);
  auto w = quadrature_weights(s.mesh(), nq);
  double e = 0.0;
  for (std::size_t k = 0; k < uh.size(); ++k) e += w[k] * (uh[k] - ex[k]) * (uh[k] - ex[k]);
  return std::sqrt(e);
}

}  // namespace vmfem
