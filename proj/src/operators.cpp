#include "vmfem/operators.hpp"

#include <algorithm>
#include <stdexcept>

namespace vmfem {

namespace {

void require_velocity_2d(const TensorGrid& grid) {
  if (grid.v().dim() != 2) throw std::invalid_argument("velocity space must be two-dimensional");
  if (grid.x().dim() < 1 || grid.x().dim() > 2)
    throw std::invalid_argument("physical space must have one or two directions");
}

bool all_zero(const CellQuadValues& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

PeriodicStencil kron2(const PeriodicStencil& a, const PeriodicStencil& b) {
  return kron_stencil({&a, &b});
}

}  // namespace

ConstantFactors assemble_constant(const TensorGrid& grid) {
  require_velocity_2d(grid);
  ConstantFactors cf;
  const int k = grid.degree();
  const CartesianMesh& xm = grid.x();
  const CartesianMesh& vm = grid.v();
  std::vector<FactoredSPD> fx, fv, fall;
  std::vector<PeriodicStencil> x_deriv_1d;
  for (std::size_t d = 0; d < xm.dim(); ++d) {
    AxisSpace s(xm.axis(d), SpaceKind::cg);
    cf.x_mass_1d.push_back(axis_mass(s));
    x_deriv_1d.push_back(assemble_axis_form(s, s, k + 2, false, true));
    fx.emplace_back(cf.x_mass_1d.back().to_csr());
  }
  if (xm.dim() == 1) {
    cf.mass_x = cf.x_mass_1d[0];
    cf.deriv_x.push_back(x_deriv_1d[0]);
  } else {
    cf.mass_x = kron2(cf.x_mass_1d[0], cf.x_mass_1d[1]);
    cf.deriv_x.push_back(kron2(x_deriv_1d[0], cf.x_mass_1d[1]));
    cf.deriv_x.push_back(kron2(cf.x_mass_1d[0], x_deriv_1d[1]));
  }
  for (std::size_t d = 0; d < vm.dim(); ++d) {
    AxisSpace s(vm.axis(d), SpaceKind::cg);
    VelocityAxisFactors f;
    f.mass = axis_mass(s);
    f.deriv = assemble_axis_form(s, s, k + 2, false, true);
    f.weighted = assemble_axis_form(s, s, k + 3, false, false, [](double v) { return v; });
    fv.emplace_back(f.mass.to_csr());
    cf.v.push_back(std::move(f));
  }
  fall = fx;
  fall.insert(fall.end(), fv.begin(), fv.end());
  std::vector<std::size_t> dims = xm.dims();
  dims.insert(dims.end(), vm.dims().begin(), vm.dims().end());
  cf.mass_x_solver = KroneckerSolver(std::move(fx), xm.dims());
  cf.mass_v_solver = KroneckerSolver(std::move(fv), vm.dims());
  cf.phase_solver = KroneckerSolver(std::move(fall), dims);
  return cf;
}

PeriodicStencil velocity_mass(const ConstantFactors& cf) {
  return kron2(cf.v[0].mass, cf.v[1].mass);
}

PeriodicStencil velocity_weighted(const ConstantFactors& cf, std::size_t l) {
  return l == 0 ? kron2(cf.v[0].weighted, cf.v[1].mass) : kron2(cf.v[0].mass, cf.v[1].weighted);
}

PeriodicStencil velocity_deriv(const ConstantFactors& cf, std::size_t l) {
  return l == 0 ? kron2(cf.v[0].deriv, cf.v[1].mass) : kron2(cf.v[0].mass, cf.v[1].deriv);
}

PeriodicStencil velocity_curl(const ConstantFactors& cf) {
  // v2 ∂_{v1} - v1 ∂_{v2}
  auto g = kron2(cf.v[0].deriv, cf.v[1].weighted);
  g.add_scaled(kron2(cf.v[0].weighted, cf.v[1].deriv), -1.0);
  g.finalize();
  return g;
}

int field_quadrature_points(int degree) { return 2 * degree + 2; }

FieldFactors assemble_field_weighted(const TensorGrid& grid, const CellQuadValues& e1,
                                     const CellQuadValues& e2, const CellQuadValues& b3) {
  auto s = TensorSpace::continuous(grid.x());
  const int nq = field_quadrature_points(grid.degree());
  FieldFactors ff;
  auto build = [&](const CellQuadValues& w, PeriodicStencil& out, bool& zero) {
    zero = w.empty() || all_zero(w);
    if (zero) {
      out = PeriodicStencil(grid.x().dims(), grid.degree());
      out.finalize();
    } else {
      out = assemble_form(s, s, nq, -1, -1, w);
    }
  };
  build(e1, ff.e1, ff.e1_zero);
  build(e2, ff.e2, ff.e2_zero);
  build(b3, ff.b3, ff.b3_zero);
  return ff;
}

PeriodicStencil assemble_diffusion(const CartesianMesh& mesh,
                                   const std::vector<std::vector<double>>& nu) {
  if (nu.size() != mesh.dim()) throw std::invalid_argument("one viscosity field per direction");
  auto s = TensorSpace::continuous(mesh);
  const int nq = field_quadrature_points(mesh.degree());
  PeriodicStencil out(mesh.dims(), mesh.degree());
  for (std::size_t l = 0; l < nu.size(); ++l) {
    if (nu[l].empty()) continue;
    if (nu[l].size() != mesh.size()) throw std::invalid_argument("viscosity size mismatch");
    for (double v : nu[l])
      if (v < 0.0) throw std::invalid_argument("negative viscosity");
    if (std::all_of(nu[l].begin(), nu[l].end(), [](double v) { return v == 0.0; })) continue;
    auto w = evaluate(s, nu[l], nq);
    out.add_scaled(assemble_form(s, s, nq, static_cast<int>(l), static_cast<int>(l), w), 1.0);
  }
  out.finalize();
  return out;
}

DiffusionFactors assemble_diffusion_factors(const TensorGrid& grid,
                                            const std::vector<std::vector<double>>& nu_x,
                                            const std::vector<std::vector<double>>& nu_v) {
  auto nonzero = [](const std::vector<std::vector<double>>& nu) {
    for (const auto& f : nu)
      if (std::any_of(f.begin(), f.end(), [](double v) { return v != 0.0; })) return true;
    return false;
  };
  DiffusionFactors d;
  d.dx = assemble_diffusion(grid.x(), nu_x);
  d.dv = assemble_diffusion(grid.v(), nu_v);
  d.dx_zero = !nonzero(nu_x);
  d.dv_zero = !nonzero(nu_v);
  return d;
}

VlasovOperator::VlasovOperator(const TensorGrid& grid, const ConstantFactors& cf)
    : grid_(&grid), cf_(&cf) {
  require_velocity_2d(grid);
  dims_ = grid.x().dims();
  v1_axis_ = dims_.size();
  v2_axis_ = dims_.size() + 1;
  dims_.insert(dims_.end(), grid.v().dims().begin(), grid.v().dims().end());
  const std::size_t n = grid.size();
  g_m_.resize(n);
  g_a_.resize(n);
  g_c_.resize(n);
  h_.resize(n);
}

void VlasovOperator::apply_bracket(std::span<const double> f, const FieldFactors& ff,
                                   const DiffusionFactors* diff, std::span<double> out) {
  const TensorGrid& g = *grid_;
  const ConstantFactors& cf = *cf_;
  const std::size_t n = g.size(), nv = g.nv(), nx = g.nx();
  if (f.size() != n || out.size() != n) throw std::invalid_argument("rhs size mismatch");
  const bool two_x = g.x().dim() == 2;
  const bool visc_x = diff && !diff->dx_zero;
  const bool visc_v = diff && !diff->dv_zero;
  const bool need_a = !ff.e2_zero || !ff.b3_zero;
  const bool need_c = two_x || !ff.b3_zero;
  const auto& v1 = cf.v[0];
  const auto& v2 = cf.v[1];
  std::fill(out.begin(), out.end(), 0.0);

  // passes along v2 (contiguous lines)
  auto along = [&](const PeriodicStencil& s, std::size_t axis, const double* x, double* y,
                   double sc = 1.0) { apply_along_axis(s, dims_, axis, x, y, sc); };
  auto clear = [](std::vector<double>& b) { std::fill(b.begin(), b.end(), 0.0); };
  clear(g_m_);
  along(v2.mass, v2_axis_, f.data(), g_m_.data());
  if (need_a) {
    clear(g_a_);
    along(v2.deriv, v2_axis_, f.data(), g_a_.data());
  }
  if (need_c) {
    clear(g_c_);
    along(v2.weighted, v2_axis_, f.data(), g_c_.data());
  }
  // each term: h = (I ⊗ V) f, out += (X ⊗ I) h
  auto term = [&](const PeriodicStencil& x_op, auto&& fill_h) {
    clear(h_);
    fill_h();
    x_op.apply_blocks(h_.data(), out.data(), nv);
  };
  term(cf.deriv_x[0], [&] { along(v1.weighted, v1_axis_, g_m_.data(), h_.data()); });
  if (two_x) term(cf.deriv_x[1], [&] { along(v1.mass, v1_axis_, g_c_.data(), h_.data()); });
  if (!ff.e1_zero) term(ff.e1, [&] { along(v1.deriv, v1_axis_, g_m_.data(), h_.data()); });
  if (!ff.e2_zero) term(ff.e2, [&] { along(v1.mass, v1_axis_, g_a_.data(), h_.data()); });
  if (!ff.b3_zero)
    term(ff.b3, [&] {
      along(v1.deriv, v1_axis_, g_c_.data(), h_.data());
      along(v1.weighted, v1_axis_, g_a_.data(), h_.data(), -1.0);
    });
  if (visc_x) term(diff->dx, [&] { along(v1.mass, v1_axis_, g_m_.data(), h_.data()); });
  if (visc_v)
    term(cf.mass_x, [&] {
#pragma omp parallel for schedule(static)
      for (std::size_t i = 0; i < nx; ++i) diff->dv.apply(f.data() + i * nv, h_.data() + i * nv);
    });
}

void VlasovOperator::rhs(std::span<const double> f, const FieldFactors& ff,
                         const DiffusionFactors* diff, std::span<double> out) {
  apply_bracket(f, ff, diff, out);
  cf_->phase_solver.solve(out.data());
  for (double& v : out) v = -v;
}

}  // namespace vmfem
