#include "vmfem/maxwell.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vmfem/operators.hpp"

namespace vmfem {

namespace {

std::vector<SpaceKind> e_kinds(std::size_t dim, std::size_t l) {
  std::vector<SpaceKind> k(dim, SpaceKind::cg);
  if (l < dim) k[l] = SpaceKind::dg;
  return k;
}

// values of d/dx of the CG basis at the DG nodes of the same cell
PeriodicStencil strong_derivative(const Axis& ax) {
  AxisSpace cg(ax, SpaceKind::cg), dg(ax, SpaceKind::dg);
  const int k = ax.degree();
  PeriodicStencil d({ax.size()}, k);
  for (int c = 0; c < ax.cells(); ++c)
    for (int a = 0; a < k; ++a) {
      auto b = lagrange_eval(cg.ref_nodes(), dg.ref_nodes()[a]);
      for (int m = 0; m <= k; ++m)
        d.add(dg.global(static_cast<std::size_t>(c), a), static_cast<std::size_t>(m - a + k),
              b.derivatives[m] / ax.h());
    }
  d.finalize();
  return d;
}

double bilinear(const PeriodicStencil& s, std::span<const double> a, std::span<const double> b) {
  std::vector<double> t(a.size(), 0.0);
  s.apply(b.data(), t.data());
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r += a[i] * t[i];
  return r;
}

}  // namespace

MaxwellSolver::MaxwellSolver(const CartesianMesh& x, PhysicalConstants pc)
    : mesh_(&x),
      pc_(pc),
      cg_(TensorSpace::continuous(x)),
      b_space_(x, std::vector<SpaceKind>(x.dim(), SpaceKind::dg)) {
  if (x.dim() < 1 || x.dim() > 2) throw std::invalid_argument("Maxwell solver supports 1D and 2D");
  if (!(pc.c > 0 && pc.eps0 > 0 && pc.mass > 0))
    throw std::invalid_argument("physical constants must be positive");
  const std::size_t d = x.dim();
  const int k = x.degree();
  const int nq = field_quadrature_points(k);
  for (std::size_t l = 0; l < 2; ++l) e_spaces_.emplace_back(x, e_kinds(d, l));
  for (std::size_t l = 0; l < 2; ++l) {
    e_mass_.push_back(mass_stencil(e_spaces_[l]));
    e_mass_solvers_.push_back(mass_solver(e_spaces_[l]));
    cg_e_.push_back(assemble_form(cg_, e_spaces_[l], nq, -1, -1));
    e_b_.push_back(assemble_form(e_spaces_[l], b_space_, nq, -1, -1));
  }
  b_mass_ = mass_stencil(b_space_);
  cg_mass_ = mass_stencil(cg_);
  cg_b_ = assemble_form(cg_, b_space_, nq, -1, -1);
  for (std::size_t l = 0; l < d; ++l) {
    d_strong_.push_back(strong_derivative(x.axis(l)));
    grad_.push_back(assemble_form(cg_, e_spaces_[l], nq, static_cast<int>(l), -1));
  }
  // E2 tests (B3, ∂_1 η2); in 2D E1 tests -(B3, ∂_2 η1)
  curl_.push_back(assemble_form(e_spaces_[1], b_space_, nq, 0, -1));
  if (d == 2) curl_.push_back(assemble_form(e_spaces_[0], b_space_, nq, 1, -1));

  stiffness_ = assemble_diffusion(x, std::vector<std::vector<double>>(d, std::vector<double>(x.size(), 1.0)));
  stiffness_.scale(pc_.eps0);
  std::vector<double> one(x.size(), 1.0);
  cg_weights_.assign(x.size(), 0.0);
  cg_mass_.apply(one.data(), cg_weights_.data());
  if (d == 1) {
    const std::size_t n = x.size();
    auto dense = stiffness_.to_csr().to_dense();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) dense[i * n + j] += cg_weights_[i] * cg_weights_[j];
    poisson_direct_ = FactoredSPD::from_dense(n, dense);
  }
}

void MaxwellSolver::rhs(ConstFieldView f, const std::vector<double>& load_e1,
                        const std::vector<double>& load_e2, FieldView out,
                        bool electrostatic) const {
  const std::size_t n = size();
  const std::vector<std::size_t>& dims = mesh_->dims();
  const double c2 = pc_.c * pc_.c;
  std::fill(out.b3.begin(), out.b3.end(), 0.0);
  // E1
  for (std::size_t i = 0; i < n; ++i) out.e1[i] = -load_e1[i] / pc_.eps0;
  if (dim() == 2 && !electrostatic) curl_[1].apply(f.b3.data(), out.e1.data(), -c2);
  e_mass_solvers_[0].solve(out.e1.data());
  if (electrostatic) {
    std::fill(out.e2.begin(), out.e2.end(), 0.0);
    if (dim() == 2) {
      for (std::size_t i = 0; i < n; ++i) out.e2[i] = -load_e2[i] / pc_.eps0;
      e_mass_solvers_[1].solve(out.e2.data());
    }
    return;
  }
  for (std::size_t i = 0; i < n; ++i) out.e2[i] = -load_e2[i] / pc_.eps0;
  curl_[0].apply(f.b3.data(), out.e2.data(), c2);
  e_mass_solvers_[1].solve(out.e2.data());
  // Faraday: dB3/dt = -(∂_1 E2 - ∂_2 E1)
  apply_along_axis(d_strong_[0], dims, 0, f.e2.data(), out.b3.data(), -1.0);
  if (dim() == 2) apply_along_axis(d_strong_[1], dims, 1, f.e1.data(), out.b3.data(), 1.0);
}

std::vector<std::vector<double>> MaxwellSolver::poisson_init(std::span<const double> rho,
                                                             double rho0) const {
  const std::size_t n = size();
  if (rho.size() != n) throw std::invalid_argument("charge density size mismatch");
  std::vector<double> r(n), b(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) r[i] = rho[i] - rho0;
  cg_mass_.apply(r.data(), b.data());
  std::vector<double> phi;
  if (dim() == 1) {
    phi = poisson_direct_.solve(b);
  } else {
    LinearMap op = [&](std::span<const double> in, std::span<double> y) {
      stiffness_.apply(in.data(), y.data(), 1.0, false);
    };
    CgOptions opt;
    opt.kernel_weights = cg_weights_;
    const std::vector<int> zero(dim(), 0);
    const double* diag = stiffness_.coeffs(stiffness_.offset_index(zero));
    opt.jacobi.assign(diag, diag + n);
    phi = cg_solve(op, b, 1e-14, static_cast<int>(20 * n), opt).x;
  }
  std::vector<std::vector<double>> e(2, std::vector<double>(n, 0.0));
  for (std::size_t l = 0; l < dim(); ++l)
    apply_along_axis(d_strong_[l], mesh_->dims(), l, phi.data(), e[l].data(), -1.0);
  return e;
}

std::vector<double> MaxwellSolver::gauss_residual(ConstFieldView f, std::span<const double> rho,
                                                  double rho0) const {
  const std::size_t n = size();
  std::vector<double> r(n), g(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) r[i] = rho[i] - rho0;
  cg_mass_.apply(r.data(), g.data());
  grad_[0].apply(f.e1.data(), g.data(), pc_.eps0);
  if (dim() == 2) grad_[1].apply(f.e2.data(), g.data(), pc_.eps0);
  return g;
}

double MaxwellSolver::gauss_error(ConstFieldView f, std::span<const double> rho,
                                  double rho0) const {
  auto g = gauss_residual(f, rho, rho0);
  double s = 0.0;
  for (double v : g) s += v * v;
  return std::sqrt(s);
}

double MaxwellSolver::electric_energy(int l, std::span<const double> e) const {
  return 0.5 * pc_.eps0 * bilinear(e_mass_[l], e, e);
}

double MaxwellSolver::magnetic_energy(std::span<const double> b) const {
  return 0.5 * pc_.c * pc_.c * pc_.eps0 * bilinear(b_mass_, b, b);
}

double MaxwellSolver::cross_integral(int l, std::span<const double> e,
                                     std::span<const double> b) const {
  return bilinear(e_b_[l], e, b);
}

void MaxwellSolver::quadrature_values(ConstFieldView f, CellQuadValues& e1, CellQuadValues& e2,
                                      CellQuadValues& b3) const {
  const int nq = field_quadrature_points(mesh_->degree());
  const double qm = pc_.charge / pc_.mass;
  auto eval = [&](const TensorSpace& s, std::span<const double> u, CellQuadValues& out) {
    if (std::all_of(u.begin(), u.end(), [](double v) { return v == 0.0; })) {
      out.clear();
      return;
    }
    out = evaluate(s, u, nq);
    if (qm != 1.0)
      for (double& v : out) v *= qm;
  };
  eval(e_spaces_[0], f.e1, e1);
  eval(e_spaces_[1], f.e2, e2);
  eval(b_space_, f.b3, b3);
}

FieldMoments MaxwellSolver::moments(ConstFieldView f) const {
  const double qm = pc_.charge / pc_.mass;
  FieldMoments m;
  auto mom = [&](const PeriodicStencil& s, std::span<const double> u, std::vector<double>& out) {
    if (std::all_of(u.begin(), u.end(), [](double v) { return v == 0.0; })) return;
    out.assign(size(), 0.0);
    s.apply(u.data(), out.data(), qm);
  };
  mom(cg_e_[0], f.e1, m.e1);
  mom(cg_e_[1], f.e2, m.e2);
  mom(cg_b_, f.b3, m.b3);
  return m;
}

void MaxwellSolver::cell_node_values(ConstFieldView f, CellQuadValues& e1, CellQuadValues& e2,
                                     CellQuadValues& b3) const {
  const auto& pts = mesh_->axis(0).ref_nodes();
  e1 = evaluate_points(e_spaces_[0], f.e1, pts);
  e2 = evaluate_points(e_spaces_[1], f.e2, pts);
  b3 = evaluate_points(b_space_, f.b3, pts);
}

}  // namespace vmfem
