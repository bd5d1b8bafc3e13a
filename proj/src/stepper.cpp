#include "vmfem/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vmfem/errors.hpp"
#include "vmfem/simd.hpp"

namespace vmfem {

double cfl_dt(double h_min, double beta_max, double lambda, int k, double max_dt) {
  if (!(lambda > 0)) throw std::invalid_argument("CFL number must be positive");
  if (!(h_min > 0) || k < 1) throw std::invalid_argument("invalid mesh size or degree");
  if (!(beta_max > 0)) return max_dt;
  return std::min(max_dt, lambda * h_min / (k * beta_max));
}

void ssprk54_step(std::span<double> u, double tau, const RhsFn& rhs, SsprkWorkspace& ws) {
  const std::size_t n = u.size();
  const auto& k = simd::kernels();
  using C = Ssprk54;
  for (auto* v : {&ws.u0, &ws.u2, &ws.u3, &ws.l, &ws.l3}) v->resize(n);
  double* u0 = ws.u0.data();
  double* u2 = ws.u2.data();
  double* u3 = ws.u3.data();
  double* l = ws.l.data();
  double* l3 = ws.l3.data();
  std::copy(u.begin(), u.end(), u0);
  // stage 1: u <- u0 + a1 τ L(u0)
  rhs(ws.u0, ws.l);
  k.axpy(n, C::a1 * tau, l, u.data());
  // stage 2
  rhs(u, ws.l);
  std::copy(u.begin(), u.end(), u2);
  k.axpby(n, C::b2[0], u0, C::b2[1], u2);
  k.axpy(n, C::b2[2] * tau, l, u2);
  // stage 3
  rhs(ws.u2, ws.l);
  std::copy(u2, u2 + n, u3);
  k.axpby(n, C::b3[0], u0, C::b3[1], u3);
  k.axpy(n, C::b3[2] * tau, l, u3);
  // stage 4: u <- u4
  rhs(ws.u3, ws.l3);
  std::copy(u3, u3 + n, u.data());
  k.axpby(n, C::b4[0], u0, C::b4[1], u.data());
  k.axpy(n, C::b4[2] * tau, l3, u.data());
  // stage 5
  rhs(u, ws.l);
  k.axpby(n, C::c5[0], u2, C::c5[3], u.data());
  k.axpy(n, C::c5[1], u3, u.data());
  k.axpy(n, C::c5[2] * tau, l3, u.data());
  k.axpy(n, C::c5[4] * tau, l, u.data());
}

void forward_euler_step(std::span<double> u, double tau, const RhsFn& rhs,
                        std::vector<double>& ws) {
  ws.resize(u.size());
  rhs(u, ws);
  simd::kernels().axpy(u.size(), tau, ws.data(), u.data());
}

CoupledSystem::CoupledSystem(const TensorGrid& grid, PhysicalConstants pc, bool electrostatic)
    : grid_(&grid),
      pc_(pc),
      electrostatic_(electrostatic),
      cf_(assemble_constant(grid)),
      op_(grid, cf_),
      mw_(grid.x(), pc),
      w_(marginal_weights(grid)),
      mass_v_(vmfem::velocity_mass(cf_)),
      cg_x_(TensorSpace::continuous(grid.x())),
      cg_v_(TensorSpace::continuous(grid.v())),
      stiff_x_(cg_x_, field_quadrature_points(grid.degree())),
      stiff_v_(cg_v_, field_quadrature_points(grid.degree())) {
  double s = 0.0;
  for (std::size_t d = 0; d < grid.v().dim(); ++d) {
    const Axis& a = grid.v().axis(d);
    const double m = std::max(std::abs(a.lower()), std::abs(a.upper()));
    s += m * m;
  }
  v_max_ = std::sqrt(s);
  ff_ = assemble_field_weighted(grid, {}, {}, {});
}

ConstFieldView CoupledSystem::fields(std::span<const double> u) const {
  const std::size_t n = grid_->size(), m = grid_->nx();
  return {u.subspan(n, m), u.subspan(n + m, m), u.subspan(n + 2 * m, m)};
}

FieldView CoupledSystem::fields(std::span<double> u) const {
  const std::size_t n = grid_->size(), m = grid_->nx();
  return {u.subspan(n, m), u.subspan(n + m, m), u.subspan(n + 2 * m, m)};
}

void CoupledSystem::set_viscosity(const ViscosityState& s) {
  visc_ = s;
  has_diffusion_ = s.max_x() > 0 || s.max_v() > 0;
  if (!has_diffusion_) return;
  stiff_x_.assemble(s.nu_x, diff_.dx);
  stiff_v_.assemble(s.nu_v, diff_.dv);
  diff_.dx_zero = !(s.max_x() > 0);
  diff_.dv_zero = !(s.max_v() > 0);
}

void CoupledSystem::field_factors(std::span<const double> u) {
  mw_.quadrature_values(fields(u), q1_, q2_, qb_);
  ff_ = assemble_field_weighted(*grid_, q1_, q2_, qb_);
}

void CoupledSystem::rhs(std::span<const double> u, std::span<double> du) {
  if (u.size() != size() || du.size() != size()) throw std::invalid_argument("state size mismatch");
  field_factors(u);
  auto fu = f(u);
  op_.rhs(fu, ff_, has_diffusion_ ? &diff_ : nullptr, f(du));

  const std::size_t dx = grid_->x().dim();
  auto rho = charge_density(*grid_, w_, fu, pc_.charge);
  auto cur = current_density(*grid_, w_, fu, pc_.charge);
  std::vector<std::vector<double>> load(2);
  for (std::size_t l = 0; l < 2; ++l) {
    if (electrostatic_ && l >= dx) {
      load[l].assign(grid_->nx(), 0.0);
      continue;
    }
    std::span<const double> nu;
    if (l < dx && has_diffusion_ && l < visc_.nu_x.size()) nu = visc_.nu_x[l];
    load[l] = modified_current_load(mw_.e_space(static_cast<int>(l)), cur[l], rho, nu,
                                    static_cast<int>(l));
  }
  mw_.rhs(fields(u), load[0], load[1], fields(du), electrostatic_);
}

void CoupledSystem::advection(std::span<const double> u, std::span<double> out) {
  field_factors(u);
  op_.rhs(f(u), ff_, nullptr, out);
  for (double& v : out) v = -v;
}

double CoupledSystem::beta_max(std::span<const double> u) const {
  CellQuadValues c1, c2, cb;
  mw_.cell_node_values(fields(u), c1, c2, cb);
  double e = 0.0, b = 0.0;
  for (std::size_t q = 0; q < c1.size(); ++q) {
    e = std::max(e, std::hypot(c1[q], c2[q]));
    b = std::max(b, std::abs(cb[q]));
  }
  const double qm = std::abs(pc_.charge / pc_.mass);
  return std::max(v_max_, qm * (e + v_max_ * b));
}

Stepper::Stepper(CoupledSystem& sys, ViscosityModel& visc, StepperOptions opt)
    : sys_(&sys), visc_(&visc), opt_(opt) {
  if (!(opt.cfl > 0) && !(opt.fixed_dt > 0)) throw std::invalid_argument("CFL number must be positive");
}

double Stepper::step(std::vector<double>& u, double& t, double t_final) {
  CoupledSystem& sys = *sys_;
  std::span<const double> adv;
  if (visc_->needs_advection()) {
    adv_.resize(sys.grid().size());
    sys.advection(u, adv_);
    adv = adv_;
  }
  const ViscosityState frozen = visc_->update(t, sys.f(std::span<const double>(u)), sys.fields(std::span<const double>(u)), adv);
  sys.set_viscosity(frozen);

  double tau = opt_.fixed_dt > 0
                   ? opt_.fixed_dt
                   : cfl_dt(sys.grid().h_min(), sys.beta_max(u), opt_.cfl, sys.grid().degree(),
                            opt_.max_dt);
  if (t + tau > t_final) tau = t_final - t;
  if (!(tau > 0)) return 0.0;

  RhsFn rhs = [&](std::span<const double> x, std::span<double> dx) { sys.rhs(x, dx); };
  RhsFn staged = [&](std::span<const double> x, std::span<double> dx) {
    // refresh the first-order caps from the stage fields
    const auto fs = FieldSamples::build(sys.maxwell(), sys.fields(x), node_cells(sys.grid().x()));
    auto [lx, lv] = first_order_reduced(sys.grid(), fs);
    ViscosityState s = frozen;
    auto cap = [&](std::vector<std::vector<double>>& nu, const std::vector<std::vector<double>>& l) {
      if (frozen.mode == ViscosityMode::first_order || !frozen.residual_based) {
        nu = l;
        return;
      }
      for (std::size_t d = 0; d < nu.size(); ++d)
        for (std::size_t i = 0; i < nu[d].size(); ++i) nu[d][i] = std::min(nu[d][i], l[d][i]);
    };
    cap(s.nu_x, lx);
    cap(s.nu_v, lv);
    sys.set_viscosity(s);
    sys.rhs(x, dx);
  };
  const bool per_stage = opt_.viscosity_per_stage && frozen.mode != ViscosityMode::none;
  const RhsFn& f = per_stage ? staged : rhs;
  if (opt_.integrator == StepperOptions::Integrator::forward_euler)
    forward_euler_step(u, tau, f, euler_ws_);
  else
    ssprk54_step(u, tau, f, ws_);
  if (per_stage) sys.set_viscosity(frozen);

  for (double v : u)
    if (!std::isfinite(v)) throw NumericalError("non-finite state after step at t = " + std::to_string(t));
  // land exactly on t_final
  t = (t_final - (t + tau) < 1e-12 * std::max(1.0, std::abs(t_final))) ? t_final : t + tau;
  ++steps_;
  return tau;
}

std::size_t Stepper::advance(std::vector<double>& u, double& t, double t_final,
                             const Observer& obs, std::size_t max_steps) {
  std::size_t n = 0;
  if (obs) obs({0, t, 0.0, &sys_->viscosity()}, u);
  while (t < t_final && n < max_steps) {
    const double tau = step(u, t, t_final);
    if (tau <= 0) break;
    ++n;
    if (obs) obs({n, t, tau, &sys_->viscosity()}, u);
  }
  return n;
}

}  // namespace vmfem
