#include "vmfem/viscosity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vmfem/operators.hpp"

namespace vmfem {

ViscosityMode parse_viscosity_mode(const std::string& s) {
  if (s == "none") return ViscosityMode::none;
  if (s == "first-order" || s == "first_order") return ViscosityMode::first_order;
  if (s == "conventional") return ViscosityMode::conventional;
  if (s == "novel") return ViscosityMode::novel;
  throw std::invalid_argument("unknown viscosity mode '" + s + "'");
}

std::string mode_name(ViscosityMode m) {
  switch (m) {
    case ViscosityMode::none: return "none";
    case ViscosityMode::first_order: return "first-order";
    case ViscosityMode::conventional: return "conventional";
    case ViscosityMode::novel: return "novel";
  }
  return "?";
}

namespace {

double max_of(const std::vector<std::vector<double>>& a) {
  double m = 0.0;
  for (const auto& v : a)
    for (double x : v) m = std::max(m, x);
  return m;
}

double integral_mean(const CartesianMesh& mesh, std::span<const double> u) {
  auto cg = TensorSpace::continuous(mesh);
  auto m = mass_stencil(cg);
  std::vector<double> one(mesh.size(), 1.0), w(mesh.size(), 0.0);
  m.apply(one.data(), w.data());
  double s = 0.0, vol = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    s += w[i] * u[i];
    vol += w[i];
  }
  return s / vol;
}

}  // namespace

double ViscosityState::max_x() const { return max_of(nu_x); }
double ViscosityState::max_v() const { return max_of(nu_v); }

SupportEnds SupportEnds::build(const CartesianMesh& mesh) {
  SupportEnds s;
  for (std::size_t d = 0; d < mesh.dim(); ++d) {
    const Axis& ax = mesh.axis(d);
    const int k = ax.degree(), nc = ax.cells();
    std::vector<std::vector<double>> e(ax.size());
    auto cell_ends = [&](int c, std::vector<double>& out) {
      out.push_back(ax.lower() + c * ax.h());
      out.push_back(ax.lower() + (c + 1) * ax.h());
    };
    for (std::size_t i = 0; i < ax.size(); ++i) {
      const int c = static_cast<int>(i) / k, a = static_cast<int>(i) % k;
      cell_ends(c, e[i]);
      if (a == 0) cell_ends((c + nc - 1) % nc, e[i]);
    }
    s.ends.push_back(std::move(e));
  }
  return s;
}

std::vector<std::vector<std::size_t>> node_cells(const CartesianMesh& mesh) {
  const std::size_t d = mesh.dim();
  std::vector<std::vector<std::size_t>> out(mesh.size());
  std::vector<std::size_t> idx(d);
  for (std::size_t n = 0; n < mesh.size(); ++n) {
    mesh.unflat(n, idx);
    std::vector<std::size_t> cells{0};
    for (std::size_t e = 0; e < d; ++e) {
      const Axis& ax = mesh.axis(e);
      const std::size_t nc = static_cast<std::size_t>(ax.cells());
      const std::size_t k = static_cast<std::size_t>(ax.degree());
      std::vector<std::size_t> own{idx[e] / k};
      if (idx[e] % k == 0) own.push_back((idx[e] / k + nc - 1) % nc);
      std::vector<std::size_t> next;
      for (std::size_t c : cells)
        for (std::size_t o : own) next.push_back(c * nc + o);
      cells.swap(next);
    }
    out[n] = std::move(cells);
  }
  return out;
}

FieldSamples FieldSamples::build(const MaxwellSolver& mw, ConstFieldView fields,
                                 const std::vector<std::vector<std::size_t>>& cells_of_node) {
  CellQuadValues c1, c2, cb;
  mw.cell_node_values(fields, c1, c2, cb);
  const double qm = mw.constants().charge / mw.constants().mass;
  const std::size_t per_cell = c1.size() / mw.mesh().cell_count();
  FieldSamples s;
  s.offset.push_back(0);
  for (const auto& cells : cells_of_node) {
    for (std::size_t c : cells)
      for (std::size_t a = 0; a < per_cell; ++a) {
        s.e1.push_back(qm * c1[c * per_cell + a]);
        s.e2.push_back(qm * c2[c * per_cell + a]);
        s.b3.push_back(qm * cb[c * per_cell + a]);
      }
    s.offset.push_back(s.e1.size());
  }
  return s;
}

double FieldSamples::max_e() const {
  double m = 0.0;
  for (std::size_t q = 0; q < e1.size(); ++q) m = std::max(m, std::hypot(e1[q], e2[q]));
  return m;
}

double FieldSamples::max_b() const {
  double m = 0.0;
  for (double b : b3) m = std::max(m, std::abs(b));
  return m;
}

namespace {

// max over samples p of node i and ends e of |a_p + s e b_p|
double force_bound(const FieldSamples& fs, std::size_t i, const std::vector<double>& a,
                   double s, const std::vector<double>& ends) {
  double m = 0.0;
  for (std::size_t q = fs.offset[i]; q < fs.offset[i + 1]; ++q)
    for (double e : ends) m = std::max(m, std::abs(a[q] + s * e * fs.b3[q]));
  return m;
}

double abs_bound(const std::vector<double>& ends) {
  double m = 0.0;
  for (double e : ends) m = std::max(m, std::abs(e));
  return m;
}

void check_velocity_dim(const TensorGrid& grid) {
  if (grid.v().dim() != 2) throw std::invalid_argument("viscosity requires two velocity directions");
}

}  // namespace

std::vector<std::vector<double>> first_order_nodal(const TensorGrid& grid,
                                                   const FieldSamples& fs) {
  check_velocity_dim(grid);
  const std::size_t dx = grid.x().dim(), nx = grid.nx(), nv = grid.nv();
  const std::size_t n2 = grid.v().axis(1).size();
  const double k = grid.degree();
  const auto ends = SupportEnds::build(grid.v());
  std::vector<std::vector<double>> eps(dx + 2, std::vector<double>(nx * nv));
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < nv; ++j) {
      const std::size_t j1 = j / n2, j2 = j % n2, l = grid.composite(i, j);
      for (std::size_t d = 0; d < dx; ++d)
        eps[d][l] = 0.5 * grid.x().axis(d).h() / k * abs_bound(ends.ends[d][d == 0 ? j1 : j2]);
      eps[dx][l] = 0.5 * grid.v().axis(0).h() / k * force_bound(fs, i, fs.e1, 1.0, ends.ends[1][j2]);
      eps[dx + 1][l] =
          0.5 * grid.v().axis(1).h() / k * force_bound(fs, i, fs.e2, -1.0, ends.ends[0][j1]);
    }
  return eps;
}

std::pair<std::vector<std::vector<double>>, std::vector<std::vector<double>>> reduce_first_order(
    const TensorGrid& grid, const std::vector<std::vector<double>>& eps) {
  const std::size_t dx = grid.x().dim(), nx = grid.nx(), nv = grid.nv();
  if (eps.size() != dx + grid.v().dim()) throw std::invalid_argument("direction count mismatch");
  std::vector<std::vector<double>> ax(dx, std::vector<double>(nx, 0.0)),
      av(grid.v().dim(), std::vector<double>(nv, 0.0));
  for (std::size_t d = 0; d < eps.size(); ++d)
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < nv; ++j) {
        const double e = eps[d][grid.composite(i, j)];
        if (d < dx)
          ax[d][i] += e / static_cast<double>(nv);
        else
          av[d - dx][j] += e / static_cast<double>(nx);
      }
  return {ax, av};
}

std::pair<std::vector<std::vector<double>>, std::vector<std::vector<double>>> first_order_reduced(
    const TensorGrid& grid, const FieldSamples& fs) {
  check_velocity_dim(grid);
  const std::size_t dx = grid.x().dim(), nx = grid.nx(), nv = grid.nv();
  const std::size_t n1 = grid.v().axis(0).size(), n2 = grid.v().axis(1).size();
  const double k = grid.degree();
  const auto ends = SupportEnds::build(grid.v());
  std::vector<std::vector<double>> ax(dx), av(2, std::vector<double>(nv));
  for (std::size_t d = 0; d < dx; ++d) {
    // β_{x_d} = v_d depends on one velocity index only
    const auto& e = ends.ends[d];
    double s = 0.0;
    for (const auto& en : e) s += abs_bound(en);
    ax[d].assign(nx, 0.5 * grid.x().axis(d).h() / k * s / static_cast<double>(e.size()));
  }
  std::vector<double> m1(n2, 0.0), m2(n1, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t j2 = 0; j2 < n2; ++j2)
    for (std::size_t i = 0; i < nx; ++i) m1[j2] += force_bound(fs, i, fs.e1, 1.0, ends.ends[1][j2]);
#pragma omp parallel for schedule(static)
  for (std::size_t j1 = 0; j1 < n1; ++j1)
    for (std::size_t i = 0; i < nx; ++i) m2[j1] += force_bound(fs, i, fs.e2, -1.0, ends.ends[0][j1]);
  const double c1 = 0.5 * grid.v().axis(0).h() / k / static_cast<double>(nx);
  const double c2 = 0.5 * grid.v().axis(1).h() / k / static_cast<double>(nx);
  for (std::size_t j = 0; j < nv; ++j) {
    av[0][j] = c1 * m1[j % n2];
    av[1][j] = c2 * m2[j / n2];
  }
  return {ax, av};
}

std::vector<double> bdf2(std::span<const double> un, std::span<const double> un1,
                         std::span<const double> un2, double tau_n, double tau_n1) {
  if (!(tau_n > 0 && tau_n1 > 0)) throw std::invalid_argument("BDF2 steps must be positive");
  const double w = tau_n / tau_n1;
  const double a0 = (1 + 2 * w) / (1 + w) / tau_n, a1 = -(1 + w) / tau_n,
               a2 = w * w / (1 + w) / tau_n;
  std::vector<double> d(un.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a0 * un[i] + a1 * un1[i] + a2 * un2[i];
  return d;
}

void MarginalHistory::push(double t, std::vector<double> u_x, std::vector<double> u_v) {
  if (!levels.empty() && levels.back().t == t) levels.pop_back();
  if (!levels.empty() && t < levels.back().t)
    throw std::invalid_argument("history levels must be time-ordered");
  levels.push_back({t, std::move(u_x), std::move(u_v)});
  if (levels.size() > 3) levels.pop_front();
}

MeshProjector::MeshProjector(const CartesianMesh& mesh)
    : mesh_(&mesh),
      cg_(TensorSpace::continuous(mesh)),
      solver_(mass_solver(cg_)),
      w_(mesh.size(), 0.0),
      nq_(field_quadrature_points(mesh.degree())) {
  std::vector<double> one(mesh.size(), 1.0);
  mass_stencil(cg_).apply(one.data(), w_.data());
  for (double v : w_) vol_ += v;
}

double MeshProjector::integral_mean(std::span<const double> u) const {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += w_[i] * u[i];
  return s / vol_;
}

std::vector<double> MeshProjector::residual(std::span<const double> du,
                                            const std::vector<std::vector<double>>& flux,
                                            double& clamp) const {
  auto r = evaluate(cg_, du, nq_);
  for (std::size_t l = 0; l < std::min(flux.size(), mesh_->dim()); ++l) {
    auto d = evaluate(cg_, flux[l], nq_, static_cast<int>(l));
    for (std::size_t q = 0; q < r.size(); ++q) r[q] += d[q];
  }
  for (double& v : r) v = std::abs(v);
  auto out = assemble_load(cg_, nq_, r);
  solver_.solve(out.data());
  for (double& v : out)
    if (v < 0) {
      clamp = std::max(clamp, -v);
      v = 0.0;
    }
  return out;
}

Normalization MeshProjector::normalization(std::span<const double> u) const {
  const CartesianMesh& mesh = *mesh_;
  Normalization n;
  const std::size_t size = mesh.size();
  const double mean = integral_mean(u);
  double dev = 0.0, lo = u[0], hi = u[0];
  for (double v : u) {
    dev = std::max(dev, std::abs(v - mean));
    n.u_inf = std::max(n.u_inf, std::abs(v));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double range = hi - lo;
  n.lambda.assign(size, dev);
  if (range <= 0) return n;
  // support min/max direction by direction (the support is a tensor product)
  std::vector<double> a(u.begin(), u.end()), b(u.begin(), u.end()), ta(size), tb(size);
  std::size_t inner = size;
  for (std::size_t d = 0; d < mesh.dim(); ++d) {
    const Axis& ax = mesh.axis(d);
    const std::size_t nd = ax.size();
    inner /= nd;
    const std::size_t outer = size / (nd * inner);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t i = 0; i < nd; ++i) {
        const auto [s0, s1] = ax.support(i);
        for (std::size_t in = 0; in < inner; ++in) {
          const std::size_t l = (o * nd + i) * inner + in;
          double mn = a[l], mx = b[l];
          for (int s = s0; s <= s1; ++s) {
            const std::size_t j = (i + nd + static_cast<std::size_t>(s + static_cast<int>(nd))) % nd;
            const std::size_t m = (o * nd + j) * inner + in;
            mn = std::min(mn, a[m]);
            mx = std::max(mx, b[m]);
          }
          ta[l] = mn;
          tb[l] = mx;
        }
      }
    std::swap(a, ta);
    std::swap(b, tb);
  }
  for (std::size_t i = 0; i < size; ++i) n.lambda[i] = (1.0 - 0.5 * (b[i] - a[i]) / range) * dev;
  return n;
}

std::vector<double> residual_projection(const CartesianMesh& mesh, std::span<const double> du,
                                        const std::vector<std::vector<double>>& flux,
                                        double& clamp) {
  return MeshProjector(mesh).residual(du, flux, clamp);
}

Normalization normalization(const CartesianMesh& mesh, std::span<const double> u) {
  return MeshProjector(mesh).normalization(u);
}

double guarded_ratio(double r, double lambda, double u_inf) {
  const double den = lambda * lambda + 1e-14 * u_inf * u_inf;
  return den > 0 ? r * lambda / den : 0.0;
}

ViscosityState novel_high_order(const TensorGrid& grid,
                                const std::vector<std::vector<double>>& nu_lx,
                                const std::vector<std::vector<double>>& nu_lv,
                                std::span<const double> r_x, std::span<const double> r_v,
                                const Normalization& n_x, const Normalization& n_v) {
  const double dx = static_cast<double>(grid.x().dim()), dv = static_cast<double>(grid.v().dim());
  const double k = grid.degree();
  ViscosityState s;
  s.mode = ViscosityMode::novel;
  s.residual_based = true;
  auto build = [&](const CartesianMesh& mesh, const std::vector<std::vector<double>>& nu_l,
                   std::span<const double> r, const Normalization& n, double factor) {
    std::vector<std::vector<double>> out;
    for (std::size_t l = 0; l < nu_l.size(); ++l) {
      const double h = mesh.axis(l).h() / k;
      std::vector<double> nu(mesh.size());
      for (std::size_t i = 0; i < nu.size(); ++i)
        nu[i] = std::min(nu_l[l][i], h * h * guarded_ratio(r[i], n.lambda[i], n.u_inf) * factor);
      out.push_back(std::move(nu));
    }
    return out;
  };
  s.nu_x = build(grid.x(), nu_lx, r_x, n_x, dx / (dx + dv));
  s.nu_v = build(grid.v(), nu_lv, r_v, n_v, dv / (dx + dv));
  return s;
}


ConventionalResidual::ConventionalResidual(const TensorGrid& grid, std::size_t size_cap)
    : grid_(&grid) {
  if (grid.size() > size_cap)
    throw std::invalid_argument("grid too large for conventional residual viscosity (" +
                                std::to_string(grid.size()) + " > " + std::to_string(size_cap) +
                                ")");
  mesh_ = CartesianMesh(composite_spec(grid));
}

ViscosityState ConventionalResidual::compute(std::span<const double> fn,
                                             std::span<const double> fn1,
                                             std::span<const double> fn2, double tau_n,
                                             double tau_n1, std::span<const double> advection,
                                             const std::vector<std::vector<double>>& eps_l) const {
  const TensorGrid& g = *grid_;
  auto du = bdf2(fn, fn1, fn2, tau_n, tau_n1);
  for (std::size_t i = 0; i < du.size(); ++i) du[i] += advection[i];
  ViscosityState s;
  s.mode = ViscosityMode::conventional;
  s.residual_based = true;
  auto r = residual_projection(mesh_, du, {}, s.clamp);
  // global normalization ||f - f̄||_∞
  const double mean = integral_mean(mesh_, fn);
  double dev = 0.0, f_inf = 0.0;
  for (double v : fn) {
    dev = std::max(dev, std::abs(v - mean));
    f_inf = std::max(f_inf, std::abs(v));
  }
  const double k = g.degree();
  const std::size_t dx = g.x().dim();
  std::vector<std::vector<double>> nu(eps_l.size(), std::vector<double>(g.size()));
  for (std::size_t d = 0; d < eps_l.size(); ++d) {
    const double h = (d < dx ? g.x().axis(d).h() : g.v().axis(d - dx).h()) / k;
    for (std::size_t l = 0; l < g.size(); ++l)
      nu[d][l] = std::min(eps_l[d][l], h * h * guarded_ratio(r[l], dev, f_inf));
  }
  auto [ax, av] = reduce_first_order(g, nu);
  s.nu_x = std::move(ax);
  s.nu_v = std::move(av);
  return s;
}

ViscosityModel::ViscosityModel(const TensorGrid& grid, const MaxwellSolver& mw,
                               ViscosityMode mode, std::size_t conventional_cap)
    : grid_(&grid), mw_(&mw), mode_(mode), px_(grid.x()), pv_(grid.v()) {
  check_velocity_dim(grid);
  state_.mode = mode;
  if (mode == ViscosityMode::none) return;
  w_ = marginal_weights(grid);
  cells_ = node_cells(grid.x());
  if (mode == ViscosityMode::conventional) conventional_.emplace(grid, conventional_cap);
}

const ViscosityState& ViscosityModel::update(double t, std::span<const double> f,
                                             ConstFieldView fields,
                                             std::span<const double> advection) {
  if (mode_ == ViscosityMode::none) return state_;
  const TensorGrid& g = *grid_;
  samples_ = FieldSamples::build(*mw_, fields, cells_);
  auto [lx, lv] = first_order_reduced(g, samples_);
  ViscosityState first;
  first.mode = mode_;
  first.nu_x = lx;
  first.nu_v = lv;

  if (mode_ == ViscosityMode::first_order) {
    state_ = std::move(first);
    return state_;
  }
  if (mode_ == ViscosityMode::conventional) {
    if (advection.size() != g.size()) throw std::invalid_argument("advection term required");
    if (!f_hist_.empty() && f_hist_.back().first == t) f_hist_.pop_back();
    f_hist_.emplace_back(t, std::vector<double>(f.begin(), f.end()));
    if (f_hist_.size() > 3) f_hist_.pop_front();
    if (f_hist_.size() < 3) {
      state_ = std::move(first);
      return state_;
    }
    auto eps = first_order_nodal(g, samples_);
    state_ = conventional_->compute(f_hist_[2].second, f_hist_[1].second, f_hist_[0].second,
                                    f_hist_[2].first - f_hist_[1].first,
                                    f_hist_[1].first - f_hist_[0].first, advection, eps);
    return state_;
  }

  // novel: marginal conservation laws in x and v
  auto u_x = charge_density(g, w_, f, 1.0);
  auto j_x = current_density(g, w_, f, 1.0);
  std::vector<double> u_v;
  std::vector<std::vector<double>> f_v;
  velocity_marginal(g, w_, f, mw_->moments(fields), u_v, f_v);
  hist_.push(t, u_x, u_v);
  if (!hist_.ready()) {
    state_ = std::move(first);
    return state_;
  }
  const auto& L = hist_.levels;
  const double tn = L[2].t - L[1].t, tn1 = L[1].t - L[0].t;
  double clamp = 0.0;
  auto rx = px_.residual(bdf2(L[2].u_x, L[1].u_x, L[0].u_x, tn, tn1), j_x, clamp);
  auto rv = pv_.residual(bdf2(L[2].u_v, L[1].u_v, L[0].u_v, tn, tn1), f_v, clamp);
  state_ = novel_high_order(g, lx, lv, rx, rv, px_.normalization(u_x), pv_.normalization(u_v));
  state_.clamp = clamp;
  return state_;
}

}  // namespace vmfem
