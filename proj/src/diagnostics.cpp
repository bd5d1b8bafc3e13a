#include "vmfem/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "vmfem/simd.hpp"

namespace vmfem {

DiagnosticsRecord measure(const CoupledSystem& sys, std::span<const double> u, double t,
                          double tau, std::size_t step, const ViscosityState* visc) {
  const TensorGrid& g = sys.grid();
  const MarginalWeights& w = sys.weights();
  const MaxwellSolver& mw = sys.maxwell();
  const auto& pc = mw.constants();
  const auto& k = simd::kernels();
  const std::size_t nx = g.nx(), nv = g.nv();
  auto f = sys.f(u);
  auto fl = sys.fields(u);
  DiagnosticsRecord r;
  r.step = step;
  r.time = t;
  r.tau = tau;

  double m = 0, p1 = 0, p2 = 0, ke = 0;
  for (std::size_t i = 0; i < nx; ++i) {
    const double* fi = f.data() + i * nv;
    m += w.x[i] * k.dot(nv, w.v.data(), fi);
    p1 += w.x[i] * k.dot(nv, w.v_moment[0].data(), fi);
    p2 += w.x[i] * k.dot(nv, w.v_moment[1].data(), fi);
    ke += w.x[i] * k.dot(nv, w.v_energy.data(), fi);
  }
  r.mass = m;
  r.momentum1 = pc.mass * p1 + pc.eps0 * mw.cross_integral(1, fl.e2, fl.b3);
  r.momentum2 = pc.mass * p2 - pc.eps0 * mw.cross_integral(0, fl.e1, fl.b3);
  r.kinetic = 0.5 * pc.mass * ke;
  r.e1_energy = mw.electric_energy(0, fl.e1);
  r.e2_energy = mw.electric_energy(1, fl.e2);
  r.b3_energy = mw.magnetic_energy(fl.b3);
  r.electric_energy = r.e1_energy + r.e2_energy;
  r.total_energy = r.kinetic + r.electric_energy + r.b3_energy;

  // fᵀ (M_x ⊗ M_v) f
  std::vector<double> mxf(f.size(), 0.0), tmp(nv);
  sys.factors().mass_x.apply_blocks(f.data(), mxf.data(), nv);
  double l2 = 0;
  for (std::size_t i = 0; i < nx; ++i) {
    std::fill(tmp.begin(), tmp.end(), 0.0);
    sys.velocity_mass().apply(mxf.data() + i * nv, tmp.data());
    l2 += k.dot(nv, tmp.data(), f.data() + i * nv);
  }
  r.l2_squared = l2;

  std::vector<double> rho(nx);
  for (std::size_t i = 0; i < nx; ++i) rho[i] = pc.charge * k.dot(nv, w.v.data(), f.data() + i * nv);
  r.gauss_error = mw.gauss_error(fl, rho, sys.background());
  auto [lo, hi] = std::minmax_element(f.begin(), f.end());
  r.f_min = *lo;
  r.f_max = *hi;
  if (visc) {
    r.nu_x_max = visc->max_x();
    r.nu_v_max = visc->max_v();
    r.residual_clamp = visc->clamp;
  }
  return r;
}

namespace {

struct Column {
  const char* name;
  double DiagnosticsRecord::*field;
};

const Column kColumns[] = {
    {"time", &DiagnosticsRecord::time},
    {"tau", &DiagnosticsRecord::tau},
    {"mass", &DiagnosticsRecord::mass},
    {"momentum1", &DiagnosticsRecord::momentum1},
    {"momentum2", &DiagnosticsRecord::momentum2},
    {"kinetic_energy", &DiagnosticsRecord::kinetic},
    {"e1_energy", &DiagnosticsRecord::e1_energy},
    {"e2_energy", &DiagnosticsRecord::e2_energy},
    {"b3_energy", &DiagnosticsRecord::b3_energy},
    {"electric_energy", &DiagnosticsRecord::electric_energy},
    {"total_energy", &DiagnosticsRecord::total_energy},
    {"l2_squared", &DiagnosticsRecord::l2_squared},
    {"gauss_error", &DiagnosticsRecord::gauss_error},
    {"f_min", &DiagnosticsRecord::f_min},
    {"f_max", &DiagnosticsRecord::f_max},
    {"nu_x_max", &DiagnosticsRecord::nu_x_max},
    {"nu_v_max", &DiagnosticsRecord::nu_v_max},
    {"residual_clamp", &DiagnosticsRecord::residual_clamp},
};

}  // namespace

std::vector<std::string> csv_columns() {
  std::vector<std::string> c{"step"};
  for (const auto& col : kColumns) c.emplace_back(col.name);
  return c;
}

void write_csv_header(std::ostream& os) {
  os << "# vmfem diagnostics schema " << kCsvSchemaVersion << "\n";
  const auto c = csv_columns();
  for (std::size_t i = 0; i < c.size(); ++i) os << (i ? "," : "") << c[i];
  os << "\n";
}

void write_csv_row(std::ostream& os, const DiagnosticsRecord& r) {
  os << r.step << std::setprecision(17);
  for (const auto& col : kColumns) os << "," << r.*(col.field);
  os << "\n";
}

double column_value(const DiagnosticsRecord& r, const std::string& name) {
  if (name == "step") return static_cast<double>(r.step);
  for (const auto& col : kColumns)
    if (name == col.name) return r.*(col.field);
  throw std::invalid_argument("unknown diagnostics column '" + name + "'");
}

namespace {

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx <= 0) throw std::invalid_argument("degenerate time window");
  return sxy / sxx;
}

}  // namespace

double fit_rate(std::span<const double> times, std::span<const double> values, double t0,
                double t1) {
  if (times.size() != values.size()) throw std::invalid_argument("series length mismatch");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t0 || times[i] > t1) continue;
    if (!(values[i] > 0)) throw std::invalid_argument("nonpositive value in fit window");
    x.push_back(times[i]);
    y.push_back(std::log(values[i]));
  }
  if (x.size() < 10) throw std::invalid_argument("fewer than 10 samples in fit window");
  return ls_slope(x, y);
}

EnvelopeFit fit_envelope(std::span<const double> times, std::span<const double> values,
                         double t0, double t1) {
  if (times.size() != values.size()) throw std::invalid_argument("series length mismatch");
  EnvelopeFit e;
  std::vector<double> y;
  for (std::size_t i = 1; i + 1 < times.size(); ++i) {
    if (times[i] < t0 || times[i] > t1) continue;
    if (values[i] > values[i - 1] && values[i] >= values[i + 1] && values[i] > 0) {
      e.peak_times.push_back(times[i]);
      e.peak_values.push_back(values[i]);
      y.push_back(std::log(values[i]));
    }
  }
  e.peaks = y.size();
  if (e.peaks < 3) throw std::invalid_argument("fewer than 3 maxima in fit window");
  e.rate = ls_slope(e.peak_times, y);
  return e;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace vmfem
