#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"
#include "vmfem/viscosity.hpp"

using namespace vmfem;

namespace {

DomainSpec box(std::vector<double> lo, std::vector<double> hi, std::vector<int> cells, int k) {
  DomainSpec s;
  s.lower = lo;
  s.upper = hi;
  s.cells = cells;
  s.degree = k;
  s.periodic.assign(lo.size(), true);
  return s;
}

FieldSamples zero_samples(const TensorGrid& g) {
  MaxwellSolver mw(g.x());
  std::vector<double> z(g.nx(), 0.0);
  return FieldSamples::build(mw, {z, z, z}, node_cells(g.x()));
}

}  // namespace

TEST_CASE("first-order nodal viscosity formula") {
  for (int k : {1, 2}) {
    // Δx = 0.1, |v| up to 2
    auto g = build_grid(box({0}, {1}, {10}, k), box({-2, -2}, {2, 2}, {4, 4}, k));
    auto eps = first_order_nodal(g, zero_samples(g));
    REQUIRE(eps.size() == 3);
    // v-node 0 sits at v1 = -2
    CHECK(eps[0][g.composite(3, 0)] == doctest::Approx(0.1 / k));
    for (double e : eps[1]) CHECK(e == 0.0);
    for (double e : eps[2]) CHECK(e == 0.0);
  }
}

TEST_CASE("first-order v-viscosity against a piecewise-constant field oracle") {
  // k = 1: E1, B3 constant per cell, E2 linear, so nodal samples give exact maxima
  std::mt19937_64 rng(4);
  const int cells = 6;
  auto g = build_grid(box({0}, {3}, {cells}, 1), box({-1.5, -1}, {1.5, 2}, {3, 6}, 1));
  PhysicalConstants pc{1.0, 1.0, 1.0, 0.5};
  MaxwellSolver mw(g.x(), pc);
  const std::size_t nx = g.nx();
  auto e1 = oracle::random_vector(nx, rng), e2 = oracle::random_vector(nx, rng),
       b3 = oracle::random_vector(nx, rng);
  auto fs = FieldSamples::build(mw, {e1, e2, b3}, node_cells(g.x()));
  auto eps = first_order_nodal(g, fs);
  const double qm = 2.0;
  const double hv1 = 1.0, hv2 = 0.5;
  const std::size_t n2 = g.v().axis(1).size();
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < g.nv(); ++j) {
      const std::size_t j1 = j / n2, j2 = j % n2;
      const double v1 = -1.5 + j1 * hv1, v2 = -1 + j2 * hv2;
      double m1 = 0, m2 = 0;
      for (std::size_t c : {(i + cells - 1) % cells, i}) {
        // DG Q0 node c is cell c; CG node values at both ends of cell c
        // the wrapped neighbour cell of the first node is [upper - h, upper]
        std::vector<double> w2s{v2, v2 + hv2}, w1s{v1, v1 + hv1};
        w2s.push_back(j2 == 0 ? 2.0 - hv2 : v2 - hv2);
        w1s.push_back(j1 == 0 ? 1.5 - hv1 : v1 - hv1);
        if (j2 == 0) w2s.push_back(2.0);
        if (j1 == 0) w1s.push_back(1.5);
        for (double w2 : w2s) m1 = std::max(m1, std::abs(qm * (e1[c] + w2 * b3[c])));
        for (std::size_t node : {c, (c + 1) % cells})
          for (double w1 : w1s) m2 = std::max(m2, std::abs(qm * (e2[node] - w1 * b3[c])));
      }
      CHECK(eps[1][g.composite(i, j)] == doctest::Approx(0.5 * hv1 * m1));
      CHECK(eps[2][g.composite(i, j)] == doctest::Approx(0.5 * hv2 * m2));
    }
}

TEST_CASE("reduction to x-only and v-only fields") {
  std::mt19937_64 rng(9);
  auto g = build_grid(box({0, 0}, {1, 1}, {2, 3}, 1), box({-1, -1}, {1, 1}, {3, 2}, 1));
  const std::size_t nx = g.nx(), nv = g.nv();
  std::vector<std::vector<double>> eps(4);
  for (auto& e : eps) e = oracle::random_vector(nx * nv, rng, 0.0, 1.0);
  auto [ax, av] = reduce_first_order(g, eps);
  for (std::size_t d = 0; d < 2; ++d) {
    for (std::size_t i = 0; i < nx; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < nv; ++j) s += eps[d][i * nv + j];
      CHECK(ax[d][i] == doctest::Approx(s / nv));
    }
    for (std::size_t j = 0; j < nv; ++j) {
      double s = 0;
      for (std::size_t i = 0; i < nx; ++i) s += eps[2 + d][i * nv + j];
      CHECK(av[d][j] == doctest::Approx(s / nx));
    }
  }
  // constant and separable inputs
  std::vector<std::vector<double>> c(4, std::vector<double>(nx * nv, 0.3));
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < nv; ++j) c[0][i * nv + j] = 0.1 * i;
  auto [cx, cv] = reduce_first_order(g, c);
  for (std::size_t i = 0; i < nx; ++i) {
    CHECK(cx[0][i] == doctest::Approx(0.1 * i));
    CHECK(cx[1][i] == doctest::Approx(0.3));
  }
  for (double v : cv[1]) CHECK(v == doctest::Approx(0.3));
}

TEST_CASE("fast reduced first-order path equals the nodal path") {
  std::mt19937_64 rng(2);
  for (int dx : {1, 2})
    for (int k : {1, 2}) {
      auto g = dx == 1 ? build_grid(box({0}, {2}, {5}, k), box({-3, -2}, {3, 2}, {4, 3}, k))
                       : build_grid(box({0, 0}, {2, 1}, {3, 2}, k), box({-3, -3}, {3, 3}, {3, 4}, k));
      MaxwellSolver mw(g.x());
      const std::size_t nx = g.nx();
      auto e1 = oracle::random_vector(nx, rng), e2 = oracle::random_vector(nx, rng),
           b3 = oracle::random_vector(nx, rng);
      auto fs = FieldSamples::build(mw, {e1, e2, b3}, node_cells(g.x()));
      auto [ax, av] = reduce_first_order(g, first_order_nodal(g, fs));
      auto [bx, bv] = first_order_reduced(g, fs);
      for (std::size_t d = 0; d < ax.size(); ++d) CHECK(oracle::max_abs_diff(ax[d], bx[d]) < 1e-14);
      for (std::size_t d = 0; d < 2; ++d) CHECK(oracle::max_abs_diff(av[d], bv[d]) < 1e-14);
    }
}

TEST_CASE("BDF2") {
  std::vector<double> t{0.0, 0.3, 0.5};
  auto at = [&](auto fn) {
    return std::vector<std::vector<double>>{{fn(t[2])}, {fn(t[1])}, {fn(t[0])}};
  };
  auto d = [&](auto fn, double tn, double tn1) {
    auto u = at(fn);
    return bdf2(u[0], u[1], u[2], tn, tn1)[0];
  };
  CHECK(std::abs(d([](double) { return 4.0; }, 0.2, 0.3)) < 1e-13);
  CHECK(d([](double s) { return s; }, 0.2, 0.3) == doctest::Approx(1.0));
  CHECK(d([](double s) { return s * s; }, 0.2, 0.3) == doctest::Approx(1.0));  // variable steps
  t = {0.2, 0.4, 0.6};
  CHECK(d([](double s) { return s * s; }, 0.2, 0.2) == doctest::Approx(1.2));
  // uniform weights 3/2, -2, 1/2
  std::vector<double> a{1}, b{0}, c{0};
  CHECK(bdf2(a, b, c, 0.5, 0.5)[0] == doctest::Approx(3.0));
  CHECK_THROWS_AS(bdf2(a, b, c, 0.0, 0.5), std::invalid_argument);
}

TEST_CASE("marginal history") {
  MarginalHistory h;
  h.push(0.0, {1}, {1});
  h.push(0.1, {2}, {2});
  h.push(0.1, {3}, {3});
  CHECK(h.levels.size() == 2);
  CHECK(h.levels.back().u_x[0] == 3);
  h.push(0.2, {4}, {4});
  h.push(0.3, {5}, {5});
  CHECK(h.ready());
  CHECK(h.levels.front().t == 0.1);
  CHECK_THROWS_AS(h.push(0.25, {0}, {0}), std::invalid_argument);
}

TEST_CASE("residual projection") {
  const int cells = 6, k = 1;
  const double L = 2 * std::numbers::pi;
  CartesianMesh m(box({0}, {L}, {cells}, k));
  const std::size_t n = m.size();
  double clamp = 0;
  // u = t: R = 1
  std::vector<double> one(n, 1.0), zero(n, 0.0);
  auto r = residual_projection(m, one, {zero}, clamp);
  for (double v : r) CHECK(v == doctest::Approx(1.0));
  // steady state with constant flux
  r = residual_projection(m, zero, {std::vector<double>(n, 3.0)}, clamp);
  for (double v : r) CHECK(std::abs(v) < 1e-12);

  // positive integrand: dense oracle with a hand-built P1 mass matrix
  const double h = L / cells;
  std::vector<double> du(n), fl(n);
  for (std::size_t i = 0; i < n; ++i) {
    du[i] = 2.0 + std::sin(i * h);
    fl[i] = 0.3 * std::cos(i * h);
  }
  r = residual_projection(m, du, {fl}, clamp);
  oracle::Dense M(n, n);
  std::vector<double> load(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t a = c, b = (c + 1) % n;
    M(a, a) += h / 3;
    M(b, b) += h / 3;
    M(a, b) += h / 6;
    M(b, a) += h / 6;
    const double slope = (fl[b] - fl[a]) / h;
    auto integrand = [&](double x, int which) {
      const double t = (x - c * h) / h;
      const double val = std::abs(du[a] * (1 - t) + du[b] * t + slope);
      return val * (which == 0 ? 1 - t : t);
    };
    load[a] += oracle::integrate([&](double x) { return integrand(x, 0); }, c * h, (c + 1) * h, 4);
    load[b] += oracle::integrate([&](double x) { return integrand(x, 1); }, c * h, (c + 1) * h, 4);
  }
  auto ref = oracle::solve(M, load);
  CHECK(oracle::max_abs_diff(r, ref) < 1e-12);

  // sign changes: values are clamped and the clamp is reported
  // |u| with a kink inside one cell is not piecewise linear; its projection has negative tails
  std::vector<double> osc(n, 0.0);
  osc[0] = -1.0;
  osc[1] = 1.0;
  clamp = 0;
  r = residual_projection(m, osc, {zero}, clamp);
  for (double v : r) CHECK(v >= 0.0);
  CHECK(clamp > 0.0);
}

TEST_CASE("normalization and guarded ratio") {
  CartesianMesh m(box({0}, {8}, {8}, 1));
  std::vector<double> c(8, 2.0);
  auto n = normalization(m, c);
  for (double v : n.lambda) CHECK(v == 0.0);
  CHECK(guarded_ratio(0.0, 0.0, 2.0) == 0.0);
  CHECK(guarded_ratio(1.0, 0.0, 2.0) == 0.0);
  CHECK(guarded_ratio(1.0, 0.0, 0.0) == 0.0);
  // two-level step: mean 0.5, ||u - ū|| = 0.5, range 1
  std::vector<double> s{0, 0, 0, 0, 1, 1, 1, 1};
  n = normalization(m, s);
  const std::vector<double> local{1, 0, 0, 1, 1, 0, 0, 1};  // wraps at both ends
  for (std::size_t i = 0; i < 8; ++i) CHECK(n.lambda[i] == doctest::Approx((1 - 0.5 * local[i]) * 0.5));
  CHECK(n.u_inf == 1.0);
  CHECK(guarded_ratio(2.0, 0.5, 1.0) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("novel high-order viscosity caps and scaling") {
  auto g = build_grid(box({0}, {1}, {4}, 1), box({-1, -1}, {1, 1}, {4, 4}, 1));
  const std::size_t nx = g.nx(), nv = g.nv();
  std::vector<std::vector<double>> lx(1, std::vector<double>(nx, 0.5)), lv(2, std::vector<double>(nv, 0.5));
  Normalization nxn{std::vector<double>(nx, 1.0), 1.0}, nvn{std::vector<double>(nv, 1.0), 1.0};
  std::vector<double> rz(nx, 0.0), rzv(nv, 0.0);
  auto s = novel_high_order(g, lx, lv, rz, rzv, nxn, nvn);
  CHECK(s.max_x() == 0.0);
  CHECK(s.max_v() == 0.0);
  std::vector<double> big(nx, 1e8), bigv(nv, 1e8);
  s = novel_high_order(g, lx, lv, big, bigv, nxn, nvn);
  for (double v : s.nu_x[0]) CHECK(v == 0.5);
  for (double v : s.nu_v[1]) CHECK(v == 0.5);
  std::vector<double> r1(nx, 1.0), r1v(nv, 1.0);
  s = novel_high_order(g, lx, lv, r1, r1v, nxn, nvn);
  // Δx = 0.25, Δv = 0.5, factors 1/3 and 2/3
  CHECK(s.nu_x[0][0] == doctest::Approx(0.0625 / 3).epsilon(1e-12));
  CHECK(s.nu_v[0][0] == doctest::Approx(0.25 * 2 / 3).epsilon(1e-12));
  CHECK(s.residual_based);
}

TEST_CASE("conventional residual viscosity") {
  auto g = build_grid(box({0}, {1}, {4}, 1), box({-1, -1}, {1, 1}, {4, 4}, 1));
  std::mt19937_64 rng(6);
  auto f0 = oracle::random_vector(g.size(), rng, 0.0, 1.0);
  // f linear in t with slope 1, no advection: R = 1
  std::vector<double> f1(f0), f2(f0), adv(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    f1[i] += 0.1;
    f2[i] += 0.3;
  }
  std::vector<std::vector<double>> eps(3, std::vector<double>(g.size(), 10.0));
  ConventionalResidual cr(g, 1000);
  auto s = cr.compute(f2, f1, f0, 0.2, 0.1, adv, eps);
  double mean = 0, dev = 0;
  for (double v : f2) mean += v;
  mean /= g.size();  // uniform weights on a periodic equispaced Q1 mesh
  for (double v : f2) dev = std::max(dev, std::abs(v - mean));
  CHECK(s.nu_x[0][0] == doctest::Approx(0.0625 / dev).epsilon(1e-10));
  CHECK(s.nu_v[0][0] == doctest::Approx(0.25 / dev).epsilon(1e-10));
  // cap
  eps.assign(3, std::vector<double>(g.size(), 1e-3));
  s = cr.compute(f2, f1, f0, 0.2, 0.1, adv, eps);
  CHECK(s.max_x() == doctest::Approx(1e-3));
  CHECK_THROWS_AS(ConventionalResidual(g, 10), std::invalid_argument);
}

TEST_CASE("viscosity model modes") {
  auto g = build_grid(box({0}, {4 * std::numbers::pi}, {8}, 1), box({-4, -4}, {4, 4}, {8, 8}, 1));
  MaxwellSolver mw(g.x());
  const std::size_t nx = g.nx();
  std::vector<double> e1(nx), e2(nx, 0.0), b3(nx, 0.0);
  for (std::size_t i = 0; i < nx; ++i) e1[i] = 0.2 * std::sin(0.5 * mw.mesh().coordinate(i, 0));
  std::vector<double> f(g.size());
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < g.nv(); ++j) {
      const double x = g.x().coordinate(i, 0), v1 = g.v().coordinate(j, 0), v2 = g.v().coordinate(j, 1);
      f[g.composite(i, j)] = (1 + 0.5 * std::cos(0.5 * x)) * std::exp(-0.5 * (v1 * v1 + v2 * v2));
    }
  ViscosityModel none(g, mw, ViscosityMode::none);
  auto s = none.update(0.0, f, {e1, e2, b3});
  CHECK(s.nu_x.empty());
  CHECK(s.nu_v.empty());

  ViscosityModel fo(g, mw, ViscosityMode::first_order);
  s = fo.update(0.0, f, {e1, e2, b3});
  auto [lx, lv] = first_order_reduced(g, fo.samples());
  CHECK(oracle::max_abs_diff(s.nu_x[0], lx[0]) == 0.0);
  CHECK(s.max_v() > 0.0);

  ViscosityModel nov(g, mw, ViscosityMode::novel);
  std::vector<double> ft(f);
  for (int n = 0; n < 3; ++n) {
    for (std::size_t q = 0; q < f.size(); ++q) ft[q] = f[q] * (1 + 0.01 * n);
    s = nov.update(0.1 * n, ft, {e1, e2, b3});
    CHECK(s.residual_based == (n == 2));
  }
  for (std::size_t i = 0; i < nx; ++i) CHECK(s.nu_x[0][i] <= lx[0][i]);
  for (std::size_t j = 0; j < g.nv(); ++j) {
    CHECK(s.nu_v[0][j] <= lv[0][j]);
    CHECK(s.nu_v[1][j] >= 0.0);
  }
  CHECK(s.max_x() > 0.0);
  CHECK_THROWS_AS(parse_viscosity_mode("upwind"), std::invalid_argument);
  CHECK(parse_viscosity_mode(mode_name(ViscosityMode::first_order)) == ViscosityMode::first_order);
}
