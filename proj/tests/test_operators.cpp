#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"
#include "phase_oracle.hpp"
#include "vmfem/operators.hpp"

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

oracle::Box obox(const DomainSpec& s) {
  return {s.lower, s.upper, s.cells, s.degree};
}

std::vector<double> dense_of(const PeriodicStencil& s) { return s.to_csr().to_dense(); }

double quad_form(const PeriodicStencil& s, const std::vector<double>& f) {
  std::vector<double> y(f.size(), 0.0);
  s.apply(f.data(), y.data());
  double r = 0;
  for (std::size_t i = 0; i < f.size(); ++i) r += f[i] * y[i];
  return r;
}

}  // namespace

TEST_CASE("constant factors") {
  auto g = build_grid(box({0}, {2}, {8}, 1), box({-1, -1}, {1, 1}, {6, 4}, 1));
  auto cf = assemble_constant(g);
  std::vector<double> one(g.nx(), 1.0), r(g.nx(), 0.0);
  cf.mass_x.apply(one.data(), r.data());
  for (double v : r) CHECK(v == doctest::Approx(0.25));
  std::fill(r.begin(), r.end(), 0.0);
  cf.deriv_x[0].apply(one.data(), r.data());
  for (double v : r) CHECK(std::abs(v) < 1e-14);
  auto c1 = velocity_weighted(cf, 0).to_csr();
  double tot = 0;
  for (double v : c1.val) tot += v;
  CHECK(std::abs(tot) < 1e-14);
  // the x-mass is SPD and A^x is skew
  auto a = dense_of(cf.deriv_x[0]);
  auto n = g.nx();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(a[i * n + j] + a[j * n + i]) < 1e-14);
}

TEST_CASE("field-weighted x matrices") {
  for (int k : {1, 2}) {
    const double theta = 0.5;
    const double L = 2 * std::numbers::pi / theta;
    auto g = build_grid(box({0}, {L}, {6}, k), box({-1, -1}, {1, 1}, {2, 2}, k));
    auto cf = assemble_constant(g);
    const int nq = field_quadrature_points(k);
    auto zero = assemble_field_weighted(g, {}, {}, {});
    CHECK(zero.e1_zero);
    for (double v : dense_of(zero.e1)) CHECK(v == 0.0);
    auto two = evaluate_closure(g.x(), nq, [](std::span<const double>) { return 2.0; });
    auto f2 = assemble_field_weighted(g, two, {}, {});
    auto d2 = dense_of(f2.e1), dm = dense_of(cf.mass_x);
    for (std::size_t q = 0; q < dm.size(); ++q) CHECK(std::abs(d2[q] - 2 * dm[q]) < 1e-14);

    // E1 = sin(theta x), high-order oracle; quadrature of the library is only
    // exact for polynomial weights, so compare with the field interpolated in Q_k
    auto xs = TensorSpace::continuous(g.x());
    auto e = interpolate(xs, [&](std::span<const double> p) { return std::sin(theta * p[0]); });
    auto fe = assemble_field_weighted(g, evaluate(xs, e, nq), {}, {});
    auto ob = obox(g.x().spec());
    const std::size_t n = g.nx();
    const double h = L / 6;
    auto de = dense_of(fe.e1);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        // ∫ E φ_j φ_i by composite Gauss over the whole period
        auto phi = [&](std::size_t node, double x) {
          std::vector<double> u(n, 0.0);
          u[node] = 1.0;
          return oracle::fe_value(ob, u, {x});
        };
        double ref = 0;
        for (int c = 0; c < 6; ++c)
          ref += oracle::integrate(
              [&](double x) { return oracle::fe_value(ob, e, {x}) * phi(j, x) * phi(i, x); },
              c * h, (c + 1) * h, 1);
        CHECK(std::abs(de[i * n + j] - ref) < 1e-13);
      }
  }
}

TEST_CASE("diffusion matrices") {
  auto g = build_grid(box({0}, {1}, {10}, 1), box({-1, -1}, {1, 1}, {4, 4}, 1));
  const std::size_t n = g.nx();
  auto d0 = assemble_diffusion(g.x(), {std::vector<double>(n, 0.0)});
  for (double v : dense_of(d0)) CHECK(v == 0.0);
  auto d1 = dense_of(assemble_diffusion(g.x(), {std::vector<double>(n, 1.0)}));
  const double h = 0.1;
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(d1[i * n + i] == doctest::Approx(2 / h));
    CHECK(d1[i * n + (i + 1) % n] == doctest::Approx(-1 / h));
    CHECK(d1[i * n + (i + n - 1) % n] == doctest::Approx(-1 / h));
  }
  CHECK_THROWS_AS(assemble_diffusion(g.x(), {std::vector<double>(n, -1.0)}),
                  std::invalid_argument);

  std::mt19937_64 rng(21);
  for (int k : {1, 2, 3}) {
    auto gk = build_grid(box({0, 0}, {1, 2}, {3, 4}, k), box({-1, -1}, {1, 1}, {3, 5}, k));
    auto nu1 = oracle::random_vector(gk.nv(), rng, 0.0, 1.0);
    auto nu2 = oracle::random_vector(gk.nv(), rng, 0.0, 2.0);
    auto dv = assemble_diffusion(gk.v(), {nu1, nu2});
    auto dd = dense_of(dv);
    const std::size_t m = gk.nv();
    double dmax = 0;
    for (double v : dd) dmax = std::max(dmax, std::abs(v));
    for (std::size_t i = 0; i < m; ++i) {
      double rs = 0, cs = 0;
      for (std::size_t j = 0; j < m; ++j) {
        rs += dd[i * m + j];
        cs += dd[j * m + i];
      }
      CHECK(std::abs(rs) <= 1e-12 * dmax);
      CHECK(std::abs(cs) <= 1e-12 * dmax);
    }
    for (int t = 0; t < 100; ++t) {
      auto f = oracle::random_vector(m, rng);
      CHECK(quad_form(dv, f) >= -1e-12);
    }
  }
}

TEST_CASE("vlasov rhs annihilates constants and conserves mass") {
  auto g = build_grid(box({0}, {4}, {5}, 2), box({-3, -3}, {3, 3}, {4, 4}, 2));
  auto cf = assemble_constant(g);
  VlasovOperator op(g, cf);
  std::vector<double> f(g.size(), 0.7), out(g.size());
  auto ff = assemble_field_weighted(g, {}, {}, {});
  op.rhs(f, ff, nullptr, out);
  for (double v : out) CHECK(std::abs(v) < 1e-12);

  std::mt19937_64 rng(5);
  const int nq = field_quadrature_points(2);
  auto xs = TensorSpace::continuous(g.x());
  auto e1 = oracle::random_vector(g.nx(), rng), e2 = oracle::random_vector(g.nx(), rng),
       b3 = oracle::random_vector(g.nx(), rng);
  auto ff2 = assemble_field_weighted(g, evaluate(xs, e1, nq), evaluate(xs, e2, nq),
                                     evaluate(xs, b3, nq));
  auto nux = oracle::random_vector(g.nx(), rng, 0, 0.1);
  auto nuv1 = oracle::random_vector(g.nv(), rng, 0, 0.1);
  auto nuv2 = oracle::random_vector(g.nv(), rng, 0, 0.1);
  auto diff = assemble_diffusion_factors(g, {nux}, {nuv1, nuv2});
  f = oracle::random_vector(g.size(), rng, 0, 1);
  op.rhs(f, ff2, &diff, out);
  // d/dt 1^T (M ⊗ M) f
  auto mv = velocity_mass(cf);
  std::vector<double> wx(g.nx(), 0.0), wv(g.nv(), 0.0), ox(g.nx(), 1.0), ov(g.nv(), 1.0);
  cf.mass_x.apply(ox.data(), wx.data());
  mv.apply(ov.data(), wv.data());
  double rate = 0, scale = 0;
  for (std::size_t i = 0; i < g.nx(); ++i)
    for (std::size_t j = 0; j < g.nv(); ++j) {
      rate += wx[i] * wv[j] * out[i * g.nv() + j];
      scale += std::abs(wx[i] * wv[j] * out[i * g.nv() + j]);
    }
  CHECK(std::abs(rate) <= 1e-13 * scale);
}

TEST_CASE("advection bracket is skew-symmetric") {
  std::mt19937_64 rng(8);
  for (int dx : {1, 2})
    for (int k : {1, 2, 3}) {
      auto xspec = dx == 1 ? box({0}, {3}, {4}, k) : box({0, 0}, {3, 2}, {3, 2}, k);
      auto g = build_grid(xspec, box({-2, -3}, {2, 3}, {3, 4}, k));
      auto cf = assemble_constant(g);
      VlasovOperator op(g, cf);
      const int nq = field_quadrature_points(k);
      auto xs = TensorSpace::continuous(g.x());
      auto ff = assemble_field_weighted(g, evaluate(xs, oracle::random_vector(g.nx(), rng), nq),
                                        evaluate(xs, oracle::random_vector(g.nx(), rng), nq),
                                        evaluate(xs, oracle::random_vector(g.nx(), rng), nq));
      auto f = oracle::random_vector(g.size(), rng);
      std::vector<double> out(g.size());
      op.apply_bracket(f, ff, nullptr, out);
      double q = 0, nf = 0;
      for (std::size_t i = 0; i < f.size(); ++i) {
        q += f[i] * out[i];
        nf += f[i] * f[i];
      }
      CHECK(std::abs(q) <= 1e-11 * nf);
    }
}

TEST_CASE("vlasov rhs matches a dense monolithic assembly") {
  std::mt19937_64 rng(13);
  struct Case {
    DomainSpec x, v;
  };
  std::vector<Case> cases{
      {box({0}, {2}, {3}, 1), box({-1, -2}, {1, 2}, {3, 2}, 1)},
      {box({0}, {2}, {2}, 2), box({-1, -2}, {1, 2}, {2, 2}, 2)},
      {box({0, 0}, {2, 1}, {2, 3}, 1), box({-1, -2}, {1, 2}, {2, 2}, 1)},
  };
  for (const auto& c : cases) {
    auto g = build_grid(c.x, c.v);
    auto cf = assemble_constant(g);
    VlasovOperator op(g, cf);
    oracle::PhaseProblem pp;
    pp.x = obox(c.x);
    pp.v = obox(c.v);
    pp.e1 = oracle::random_vector(g.nx(), rng);
    pp.e2 = oracle::random_vector(g.nx(), rng);
    pp.b3 = oracle::random_vector(g.nx(), rng);
    for (std::size_t d = 0; d < g.x().dim(); ++d)
      pp.nu_x.push_back(oracle::random_vector(g.nx(), rng, 0, 0.5));
    pp.nu_v = {oracle::random_vector(g.nv(), rng, 0, 0.5),
               oracle::random_vector(g.nv(), rng, 0, 0.5)};
    auto [M, K] = oracle::assemble_phase(pp);

    const int nq = field_quadrature_points(g.degree());
    auto xs = TensorSpace::continuous(g.x());
    auto ff = assemble_field_weighted(g, evaluate(xs, pp.e1, nq), evaluate(xs, pp.e2, nq),
                                      evaluate(xs, pp.b3, nq));
    auto diff = assemble_diffusion_factors(g, pp.nu_x, pp.nu_v);
    auto f = oracle::random_vector(g.size(), rng);
    std::vector<double> out(g.size());
    op.rhs(f, ff, &diff, out);
    auto kf = oracle::matvec(K, f);
    for (auto& v : kf) v = -v;
    auto ref = oracle::solve(M, kf);
    double scale = 0;
    for (double v : ref) scale = std::max(scale, std::abs(v));
    CHECK(oracle::max_abs_diff(out, ref) <= 1e-11 * std::max(1.0, scale));
  }
}

TEST_CASE("cached weighted stiffness matches generic assembly") {
  std::mt19937_64 rng(5);
  for (int k : {1, 2, 3}) {
    for (auto spec : {box({-1}, {2}, {5}, k), box({-1, -1}, {1, 2}, {3, 4}, k)}) {
      CartesianMesh m(spec);
      auto s = TensorSpace::continuous(m);
      WeightedStiffness ws(s, field_quadrature_points(k));
      std::vector<std::vector<double>> nu;
      for (std::size_t d = 0; d < m.dim(); ++d)
        nu.push_back(oracle::random_vector(m.size(), rng, 0.0, 1.0 + d));
      if (m.dim() == 2) nu[0].assign(m.size(), 0.0);
      PeriodicStencil fast;
      ws.assemble(nu, fast);
      auto a = dense_of(fast), b = dense_of(assemble_diffusion(m, nu));
      double err = 0, mx = 0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        err = std::max(err, std::abs(a[i] - b[i]));
        mx = std::max(mx, std::abs(b[i]));
      }
      CHECK(err <= 1e-13 * mx);
      // reuse of the same stencil
      for (auto& v : nu.back()) v *= 2;
      ws.assemble(nu, fast);
      auto c = dense_of(fast), e = dense_of(assemble_diffusion(m, nu));
      for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(c[i] - e[i]) <= 1e-13 * 2 * mx);
      nu.back()[0] = -1;
      CHECK_THROWS_AS(ws.assemble(nu, fast), std::invalid_argument);
    }
  }
}
