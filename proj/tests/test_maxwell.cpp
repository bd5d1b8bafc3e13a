#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"
#include "vmfem/maxwell.hpp"
#include "vmfem/operators.hpp"

using namespace vmfem;

namespace {

CartesianMesh mesh_of(std::vector<double> lo, std::vector<double> hi, std::vector<int> cells,
                      int k) {
  DomainSpec s;
  s.lower = lo;
  s.upper = hi;
  s.cells = cells;
  s.degree = k;
  s.periodic.assign(lo.size(), true);
  return CartesianMesh(s);
}

// Gauss points on [0,1], hard-coded
std::vector<double> gauss01(int n) {
  if (n == 1) return {0.5};
  if (n == 2) return {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
  const double r = 0.5 * std::sqrt(0.6);
  return {0.5 - r, 0.5, 0.5 + r};
}

double lagrange_at(const std::vector<double>& nodes, std::size_t a, double t) {
  double v = 1.0;
  for (std::size_t c = 0; c < nodes.size(); ++c)
    if (c != a) v *= (t - nodes[c]) / (nodes[a] - nodes[c]);
  return v;
}

// 1D periodic piecewise functions on [0, L] with `cells` cells of degree k
struct Line {
  double L;
  int cells, k;
  double h() const { return L / cells; }
  std::pair<int, double> locate(double x) const {
    int c = std::min(cells - 1, static_cast<int>(x / h()));
    return {c, x / h() - c};
  }
  double cg(const std::vector<double>& u, double x) const {
    auto [c, t] = locate(x);
    double s = 0;
    for (int a = 0; a <= k; ++a) s += u[(c * k + a) % (cells * k)] * oracle::lagrange(k, a, t);
    return s;
  }
  double cg_basis(int i, double x, bool deriv) const {
    auto [c, t] = locate(x);
    double s = 0;
    for (int a = 0; a <= k; ++a)
      if ((c * k + a) % (cells * k) == i)
        s += deriv ? oracle::lagrange_deriv(k, a, t) / h() : oracle::lagrange(k, a, t);
    return s;
  }
  double dg(const std::vector<double>& u, double x) const {
    auto [c, t] = locate(x);
    auto g = gauss01(k);
    double s = 0;
    for (int a = 0; a < k; ++a) s += u[c * k + a] * lagrange_at(g, a, t);
    return s;
  }
  double dg_basis(int i, double x) const {
    auto [c, t] = locate(x);
    if (i / k != c) return 0.0;
    return lagrange_at(gauss01(k), i % k, t);
  }
  template <class F>
  double integral(F f) const {
    double s = 0;
    for (int c = 0; c < cells; ++c)
      s += oracle::integrate([&](double x) { return f(std::min(x, c * h() + h() * (1 - 1e-15))); },
                             c * h(), (c + 1) * h(), 2);
    return s;
  }
};

}  // namespace

TEST_CASE("1D Ampere and Faraday against oracle integrals") {
  std::mt19937_64 rng(7);
  for (int k : {1, 2, 3}) {
    const int cells = 5;
    const double L = 3.0;
    auto m = mesh_of({0}, {L}, {cells}, k);
    PhysicalConstants pc{2.0, 0.5, 1.0, 1.0};
    MaxwellSolver mw(m, pc);
    Line line{L, cells, k};
    const std::size_t n = m.size();
    auto e1 = oracle::random_vector(n, rng), e2 = oracle::random_vector(n, rng),
         b3 = oracle::random_vector(n, rng), l1 = oracle::random_vector(n, rng),
         l2 = oracle::random_vector(n, rng);
    std::vector<double> d1(n), d2(n), db(n);
    mw.rhs({e1, e2, b3}, l1, l2, {d1, d2, db}, false);
    for (std::size_t i = 0; i < n; ++i) {
      int ii = static_cast<int>(i);
      // (dE1/dt, ψ_i) = -load_i / ε0
      double lhs1 = line.integral([&](double x) { return line.dg(d1, x) * line.dg_basis(ii, x); });
      CHECK(std::abs(lhs1 + l1[i] / pc.eps0) < 1e-12);
      // (dE2/dt, η_i) = c^2 (B3, η_i') - load_i / ε0
      double lhs2 = line.integral([&](double x) { return line.cg(d2, x) * line.cg_basis(ii, x, false); });
      double rhs2 = pc.c * pc.c *
                        line.integral([&](double x) { return line.dg(b3, x) * line.cg_basis(ii, x, true); }) -
                    l2[i] / pc.eps0;
      CHECK(std::abs(lhs2 - rhs2) < 1e-12);
    }
    // dB3/dt = -dE2/dx pointwise
    for (double x : {0.1, 0.77, 1.3, 2.2, 2.95}) {
      double eps = 1e-6;
      double de2 = (line.cg(e2, x + eps) - line.cg(e2, x - eps)) / (2 * eps);
      if (std::abs(std::fmod(x, line.h())) < 2 * eps) continue;
      CHECK(line.dg(db, x) == doctest::Approx(-de2).epsilon(1e-7));
    }
    // electrostatic: only the load drives E
    mw.rhs({e1, e2, b3}, l1, l2, {d1, d2, db}, true);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(d2[i] == 0.0);
      CHECK(db[i] == 0.0);
    }
  }
}

TEST_CASE("vacuum field energy is conserved by the semi-discrete Maxwell system") {
  std::mt19937_64 rng(11);
  for (std::size_t dim : {1u, 2u}) {
    auto m = dim == 1 ? mesh_of({0}, {2}, {6}, 2) : mesh_of({0, 0}, {2, 3}, {4, 5}, 2);
    PhysicalConstants pc{1.5, 0.7, 1.0, 1.0};
    MaxwellSolver mw(m, pc);
    const std::size_t n = m.size();
    auto e1 = oracle::random_vector(n, rng), e2 = oracle::random_vector(n, rng),
         b3 = oracle::random_vector(n, rng);
    std::vector<double> zero(n, 0.0), d1(n), d2(n), db(n);
    mw.rhs({e1, e2, b3}, zero, zero, {d1, d2, db}, false);
    auto rate = [&](auto energy, const std::vector<double>& u, const std::vector<double>& du) {
      std::vector<double> p(n), q(n);
      for (std::size_t i = 0; i < n; ++i) {
        p[i] = u[i] + du[i];
        q[i] = u[i] - du[i];
      }
      return 0.5 * (energy(p) - energy(q));
    };
    double r = rate([&](auto& u) { return mw.electric_energy(0, u); }, e1, d1) +
               rate([&](auto& u) { return mw.electric_energy(1, u); }, e2, d2) +
               rate([&](auto& u) { return mw.magnetic_energy(u); }, b3, db);
    double scale = mw.electric_energy(0, d1) + mw.magnetic_energy(db) + 1.0;
    CHECK(std::abs(r) < 1e-12 * scale);
  }
}

TEST_CASE("2D Faraday is exact on the discrete curl") {
  std::mt19937_64 rng(3);
  auto m = mesh_of({0, 0}, {2, 1}, {3, 4}, 2);
  MaxwellSolver mw(m);
  const std::size_t n = m.size();
  auto e1 = oracle::random_vector(n, rng), e2 = oracle::random_vector(n, rng),
       b3 = oracle::random_vector(n, rng);
  std::vector<double> zero(n, 0.0), d1(n), d2(n), db(n);
  mw.rhs({e1, e2, b3}, zero, zero, {d1, d2, db}, false);
  const int nq = 4;
  auto lhs = evaluate(mw.b_space(), db, nq);
  auto a = evaluate(mw.e_space(1), e2, nq, 0);
  auto b = evaluate(mw.e_space(0), e1, nq, 1);
  for (std::size_t q = 0; q < lhs.size(); ++q) CHECK(std::abs(lhs[q] + a[q] - b[q]) < 1e-12);
}

TEST_CASE("Poisson initialisation: manufactured solution and discrete Gauss law") {
  const double alpha = 0.3, theta = 0.5, L = 2 * std::numbers::pi / theta;
  for (int k : {1, 2}) {
    double prev = 0;
    for (int cells : {8, 16, 32}) {
      auto m = mesh_of({0}, {L}, {cells}, k);
      PhysicalConstants pc{1.0, 2.0, 1.0, 1.0};
      MaxwellSolver mw(m, pc);
      auto rho = interpolate(mw.cg_space(), [&](std::span<const double> p) {
        return 1.0 + alpha * std::cos(theta * p[0]);
      });
      auto e = mw.poisson_init(rho, 1.0);
      double err = l2_error(mw.e_space(0), e[0], [&](std::span<const double> p) {
        return alpha / (theta * pc.eps0) * std::sin(theta * p[0]);
      }, 6);
      for (double v : e[1]) CHECK(v == 0.0);
      CHECK(mw.gauss_error({e[0], e[1], std::vector<double>(m.size(), 0.0)}, rho, 1.0) < 1e-12);
      if (prev > 0) CHECK(std::log2(prev / err) > k - 0.2);
      prev = err;
    }
  }
  // 2D, -ε0 ΔΦ = α cos(θx) cos(θy)
  double prev = 0;
  for (int cells : {8, 16}) {
    auto m = mesh_of({0, 0}, {L, L}, {cells, cells}, 2);
    MaxwellSolver mw(m, {1.0, 1.0, 1.0, 1.0});
    auto rho = interpolate(mw.cg_space(), [&](std::span<const double> p) {
      return alpha * std::cos(theta * p[0]) * std::cos(theta * p[1]);
    });
    auto e = mw.poisson_init(rho, 0.0);
    double err = l2_error(mw.e_space(0), e[0], [&](std::span<const double> p) {
      return alpha / (2 * theta) * std::sin(theta * p[0]) * std::cos(theta * p[1]);
    }, 6);
    const double norm = alpha / (2 * theta) * L / 2;  // ||E1||_L2
    CHECK(err < 0.03 * norm);
    if (prev > 0) CHECK(std::log2(prev / err) > 1.8);
    prev = err;
    CHECK(mw.gauss_error({e[0], e[1], std::vector<double>(m.size(), 0.0)}, rho, 0.0) < 1e-10);
  }
}

TEST_CASE("Gauss residual and moments against oracle integrals") {
  std::mt19937_64 rng(5);
  const int k = 2, cells = 4;
  const double L = 2.0;
  auto m = mesh_of({0}, {L}, {cells}, k);
  PhysicalConstants pc{1.0, 0.25, -1.0, 2.0};
  MaxwellSolver mw(m, pc);
  Line line{L, cells, k};
  const std::size_t n = m.size();
  auto e1 = oracle::random_vector(n, rng), e2 = oracle::random_vector(n, rng),
       b3 = oracle::random_vector(n, rng), rho = oracle::random_vector(n, rng);
  auto g = mw.gauss_residual({e1, e2, b3}, rho, 0.2);
  auto fm = mw.moments({e1, e2, b3});
  const double qm = pc.charge / pc.mass;
  double gs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    int ii = static_cast<int>(i);
    double ref = pc.eps0 * line.integral([&](double x) { return line.dg(e1, x) * line.cg_basis(ii, x, true); }) +
                 line.integral([&](double x) { return (line.cg(rho, x) - 0.2) * line.cg_basis(ii, x, false); });
    CHECK(std::abs(g[i] - ref) < 1e-12);
    gs += ref * ref;
    CHECK(std::abs(fm.e1[i] - qm * line.integral([&](double x) { return line.dg(e1, x) * line.cg_basis(ii, x, false); })) < 1e-12);
    CHECK(std::abs(fm.e2[i] - qm * line.integral([&](double x) { return line.cg(e2, x) * line.cg_basis(ii, x, false); })) < 1e-12);
    CHECK(std::abs(fm.b3[i] - qm * line.integral([&](double x) { return line.dg(b3, x) * line.cg_basis(ii, x, false); })) < 1e-12);
  }
  CHECK(mw.gauss_error({e1, e2, b3}, rho, 0.2) == doctest::Approx(std::sqrt(gs)).epsilon(1e-12));
  CHECK(mw.electric_energy(0, e1) ==
        doctest::Approx(0.5 * pc.eps0 * line.integral([&](double x) { return std::pow(line.dg(e1, x), 2); })).epsilon(1e-12));
  CHECK(mw.magnetic_energy(b3) ==
        doctest::Approx(0.5 * pc.eps0 * line.integral([&](double x) { return std::pow(line.dg(b3, x), 2); })).epsilon(1e-12));
  CHECK(mw.cross_integral(1, e2, b3) ==
        doctest::Approx(line.integral([&](double x) { return line.cg(e2, x) * line.dg(b3, x); })).epsilon(1e-12));
  // field values at quadrature points carry q/m
  CellQuadValues q1, q2, qb;
  mw.quadrature_values({e1, e2, b3}, q1, q2, qb);
  auto ref = evaluate(mw.e_space(1), e2, field_quadrature_points(k));
  for (std::size_t q = 0; q < ref.size(); ++q) CHECK(q2[q] == doctest::Approx(qm * ref[q]));
}

TEST_CASE("invalid constants are rejected") {
  auto m = mesh_of({0}, {1}, {4}, 1);
  CHECK_THROWS_AS(MaxwellSolver(m, {0.0, 1.0, 1.0, 1.0}), std::invalid_argument);
}
