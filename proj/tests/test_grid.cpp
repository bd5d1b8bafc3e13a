#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"
#include "vmfem/grid.hpp"

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
}  // namespace

TEST_CASE("basis_eval reproduces nodal values") {
  auto b = basis_eval(1, 0.5);
  CHECK(b.values[0] == doctest::Approx(0.5));
  CHECK(b.values[1] == doctest::Approx(0.5));
  b = basis_eval(1, 0.0);
  CHECK(b.values[0] == 1.0);
  CHECK(b.values[1] == 0.0);
  for (int a = 0; a <= 3; ++a) {
    auto c = basis_eval(3, a / 3.0);
    for (int m = 0; m <= 3; ++m) CHECK(c.values[m] == doctest::Approx(a == m ? 1.0 : 0.0));
  }
}

TEST_CASE("basis matches the written-out Lagrange polynomials") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 1; k <= 4; ++k)
    for (int s = 0; s < 20; ++s) {
      double t = u(rng);
      auto b = basis_eval(k, t);
      for (int a = 0; a <= k; ++a) {
        CHECK(std::abs(b.values[a] - oracle::lagrange(k, a, t)) < 1e-13);
        CHECK(std::abs(b.derivatives[a] - oracle::lagrange_deriv(k, a, t)) < 1e-11);
      }
    }
}

TEST_CASE("partition of unity at random points") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto fam : {NodeFamily::equispaced, NodeFamily::gauss_lobatto})
    for (int k = 1; k <= 4; ++k)
      for (int s = 0; s < 1000; ++s) {
        auto b = basis_eval(k, u(rng), fam);
        double sv = 0, sd = 0;
        for (int a = 0; a <= k; ++a) {
          sv += b.values[a];
          sd += b.derivatives[a];
        }
        REQUIRE(std::abs(sv - 1.0) <= 1e-13);
        REQUIRE(std::abs(sd) <= 1e-11);
      }
}

TEST_CASE("gauss lobatto nodes") {
  auto t = reference_nodes(2, NodeFamily::gauss_lobatto);
  CHECK(t[1] == doctest::Approx(0.5));
  t = reference_nodes(3, NodeFamily::gauss_lobatto);
  CHECK(t[1] == doctest::Approx(0.5 - 0.5 / std::sqrt(5.0)).epsilon(1e-14));
}

TEST_CASE("quadrature rule exactness") {
  auto q1 = quadrature_rule(1);
  CHECK(q1.points[0] == 0.5);
  CHECK(q1.weights[0] == doctest::Approx(1.0));
  auto q2 = quadrature_rule(2);
  double s = 0;
  for (int i = 0; i < 2; ++i) s += q2.weights[i] * std::pow(q2.points[i], 3);
  CHECK(s == doctest::Approx(0.25).epsilon(1e-15));
  auto q3 = quadrature_rule(3);
  s = 0;
  for (int i = 0; i < 3; ++i) s += q3.weights[i] * std::pow(q3.points[i], 5);
  CHECK(std::abs(s - 1.0 / 6.0) <= 1e-15);
  for (int n = 1; n <= 12; ++n) {
    auto q = quadrature_rule(n);
    CHECK(q.exact_degree == 2 * n - 1);
    double wsum = 0;
    for (double w : q.weights) {
      CHECK(w > 0);
      wsum += w;
    }
    CHECK(std::abs(wsum - 1.0) < 1e-14);
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double v = 0;
      for (int i = 0; i < n; ++i) v += q.weights[i] * std::pow(q.points[i], p);
      CHECK(std::abs(v - 1.0 / (p + 1)) <= 1e-14 / (p + 1) * 4);
    }
  }
}

TEST_CASE("build_grid node counts") {
  auto g = build_grid(box({0}, {4 * std::numbers::pi}, {30}, 1),
                      box({-5, -5}, {5, 5}, {30, 30}, 1));
  CHECK(g.nx() == 30);
  auto g2 = build_grid(box({0}, {1}, {4}, 2), box({-5, -5}, {5, 5}, {30, 30}, 2));
  CHECK(g2.nv() == 3600);
  CHECK(g2.size() == g2.nx() * g2.nv());
}

TEST_CASE("node-count convention for configured meshes") {
  // 31 x 61^2 nodes: the count includes the periodic endpoint
  auto xs = domain_from_nodes({0}, {1}, {31}, 1);
  auto vs = domain_from_nodes({-1, -1}, {1, 1}, {61, 61}, 1);
  CHECK(xs.cells[0] == 30);
  CHECK(vs.cells[1] == 60);
  CHECK(xs.cells[0] * xs.degree + 1 == 31);
  CHECK(domain_from_nodes({0}, {1}, {61}, 2).cells[0] == 30);
  CHECK(domain_from_nodes({0}, {1}, {61}, 3).cells[0] == 20);
  CHECK_THROWS_AS(domain_from_nodes({0}, {1}, {60}, 2), std::invalid_argument);
}

TEST_CASE("domain validation") {
  CHECK_THROWS_AS(CartesianMesh(box({0}, {1}, {4}, 0)), std::invalid_argument);
  CHECK_THROWS_AS(CartesianMesh(box({0}, {1}, {0}, 1)), std::invalid_argument);
  CHECK_THROWS_AS(CartesianMesh(box({1}, {0}, {4}, 1)), std::invalid_argument);
  CHECK_THROWS_AS(CartesianMesh(box({0}, {1}, {1}, 1)), std::invalid_argument);
  auto s = box({0}, {1}, {4}, 1);
  s.periodic[0] = false;
  CHECK_THROWS_AS(CartesianMesh{s}, std::invalid_argument);
}

TEST_CASE("composite index bijection and coordinate ordering") {
  auto g = build_grid(box({0, 0}, {1, 2}, {3, 2}, 2), box({-1, -1}, {1, 1}, {2, 3}, 2));
  for (std::size_t l = 0; l < g.size(); ++l) {
    auto [i, j] = g.split(l);
    REQUIRE(g.composite(i, j) == l);
  }
  const auto& v = g.v();
  for (std::size_t j = 1; j < v.size(); ++j) {
    auto prev = std::make_pair(v.coordinate(j - 1, 0), v.coordinate(j - 1, 1));
    auto cur = std::make_pair(v.coordinate(j, 0), v.coordinate(j, 1));
    CHECK(prev < cur);
  }
  // no duplicated periodic endpoint
  for (std::size_t j = 0; j < v.size(); ++j) CHECK(v.coordinate(j, 0) < 1.0);
}

TEST_CASE("node supports") {
  CartesianMesh m(box({0}, {1}, {5}, 3));
  auto s0 = m.support(0);
  CHECK(s0.size() == 7);
  CHECK(std::find(s0.begin(), s0.end(), 0u) != s0.end());
  CHECK(m.support(1).size() == 4);
  CartesianMesh m2(box({0, 0}, {1, 1}, {4, 4}, 1));
  CHECK(m2.support(5).size() == 9);
}

TEST_CASE("velocity reflection") {
  auto g = build_grid(box({0}, {1}, {2}, 1), box({-5}, {5}, {4}, 1));
  auto p = velocity_reflection(g);
  const auto& v = g.v();
  // nodes -5, -2.5, 0, 2.5
  CHECK(v.coordinate(p[1], 0) == doctest::Approx(2.5));
  CHECK(v.coordinate(p[3], 0) == doctest::Approx(-2.5));
  CHECK(p[2] == 2);
  CHECK(p[0] == 0);  // -5 is identified with +5

  auto g2 = build_grid(box({0}, {1}, {2}, 1), box({-3, -3}, {3, 3}, {60, 60}, 1));
  auto q = velocity_reflection(g2);
  for (std::size_t j = 0; j < q.size(); ++j) {
    REQUIRE(q[q[j]] == j);
    double a = g2.v().coordinate(j, 0), b = g2.v().coordinate(q[j], 0);
    if (std::abs(a + 3) > 1e-12) CHECK(std::abs(a + b) < 1e-12);
  }
  std::mt19937_64 rng(5);
  auto f = oracle::random_vector(g2.size(), rng);
  auto ff = reflect_velocity(g2, reflect_velocity(g2, f));
  CHECK(ff == f);

  for (auto fam : {NodeFamily::equispaced, NodeFamily::gauss_lobatto}) {
    auto s = box({-2, -2}, {2, 2}, {5, 3}, 3);
    s.nodes = fam;
    auto x = box({0}, {1}, {2}, 3);
    x.nodes = fam;
    auto g3 = build_grid(x, s);
    auto r = velocity_reflection(g3);
    for (std::size_t j = 0; j < r.size(); ++j)
      for (std::size_t d = 0; d < 2; ++d) {
        double a = g3.v().coordinate(j, d), b = g3.v().coordinate(r[j], d);
        if (std::abs(a + 2) > 1e-12) CHECK(std::abs(a + b) < 1e-12);
      }
  }
  CHECK_THROWS_AS(velocity_reflection(build_grid(box({0}, {1}, {2}, 1), box({-1}, {2}, {4}, 1))),
                  std::invalid_argument);
}
