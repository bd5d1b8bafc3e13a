#include "vmfem/scenarios.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "vmfem/simd.hpp"

namespace vmfem {

namespace {

constexpr double pi = std::numbers::pi;

double gauss(double v, double s) { return std::exp(-0.5 * v * v / (s * s)); }

void apply_overrides(Scenario& s, const std::map<std::string, double>& o) {
  for (const auto& [k, v] : o) {
    auto it = s.params.find(k);
    if (it == s.params.end())
      throw std::invalid_argument("scenario '" + s.name + "' has no parameter '" + k + "'");
    it->second = v;
  }
}

Scenario strong_landau(const std::map<std::string, double>& o) {
  Scenario s;
  s.name = "strong_landau";
  s.description = "1D2V nonlinear Landau damping, electrostatic";
  s.params = {{"alpha", 0.5}, {"theta", 0.5}, {"vmax", 5.0}};
  apply_overrides(s, o);
  const double a = s.params["alpha"], th = s.params["theta"], vm = s.params["vmax"];
  s.x_lower = {0};
  s.x_upper = {2 * pi / th};
  s.v_lower = {-vm, -vm};
  s.v_upper = {vm, vm};
  s.final_time = 50;
  s.electrostatic = true;
  s.f0 = [=](std::span<const double> x, std::span<const double> v) {
    return gauss(v[0], 1) * gauss(v[1], 1) / (2 * pi) * (1 + a * std::cos(th * x[0]));
  };
  s.e1 = [=](std::span<const double> x) { return a / th * std::sin(th * x[0]); };
  s.e2 = s.b3 = [](std::span<const double>) { return 0.0; };
  return s;
}

Scenario landau_2d2v(const std::map<std::string, double>& o) {
  Scenario s;
  s.name = "landau_2d2v";
  s.description = "2D2V linear Landau damping";
  s.dx = 2;
  s.params = {{"alpha", 0.05}, {"length", 22.0}, {"vmax", 5.0}};
  apply_overrides(s, o);
  const double a = s.params["alpha"], L = s.params["length"], vm = s.params["vmax"];
  const double th = 2 * pi / L;
  s.x_lower = {0, 0};
  s.x_upper = {L, L};
  s.v_lower = {-vm, -vm};
  s.v_upper = {vm, vm};
  s.x_nodes = 17;
  s.v_nodes = 33;
  s.final_time = 50;
  s.electrostatic = false;
  s.f0 = [=](std::span<const double> x, std::span<const double> v) {
    return gauss(v[0], 1) * gauss(v[1], 1) / (2 * pi) * (1 + a * std::cos(th * x[0])) *
           (1 + a * std::cos(th * x[1]));
  };
  // ρ - 1 = a cos x1 + a cos x2 + a² cos x1 cos x2
  s.e1 = [=](std::span<const double> x) {
    return a / th * std::sin(th * x[0]) * (1 + 0.5 * a * std::cos(th * x[1]));
  };
  s.e2 = [=](std::span<const double> x) {
    return a / th * std::sin(th * x[1]) * (1 + 0.5 * a * std::cos(th * x[0]));
  };
  s.b3 = [](std::span<const double>) { return 0.0; };
  s.rate = RateReference{landau_energy_rate(th), "electric_energy", false, true, false, 2.0, 45.0};
  return s;
}

Scenario weibel(const std::map<std::string, double>& o) {
  Scenario s;
  s.name = "weibel";
  s.description = "1D2V Weibel instability";
  s.params = {{"sigma1", 0.02 / std::sqrt(2.0)}, {"sigma_ratio", std::sqrt(12.0)}, {"theta", 1.25},
              {"alpha", 1e-4}, {"beta", 1e-4}, {"width", 5.0}};
  apply_overrides(s, o);
  const double s1 = s.params["sigma1"], s2 = s.params["sigma_ratio"] * s1, th = s.params["theta"],
               a = s.params["alpha"], b = s.params["beta"], wd = s.params["width"];
  s.x_lower = {0};
  s.x_upper = {2 * pi / th};
  s.v_lower = {-wd * s1, -wd * s2};
  s.v_upper = {wd * s1, wd * s2};
  s.final_time = 500;
  s.f0 = [=](std::span<const double> x, std::span<const double> v) {
    return gauss(v[0], s1) * gauss(v[1], s2) / (2 * pi * s1 * s2) * (1 + a * std::cos(th * x[0]));
  };
  s.e1 = [=](std::span<const double> x) { return a / th * std::sin(th * x[0]); };
  s.e2 = [](std::span<const double>) { return 0.0; };
  s.b3 = [=](std::span<const double> x) { return b * std::cos(th * x[0]); };
  s.rate = RateReference{0.02784, "b3_energy", true, false, true, 60.0, 140.0};
  return s;
}

Scenario streaming_weibel(const std::map<std::string, double>& o) {
  Scenario s;
  s.name = "streaming_weibel";
  s.description = "1D2V streaming Weibel instability";
  s.params = {{"sigma", 0.1 / std::sqrt(2.0)}, {"theta", 0.2}, {"beta", 1e-3}, {"v01", 0.5},
              {"v02", -0.1}, {"delta", 1.0 / 6.0}, {"width", 5.0}, {"v2max", 1.2}};
  apply_overrides(s, o);
  const double sg = s.params["sigma"], th = s.params["theta"], b = s.params["beta"],
               v01 = s.params["v01"], v02 = s.params["v02"], dl = s.params["delta"],
               wd = s.params["width"], v2m = s.params["v2max"];
  s.x_lower = {0};
  s.x_upper = {2 * pi / th};
  s.v_lower = {-wd * sg, -v2m};
  s.v_upper = {wd * sg, v2m};
  s.final_time = 200;
  s.f0 = [=](std::span<const double>, std::span<const double> v) {
    return gauss(v[0], sg) / (2 * pi * sg * sg) *
           (dl * gauss(v[1] - v01, sg) + (1 - dl) * gauss(v[1] - v02, sg));
  };
  s.e1 = s.e2 = [](std::span<const double>) { return 0.0; };
  s.b3 = [=](std::span<const double> x) { return b * std::sin(th * x[0]); };
  s.rate = RateReference{0.03, "e2_energy", true, true, true, 20.0, 60.0};
  return s;
}

Scenario two_stream(const std::map<std::string, double>& o) {
  Scenario s;
  s.name = "two_stream";
  s.description = "1D2V two-stream instability";
  s.params = {{"alpha", 1e-3}, {"theta", 0.2}, {"drift", 2.4}, {"v1max", 7.5}, {"v2max", 5.0}};
  apply_overrides(s, o);
  const double a = s.params["alpha"], th = s.params["theta"], d = s.params["drift"],
               v1 = s.params["v1max"], v2 = s.params["v2max"];
  s.x_lower = {0};
  s.x_upper = {2 * pi / th};
  s.v_lower = {-v1, -v2};
  s.v_upper = {v1, v2};
  s.final_time = 200;
  s.f0 = [=](std::span<const double> x, std::span<const double> v) {
    return (gauss(v[0] - d, 1) + gauss(v[0] + d, 1)) * gauss(v[1], 1) / (4 * pi) *
           (1 + a * std::cos(th * x[0]));
  };
  s.e1 = [=](std::span<const double> x) { return a / th * std::sin(th * x[0]); };
  s.e2 = s.b3 = [](std::span<const double>) { return 0.0; };
  return s;
}

}  // namespace

double landau_energy_rate(double theta) {
  const double w2 = 1 + 3 * theta * theta;
  return std::sqrt(pi / 2) * w2 / (2 * theta * theta * theta) * std::exp(-w2 / (2 * theta * theta));
}

std::vector<std::string> scenario_names() {
  return {"strong_landau", "landau_2d2v", "weibel", "streaming_weibel", "two_stream"};
}

Scenario make_scenario(const std::string& name, const std::map<std::string, double>& overrides) {
  if (name == "strong_landau") return strong_landau(overrides);
  if (name == "landau_2d2v") return landau_2d2v(overrides);
  if (name == "weibel") return weibel(overrides);
  if (name == "streaming_weibel") return streaming_weibel(overrides);
  if (name == "two_stream") return two_stream(overrides);
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

TensorGrid scenario_grid(const Scenario& s, int x_nodes, int v_nodes, int degree,
                         NodeFamily family) {
  auto xs = domain_from_nodes(s.x_lower, s.x_upper, std::vector<int>(s.dx, x_nodes), degree, family);
  auto vs = domain_from_nodes(s.v_lower, s.v_upper, std::vector<int>(2, v_nodes), degree, family);
  return build_grid(xs, vs);
}

std::vector<double> build_initial(CoupledSystem& sys, const Scenario& s) {
  const TensorGrid& g = sys.grid();
  if (g.x().dim() != s.dx || g.v().dim() != 2)
    throw std::invalid_argument("grid does not match the dimensions of scenario '" + s.name + "'");
  const std::size_t nx = g.nx(), nv = g.nv();
  auto u = sys.make_state();
  std::vector<double> x(s.dx), v(2);
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t d = 0; d < s.dx; ++d) x[d] = g.x().coordinate(i, d);
    for (std::size_t j = 0; j < nv; ++j) {
      v[0] = g.v().coordinate(j, 0);
      v[1] = g.v().coordinate(j, 1);
      u[g.composite(i, j)] = s.f0(x, v);
    }
  }
  const MaxwellSolver& mw = sys.maxwell();
  const auto& w = sys.weights();
  const auto& k = simd::kernels();
  std::vector<double> rho(nx);
  double total = 0, vol = 0;
  for (std::size_t i = 0; i < nx; ++i) {
    rho[i] = mw.constants().charge * k.dot(nv, w.v.data(), u.data() + i * nv);
    total += w.x[i] * rho[i];
    vol += w.x[i];
  }
  const double rho0 = total / vol;
  sys.set_background(rho0);
  auto e = mw.poisson_init(rho, rho0);
  auto fv = sys.fields(std::span<double>(u));
  std::copy(e[0].begin(), e[0].end(), fv.e1.begin());
  if (s.dx == 2) {
    std::copy(e[1].begin(), e[1].end(), fv.e2.begin());
  } else {
    auto e2 = interpolate(mw.e_space(1), s.e2);
    std::copy(e2.begin(), e2.end(), fv.e2.begin());
  }
  auto b3 = interpolate(mw.b_space(), s.b3);
  std::copy(b3.begin(), b3.end(), fv.b3.begin());
  return u;
}

}  // namespace vmfem
