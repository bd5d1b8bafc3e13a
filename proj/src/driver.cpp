#include "vmfem/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "vmfem/errors.hpp"
#include "vmfem/fem.hpp"
#include "vmfem/snapshot.hpp"

namespace vmfem {

namespace fs = std::filesystem;

std::string config_hash(const RunConfig& cfg) {
  auto j = cfg.to_json();
  j["output"].erase("directory");
  j.erase("run");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

Setup make_setup(const RunConfig& cfg, int x_nodes, int v_nodes) {
  Setup s;
  s.scenario = make_scenario(cfg.scenario, cfg.params);
  const int xn = x_nodes ? x_nodes : (cfg.x_nodes ? cfg.x_nodes : s.scenario.x_nodes);
  const int vn = v_nodes ? v_nodes : (cfg.v_nodes ? cfg.v_nodes : s.scenario.v_nodes);
  const int k = cfg.degree ? cfg.degree : s.scenario.degree;
  s.grid = std::make_unique<TensorGrid>(scenario_grid(s.scenario, xn, vn, k, cfg.nodes));
  s.system = std::make_unique<CoupledSystem>(*s.grid, cfg.physics, s.scenario.electrostatic);
  s.state = build_initial(*s.system, s.scenario);
  s.final_time = cfg.final_time >= 0 ? cfg.final_time : s.scenario.final_time;
  return s;
}

namespace {

void set_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n);
#else
  (void)n;
#endif
}

nlohmann::json record_json(const DiagnosticsRecord& r) {
  nlohmann::json j;
  for (const auto& c : csv_columns()) j[c] = column_value(r, c);
  return j;
}

nlohmann::json rate_json(const Scenario& s, const RunConfig& cfg,
                         const std::vector<DiagnosticsRecord>& rec) {
  const RateReference& ref = *s.rate;
  nlohmann::json j;
  double t0 = cfg.fit_t0 >= 0 ? cfg.fit_t0 : ref.t0;
  double t1 = cfg.fit_t1 >= 0 ? cfg.fit_t1 : ref.t1;
  j["channel"] = ref.channel;
  j["reference"] = ref.value;
  j["convention"] = ref.amplitude ? "amplitude" : "energy";
  j["kind"] = ref.growth ? "growth" : "damping";
  j["method"] = ref.envelope ? "envelope" : "all-samples";
  j["window"] = {t0, t1};
  if (rec.empty() || rec.back().time < t1) {
    j["status"] = "window not reached";
    return j;
  }
  std::vector<double> t, v;
  for (const auto& r : rec) {
    t.push_back(r.time);
    v.push_back(column_value(r, ref.channel));
  }
  try {
    double slope;
    if (ref.envelope) {
      auto e = fit_envelope(t, v, t0, t1);
      slope = e.rate;
      j["peaks"] = e.peaks;
    } else {
      slope = fit_rate(t, v, t0, t1);
    }
    const double sign = ref.growth ? 1.0 : -1.0;
    const double energy_rate = sign * slope, amp_rate = 0.5 * sign * slope;
    j["energy_slope"] = slope;
    j["energy_rate"] = energy_rate;
    j["amplitude_rate"] = amp_rate;
    const double cmp = ref.amplitude ? amp_rate : energy_rate;
    j["compared"] = cmp;
    j["relative_error"] = std::abs(cmp - ref.value) / std::abs(ref.value);
    // the other convention, reported for the factor-of-two question
    const double other = ref.amplitude ? energy_rate : amp_rate;
    j["relative_error_other_convention"] = std::abs(other - ref.value) / std::abs(ref.value);
    j["status"] = "ok";
  } catch (const std::invalid_argument& e) {
    j["status"] = std::string("fit failed: ") + e.what();
  }
  return j;
}

std::string snapshot_stem(std::size_t idx) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshot_%03zu", idx);
  return buf;
}

void write_state_snapshot(const fs::path& dir, std::size_t idx, const CoupledSystem& sys,
                          std::span<const double> u, double t) {
  const auto& g = sys.grid();
  const std::string stem = snapshot_stem(idx);
  auto hf = snapshot_header(g, t, "f", g.size());
  write_snapshot(dir / (stem + "_f"), hf, sys.f(u));
  auto hE = snapshot_header(g, t, "fields", 3 * g.nx());
  hE["components"] = {"e1", "e2", "b3"};
  hE["spaces"] = sys.grid().x().dim() == 1
                     ? nlohmann::json{"dg", "cg", "dg"}
                     : nlohmann::json{"dg x cg", "cg x dg", "dg x dg"};
  write_snapshot(dir / (stem + "_fields"), hE, u.subspan(g.size()));
}

}  // namespace

RunResult run_simulation(const RunConfig& cfg, const fs::path& out_dir, std::ostream* progress) {
  cfg.validate();
  set_threads(cfg.threads);
  const auto wall0 = std::chrono::steady_clock::now();
  Setup s = make_setup(cfg);
  CoupledSystem& sys = *s.system;
  std::vector<double>& u = s.state;
  const double T = s.final_time;

  std::ofstream csv;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream(out_dir / "config.json") << cfg.to_json().dump(2) << '\n';
    csv.open(out_dir / "diagnostics.csv");
    if (!csv) throw std::runtime_error("cannot write " + (out_dir / "diagnostics.csv").string());
    write_csv_header(csv);
  }

  ViscosityModel visc(*s.grid, sys.maxwell(), cfg.viscosity,
                      static_cast<std::size_t>(cfg.composite_cap));
  Stepper st(sys, visc, cfg.stepper);

  RunResult res;
  double max_drift = 0, max_gauss = 0, min_f = 0;
  double mass0 = 0;
  auto record = [&](std::size_t n, double t, double tau, const ViscosityState* vs) {
    auto r = measure(sys, u, t, tau, n, vs);
    if (n == 0) mass0 = r.mass;
    max_drift = std::max(max_drift, std::abs(r.mass - mass0) / std::abs(mass0));
    max_gauss = std::max(max_gauss, r.gauss_error);
    min_f = n == 0 ? r.f_min : std::min(min_f, r.f_min);
    if (csv.is_open()) write_csv_row(csv, r);
    res.records.push_back(r);
  };

  std::vector<double> targets;
  for (double ts : cfg.snapshot_times)
    if (ts > 0 && ts < T) targets.push_back(ts);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  targets.push_back(T);
  auto wants_snapshot = [&](double t) {
    return std::find(cfg.snapshot_times.begin(), cfg.snapshot_times.end(), t) !=
           cfg.snapshot_times.end();
  };

  double t = 0;
  std::size_t n = 0, snaps = 0;
  record(0, 0.0, 0.0, nullptr);
  if (!out_dir.empty() && wants_snapshot(0.0)) write_state_snapshot(out_dir, snaps++, sys, u, t);
  for (double target : targets) {
    while (t < target) {
      const double tau = st.step(u, t, target);
      if (!(tau > 0)) break;
      ++n;
      const bool last = t >= T;
      if (n % static_cast<std::size_t>(cfg.cadence) == 0 || last)
        record(n, t, tau, &visc.state());
      if (progress && cfg.progress > 0 && n % static_cast<std::size_t>(cfg.progress) == 0)
        *progress << "step " << n << "  t = " << t << "  tau = " << tau << '\n' << std::flush;
    }
    if (!out_dir.empty() && target > 0 && target == t && wants_snapshot(target))
      write_state_snapshot(out_dir, snaps++, sys, u, t);
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  nlohmann::json& j = res.summary;
  j["schema_version"] = kCsvSchemaVersion;
  j["config_hash"] = config_hash(cfg);
  j["scenario"] = s.scenario.name;
  j["parameters"] = s.scenario.params;
  j["dimensions"] = {{"x", s.grid->x().dims()}, {"v", s.grid->v().dims()}};
  j["degree"] = s.grid->degree();
  j["dofs"] = s.grid->size();
  j["viscosity"] = mode_name(cfg.viscosity);
  j["final_time"] = t;
  j["steps"] = n;
  j["rows"] = res.records.size();
  j["max_relative_mass_drift"] = max_drift;
  j["max_gauss_error"] = max_gauss;
  j["min_f"] = min_f;
  j["initial"] = record_json(res.records.front());
  j["final"] = record_json(res.records.back());
  j["snapshots"] = snaps;
  j["wall_seconds"] = wall;
  if (s.scenario.rate) j["rate"] = rate_json(s.scenario, cfg, res.records);
  if (!out_dir.empty()) std::ofstream(out_dir / "summary.json") << j.dump(2) << '\n';
  res.final_state = u;
  return res;
}

nlohmann::json ReverseResult::to_json() const {
  return {{"x_nodes", x_nodes},        {"v_nodes", v_nodes},          {"h_x", h_x},
          {"steps", steps},            {"f_error", f_error},          {"e1_error", e1_error},
          {"e2_error", e2_error},      {"b3_error", b3_error},        {"f_roundtrip", f_roundtrip},
          {"e1_roundtrip", e1_roundtrip}, {"b3_roundtrip", b3_roundtrip}};
}

namespace {

double run_to(CoupledSystem& sys, ViscosityModel& visc, const StepperOptions& opt,
              std::vector<double>& u, double T, std::ostream* progress) {
  Stepper st(sys, visc, opt);
  double t = 0;
  std::size_t n = 0;
  while (t < T) {
    if (!(st.step(u, t, T) > 0)) break;
    ++n;
  }
  if (progress) *progress << "  " << n << " steps to t = " << t << '\n' << std::flush;
  return static_cast<double>(n);
}

// ||a - b|| / ||b|| on a space, both given as coefficients
double rel_discrete(const TensorSpace& s, std::span<const double> a, std::span<const double> b,
                    int nq) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  auto zero = [](std::span<const double>) { return 0.0; };
  const double nb = l2_error(s, b, zero, nq);
  const double nd = l2_error(s, d, zero, nq);
  return nb > 0 ? nd / nb : nd;
}

double rel_exact(const TensorSpace& s, std::span<const double> a,
                 const std::function<double(std::span<const double>)>& fn, int nq) {
  std::vector<double> zero(a.size(), 0.0);
  const double ne = l2_error(s, zero, fn, nq);
  const double err = l2_error(s, a, fn, nq);
  return ne > 1e-14 ? err / ne : err;
}

}  // namespace

ReverseResult reverse_test(const RunConfig& cfg, int x_nodes, int v_nodes, double T,
                           std::ostream* progress) {
  cfg.validate();
  set_threads(cfg.threads);
  Setup s = make_setup(cfg, x_nodes, v_nodes);
  CoupledSystem& sys = *s.system;
  const TensorGrid& g = *s.grid;
  const std::vector<double> u0 = s.state;
  std::vector<double> u = s.state;
  ReverseResult r;
  r.x_nodes = x_nodes ? x_nodes : (cfg.x_nodes ? cfg.x_nodes : s.scenario.x_nodes);
  r.v_nodes = v_nodes ? v_nodes : (cfg.v_nodes ? cfg.v_nodes : s.scenario.v_nodes);
  r.h_x = g.x().axis(0).h();

  {
    ViscosityModel visc(g, sys.maxwell(), cfg.viscosity, static_cast<std::size_t>(cfg.composite_cap));
    r.steps += static_cast<std::size_t>(run_to(sys, visc, cfg.stepper, u, T, progress));
  }
  auto reflect = [&](std::vector<double>& x) {
    auto fr = reflect_velocity(g, sys.f(std::span<const double>(x)));
    std::copy(fr.begin(), fr.end(), x.begin());
    auto F = sys.fields(std::span<double>(x));
    for (double& b : F.b3) b = -b;
  };
  reflect(u);
  {
    ViscosityModel visc(g, sys.maxwell(), cfg.viscosity, static_cast<std::size_t>(cfg.composite_cap));
    r.steps += static_cast<std::size_t>(run_to(sys, visc, cfg.stepper, u, T, progress));
  }

  // compare with the reflected initial data
  const int nq = g.degree() + 3;
  const CartesianMesh phase(composite_spec(g));
  const TensorSpace fspace = TensorSpace::continuous(phase);
  const std::size_t dx = g.x().dim();
  const auto& sc = s.scenario;
  auto f_exact = [&](std::span<const double> z) {
    std::vector<double> v(z.begin() + dx, z.end());
    for (double& c : v) c = -c;
    return sc.f0(z.first(dx), v);
  };
  const auto& mw = sys.maxwell();
  auto F = sys.fields(std::span<const double>(u));
  r.f_error = rel_exact(fspace, sys.f(std::span<const double>(u)), f_exact, nq);
  r.e1_error = rel_exact(mw.e_space(0), F.e1, sc.e1, nq);
  r.e2_error = rel_exact(mw.e_space(1), F.e2, sc.e2, nq);
  r.b3_error = rel_exact(mw.b_space(), F.b3,
                         [&](std::span<const double> x) { return -sc.b3(x); }, nq);

  std::vector<double> ref = u0;
  reflect(ref);
  auto R = sys.fields(std::span<const double>(ref));
  r.f_roundtrip = rel_discrete(fspace, sys.f(std::span<const double>(u)),
                               sys.f(std::span<const double>(ref)), nq);
  r.e1_roundtrip = rel_discrete(mw.e_space(0), F.e1, R.e1, nq);
  r.b3_roundtrip = rel_discrete(mw.b_space(), F.b3, R.b3, nq);
  return r;
}

nlohmann::json ConvergenceTable::to_json() const {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) j["rows"].push_back(r.to_json());
  j["orders"] = nlohmann::json::array();
  for (const auto& o : orders) j["orders"].push_back({{"f", o[0]}, {"e1", o[1]}, {"b3", o[2]}});
  return j;
}

ConvergenceTable converge(const RunConfig& cfg, std::ostream* progress) {
  cfg.validate();
  if (cfg.converge_x_nodes.size() < 2)
    throw ConfigError("converge needs at least two resolutions");
  ConvergenceTable t;
  for (std::size_t i = 0; i < cfg.converge_x_nodes.size(); ++i) {
    const int xn = static_cast<int>(cfg.converge_x_nodes[i]);
    const int vn = static_cast<int>(cfg.converge_v_nodes[i]);
    if (progress) *progress << "resolution " << xn << " x " << vn << '\n' << std::flush;
    t.rows.push_back(reverse_test(cfg, xn, vn, cfg.reverse_time, progress));
  }
  for (std::size_t i = 0; i + 1 < t.rows.size(); ++i) {
    const auto &a = t.rows[i], &b = t.rows[i + 1];
    const double lh = std::log(a.h_x / b.h_x);
    t.orders.push_back({std::log(a.f_error / b.f_error) / lh, std::log(a.e1_error / b.e1_error) / lh,
                        std::log(a.b3_error / b.b3_error) / lh});
  }
  return t;
}

}  // namespace vmfem
