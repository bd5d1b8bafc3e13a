// vmfem: run, reverse-test, converge, list-scenarios
// exit status: 0 ok, 1 other failure, 2 config error, 3 numerical failure

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "vmfem/driver.hpp"
#include "vmfem/errors.hpp"

namespace fs = std::filesystem;
using namespace vmfem;

namespace {

struct Flags {
  std::string config, output_dir;
  int threads = 0, cadence = 0;
  double time = -1;
};

RunConfig load(const Flags& f) {
  if (f.config.empty()) throw ConfigError("--config is required");
  RunConfig c = load_config(f.config);
  if (!f.output_dir.empty()) c.output_dir = f.output_dir;
  if (f.threads > 0) c.threads = f.threads;
  if (f.cadence > 0) c.cadence = f.cadence;
  if (f.time >= 0) c.reverse_time = f.time;
  c.validate();
  return c;
}

void print_reverse(const ReverseResult& r) {
  std::cout << std::scientific << std::setprecision(4) << r.x_nodes << "x" << r.v_nodes
            << "  f " << r.f_error << "  E1 " << r.e1_error << "  B3 " << r.b3_error
            << "  (round trip f " << r.f_roundtrip << ")\n";
}

int cmd_run(const Flags& f) {
  RunConfig c = load(f);
  auto res = run_simulation(c, c.output_dir, &std::cerr);
  const auto& s = res.summary;
  std::cout << "scenario " << s["scenario"].get<std::string>() << ": " << s["steps"] << " steps to t = "
            << s["final_time"] << ", mass drift " << s["max_relative_mass_drift"]
            << ", gauss error " << s["max_gauss_error"] << '\n';
  if (s.contains("rate") && s["rate"]["status"] == "ok")
    std::cout << "rate (" << s["rate"]["convention"].get<std::string>() << ") "
              << s["rate"]["compared"] << " vs " << s["rate"]["reference"] << '\n';
  std::cout << "artifacts in " << c.output_dir << '\n';
  return 0;
}

int cmd_reverse(const Flags& f) {
  RunConfig c = load(f);
  auto r = reverse_test(c, 0, 0, c.reverse_time, &std::cerr);
  print_reverse(r);
  fs::create_directories(c.output_dir);
  std::ofstream(fs::path(c.output_dir) / "reverse.json")
      << nlohmann::json{{"config_hash", config_hash(c)}, {"time", c.reverse_time}, {"result", r.to_json()}}
             .dump(2)
      << '\n';
  return 0;
}

int cmd_converge(const Flags& f) {
  RunConfig c = load(f);
  auto t = converge(c, &std::cerr);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    print_reverse(t.rows[i]);
    if (i < t.orders.size())
      std::cout << std::fixed << std::setprecision(2) << "  orders f " << t.orders[i][0] << "  E1 "
                << t.orders[i][1] << "  B3 " << t.orders[i][2] << '\n';
  }
  auto j = t.to_json();
  j["config_hash"] = config_hash(c);
  j["time"] = c.reverse_time;
  j["degree"] = c.degree;
  fs::create_directories(c.output_dir);
  std::ofstream(fs::path(c.output_dir) / "convergence.json") << j.dump(2) << '\n';
  return 0;
}

int cmd_list() {
  for (const auto& n : scenario_names()) {
    auto s = make_scenario(n);
    std::cout << std::left << std::setw(18) << n << s.description << "\n    ";
    for (const auto& [k, v] : s.params) std::cout << k << "=" << v << " ";
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vlasov-Maxwell finite element simulator"};
  app.require_subcommand(1);
  Flags f;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "configuration file")->required();
    sub->add_option("--output-dir", f.output_dir, "output directory (overrides the config)");
    sub->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--cadence", f.cadence, "diagnostics row every n steps")->check(CLI::PositiveNumber);
  };
  auto* run = app.add_subcommand("run", "run a scenario and write diagnostics");
  add_common(run);
  auto* rev = app.add_subcommand("reverse-test", "time-reversal test");
  add_common(rev);
  rev->add_option("--time", f.time, "forward time T (overrides reverse.time)");
  auto* conv = app.add_subcommand("converge", "time-reversal errors over a resolution list");
  add_common(conv);
  conv->add_option("--time", f.time, "forward time T (overrides reverse.time)");
  app.add_subcommand("list-scenarios", "list built-in scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    if (run->parsed()) return cmd_run(f);
    if (rev->parsed()) return cmd_reverse(f);
    if (conv->parsed()) return cmd_converge(f);
    return cmd_list();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
