#pragma once
// Run drivers behind the command line: a single simulation with its
// artifacts, the time-reversal test and the convergence table.

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "vmfem/config.hpp"
#include "vmfem/diagnostics.hpp"
#include "vmfem/scenarios.hpp"

namespace vmfem {

// Hex FNV-1a of the resolved config without output location and thread count.
std::string config_hash(const RunConfig& cfg);

// Grid, coupled system and initial state of a configured scenario.
struct Setup {
  Scenario scenario;
  std::unique_ptr<TensorGrid> grid;
  std::unique_ptr<CoupledSystem> system;
  std::vector<double> state;
  double final_time = 0;
};
Setup make_setup(const RunConfig& cfg, int x_nodes = 0, int v_nodes = 0);

struct RunResult {
  std::vector<DiagnosticsRecord> records;  // the CSV rows
  nlohmann::json summary;
  std::vector<double> final_state;
};

// Artifacts (diagnostics.csv, summary.json, config.json, snapshots) go to
// out_dir unless it is empty. NumericalError propagates.
RunResult run_simulation(const RunConfig& cfg, const std::filesystem::path& out_dir,
                         std::ostream* progress = nullptr);

struct ReverseResult {
  int x_nodes = 0, v_nodes = 0;
  double h_x = 0;
  std::size_t steps = 0;  // forward + backward
  // relative L2 errors against f0(x,-v), E0, -B0 (absolute where the exact field vanishes)
  double f_error = 0, e1_error = 0, e2_error = 0, b3_error = 0;
  // relative L2 distance to the discrete initial state after the round trip
  double f_roundtrip = 0, e1_roundtrip = 0, b3_roundtrip = 0;
  nlohmann::json to_json() const;
};

// Run to T, map (f(x,v), E, B) -> (f(x,-v), E, -B), run to T again.
ReverseResult reverse_test(const RunConfig& cfg, int x_nodes, int v_nodes, double T,
                           std::ostream* progress = nullptr);

struct ConvergenceTable {
  std::vector<ReverseResult> rows;
  // log(e_i / e_{i+1}) / log(h_i / h_{i+1}) for f, E1, B3
  std::vector<std::array<double, 3>> orders;
  nlohmann::json to_json() const;
};
// ConfigError with fewer than two or repeated resolutions.
ConvergenceTable converge(const RunConfig& cfg, std::ostream* progress = nullptr);

}  // namespace vmfem
