#pragma once
// Run configuration: a small TOML-style key = value file with [sections],
// validated into a RunConfig.

#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "vmfem/grid.hpp"
#include "vmfem/maxwell.hpp"
#include "vmfem/stepper.hpp"
#include "vmfem/viscosity.hpp"

namespace vmfem {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ConfigValue = std::variant<bool, double, std::string, std::vector<double>>;

// Keys are flattened as "section.key" (top-level keys have no prefix).
// Supported values: "strings", numbers, true/false, one-line arrays of numbers.
// ConfigError with the line number on malformed input or duplicate keys.
std::map<std::string, ConfigValue> parse_config_text(const std::string& text);

struct RunConfig {
  std::string scenario;
  std::map<std::string, double> params;  // scenario overrides

  int x_nodes = 0, v_nodes = 0, degree = 0;  // 0: scenario default
  NodeFamily nodes = NodeFamily::equispaced;
  double final_time = -1;  // < 0: scenario default

  ViscosityMode viscosity = ViscosityMode::novel;
  bool viscosity_per_stage = false;
  double composite_cap = 4e6;

  StepperOptions stepper;
  PhysicalConstants physics;

  int cadence = 1;     // CSV row every n steps (plus the last)
  int progress = 0;    // progress line every n steps, 0 = off
  std::vector<double> snapshot_times;
  std::string output_dir = "out";
  int threads = 1;

  double fit_t0 = -1, fit_t1 = -1;  // override of the scenario fit window

  double reverse_time = 5;
  std::vector<double> converge_x_nodes, converge_v_nodes;

  // ConfigError on unknown keys, wrong types or out-of-range values.
  static RunConfig from_values(const std::map<std::string, ConfigValue>& kv);
  void validate() const;
  nlohmann::json to_json() const;
};

RunConfig load_config(const std::string& path);

}  // namespace vmfem
