#pragma once
// Built-in benchmark set-ups: initial data, domains, default resolutions and
// literature rates.

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vmfem/stepper.hpp"

namespace vmfem {

struct RateReference {
  double value = 0;
  std::string channel;     // diagnostics column
  bool amplitude = false;  // true: compare (energy slope)/2, false: the energy slope itself
  bool envelope = false;   // fit local maxima instead of all samples
  bool growth = true;      // damping rates are reported as positive numbers
  double t0 = 0, t1 = 0;   // fit window
};

using PhaseFn = std::function<double(std::span<const double> x, std::span<const double> v)>;
using SpaceFn = std::function<double(std::span<const double> x)>;

struct Scenario {
  std::string name, description;
  std::size_t dx = 1;
  std::map<std::string, double> params;
  std::vector<double> x_lower, x_upper, v_lower, v_upper;
  int x_nodes = 31, v_nodes = 61, degree = 1;
  double final_time = 1.0;
  bool electrostatic = false;
  std::optional<RateReference> rate;
  PhaseFn f0;
  SpaceFn e1, e2, b3;  // exact initial fields
};

std::vector<std::string> scenario_names();
// std::invalid_argument for unknown names or parameters.
Scenario make_scenario(const std::string& name, const std::map<std::string, double>& overrides = {});

// Velocity-symmetric periodic grid for a scenario.
TensorGrid scenario_grid(const Scenario& s, int x_nodes, int v_nodes, int degree,
                         NodeFamily family = NodeFamily::equispaced);

// f nodal interpolant, E from the Poisson solve with ρ0 = mean ρ, B3 and E2
// interpolated; sets the system background density.
std::vector<double> build_initial(CoupledSystem& sys, const Scenario& s);

// Damping-rate formula for 2D2V linear Landau damping (energy rate).
double landau_energy_rate(double theta);

}  // namespace vmfem
