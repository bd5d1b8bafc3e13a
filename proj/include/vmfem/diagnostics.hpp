#pragma once
// Per-step diagnostics, CSV/JSON output helpers and rate fits.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vmfem/stepper.hpp"

namespace vmfem {

struct DiagnosticsRecord {
  std::size_t step = 0;
  double time = 0, tau = 0;
  double mass = 0;                     // ∫ f
  double momentum1 = 0, momentum2 = 0;  // m ∫ f v + ε0 ∫ E × B
  double kinetic = 0;                  // ½ m ∫ f |v|²
  double e1_energy = 0, e2_energy = 0, b3_energy = 0;
  double electric_energy = 0;  // e1 + e2
  double total_energy = 0;
  double l2_squared = 0;  // ∫ f²
  double gauss_error = 0;
  double f_min = 0, f_max = 0;
  double nu_x_max = 0, nu_v_max = 0;
  double residual_clamp = 0;
};

DiagnosticsRecord measure(const CoupledSystem& sys, std::span<const double> u, double t,
                          double tau = 0.0, std::size_t step = 0,
                          const ViscosityState* visc = nullptr);

inline constexpr int kCsvSchemaVersion = 1;
std::vector<std::string> csv_columns();
void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, const DiagnosticsRecord& r);
// Value of a named column (as in csv_columns()).
double column_value(const DiagnosticsRecord& r, const std::string& name);

// Least-squares slope of ln(values) against time over [t0, t1].
// std::invalid_argument if fewer than 10 samples or a nonpositive value in the window.
double fit_rate(std::span<const double> times, std::span<const double> values, double t0,
                double t1);

// Slope of ln(local maxima) over [t0, t1]; needs at least 3 maxima.
struct EnvelopeFit {
  double rate = 0;
  std::size_t peaks = 0;
  std::vector<double> peak_times, peak_values;
};
EnvelopeFit fit_envelope(std::span<const double> times, std::span<const double> values,
                         double t0, double t1);

// 64-bit FNV-1a
std::uint64_t fnv1a(const std::string& s);

}  // namespace vmfem
