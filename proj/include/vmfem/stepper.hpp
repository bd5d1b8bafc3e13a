#pragma once
// Coupled (f, E1, E2, B3) method-of-lines system, CFL control and the
// five-stage fourth-order SSP Runge-Kutta scheme.

#include <functional>
#include <span>
#include <vector>

#include "vmfem/densities.hpp"
#include "vmfem/fem.hpp"
#include "vmfem/maxwell.hpp"
#include "vmfem/operators.hpp"
#include "vmfem/viscosity.hpp"

namespace vmfem {

// τ = λ h_min / (k β_max); β_max = 0 gives max_dt. std::invalid_argument for λ <= 0.
double cfl_dt(double h_min, double beta_max, double lambda, int k, double max_dt);

using RhsFn = std::function<void(std::span<const double>, std::span<double>)>;

struct SsprkWorkspace {
  std::vector<double> u0, u2, u3, l, l3;
};

// Shu-Osher form, all convex weights nonnegative.
struct Ssprk54 {
  // Published weights are rounded to 15 digits, and the last-stage ones then sum
  // to 1 + 1e-15, a steady mass gain per step. One weight of each convex
  // combination is derived from the others, each subtraction exact in binary.
  static constexpr double a1 = 0.391752226571890;
  static constexpr double b2[3] = {1.0 - 0.555629506348765, 0.555629506348765, 0.368410593050371};
  static constexpr double b3[3] = {0.620101851488403, 1.0 - 0.620101851488403, 0.251891774271694};
  static constexpr double b4[3] = {1.0 - 0.821920045606868, 0.821920045606868, 0.544974750228521};
  // u5 = c[0] u2 + c[1] u3 + c[2] τL(u3) + c[3] u4 + c[4] τL(u4)
  static constexpr double c5[5] = {0.517231671970585, (1.0 - 0.517231671970585) - 0.386708617503269,
                                   0.063692468666290, 0.386708617503269, 0.226007483236906};
};

void ssprk54_step(std::span<double> u, double tau, const RhsFn& rhs, SsprkWorkspace& ws);
void forward_euler_step(std::span<double> u, double tau, const RhsFn& rhs,
                        std::vector<double>& ws);

class CoupledSystem {
 public:
  CoupledSystem(const TensorGrid& grid, PhysicalConstants pc, bool electrostatic);
  CoupledSystem(const CoupledSystem&) = delete;
  CoupledSystem& operator=(const CoupledSystem&) = delete;

  const TensorGrid& grid() const { return *grid_; }
  const MaxwellSolver& maxwell() const { return mw_; }
  const MarginalWeights& weights() const { return w_; }
  const ConstantFactors& factors() const { return cf_; }
  const PeriodicStencil& velocity_mass() const { return mass_v_; }
  bool electrostatic() const { return electrostatic_; }
  double background() const { return rho0_; }
  void set_background(double rho0) { rho0_ = rho0; }

  // state layout [f | e1 | e2 | b3]
  std::size_t size() const { return grid_->size() + 3 * grid_->nx(); }
  std::vector<double> make_state() const { return std::vector<double>(size(), 0.0); }
  std::span<const double> f(std::span<const double> u) const { return u.first(grid_->size()); }
  std::span<double> f(std::span<double> u) const { return u.first(grid_->size()); }
  ConstFieldView fields(std::span<const double> u) const;
  FieldView fields(std::span<double> u) const;

  void set_viscosity(const ViscosityState& s);
  const ViscosityState& viscosity() const { return visc_; }

  void rhs(std::span<const double> u, std::span<double> du);
  // L2 projection of β·∇f (no diffusion)
  void advection(std::span<const double> u, std::span<double> out);
  // max(|v|_max, (q/m)(max|E| + v_max max|B|))
  double beta_max(std::span<const double> u) const;
  double v_max() const { return v_max_; }

 private:
  void field_factors(std::span<const double> u);

  const TensorGrid* grid_;
  PhysicalConstants pc_;
  bool electrostatic_;
  double rho0_ = 0.0;
  ConstantFactors cf_;
  VlasovOperator op_;
  MaxwellSolver mw_;
  MarginalWeights w_;
  PeriodicStencil mass_v_;
  TensorSpace cg_x_, cg_v_;
  WeightedStiffness stiff_x_, stiff_v_;
  double v_max_;
  ViscosityState visc_;
  DiffusionFactors diff_;
  bool has_diffusion_ = false;
  FieldFactors ff_;
  CellQuadValues q1_, q2_, qb_;
};

struct StepperOptions {
  enum class Integrator { ssprk54, forward_euler };
  Integrator integrator = Integrator::ssprk54;
  double cfl = 0.4;
  double max_dt = 0.1;
  double fixed_dt = 0.0;  // > 0 replaces the CFL rule
  bool viscosity_per_stage = false;
};

struct StepInfo {
  std::size_t step;
  double t;
  double tau;  // step just taken (0 for the initial call)
  const ViscosityState* viscosity;
};

// Residual -> viscosity -> τ -> RK, once per step.
class Stepper {
 public:
  Stepper(CoupledSystem& sys, ViscosityModel& visc, StepperOptions opt);

  // Advances u from t by one step, never past t_final; returns τ.
  // NumericalError on non-finite state.
  double step(std::vector<double>& u, double& t, double t_final);
  using Observer = std::function<void(const StepInfo&, std::span<const double>)>;
  // Observer is called for the initial state and after every step.
  std::size_t advance(std::vector<double>& u, double& t, double t_final, const Observer& obs,
                      std::size_t max_steps = static_cast<std::size_t>(-1));

 private:
  CoupledSystem* sys_;
  ViscosityModel* visc_;
  StepperOptions opt_;
  SsprkWorkspace ws_;
  std::vector<double> euler_ws_, adv_;
  std::size_t steps_ = 0;
};

}  // namespace vmfem
