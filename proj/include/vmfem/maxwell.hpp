#pragma once
// Reduced Maxwell system for B = (0, 0, B3(x)) and E = (E1, E2)(x):
//   1D: E1 in DG Q_{k-1}, E2 in CG Q_k, B3 in DG Q_{k-1}
//   2D: E1 in DG x CG, E2 in CG x DG, B3 in DG x DG
// Faraday holds strongly, Ampère weakly; gradients of CG Q_k lie in the E-space.

#include <span>
#include <vector>

#include "vmfem/densities.hpp"
#include "vmfem/fem.hpp"
#include "vmfem/linalg.hpp"

namespace vmfem {

struct PhysicalConstants {
  double c = 1.0;
  double eps0 = 1.0;
  double charge = 1.0;
  double mass = 1.0;
};

// Views into the field part of a state vector, each of length N_x.
struct FieldView {
  std::span<double> e1, e2, b3;
};
struct ConstFieldView {
  std::span<const double> e1, e2, b3;
};

class MaxwellSolver {
 public:
  MaxwellSolver(const CartesianMesh& x, PhysicalConstants pc = {});

  const CartesianMesh& mesh() const { return *mesh_; }
  const PhysicalConstants& constants() const { return pc_; }
  std::size_t dim() const { return mesh_->dim(); }
  std::size_t size() const { return mesh_->size(); }
  const TensorSpace& e_space(int l) const { return e_spaces_[l]; }
  const TensorSpace& b_space() const { return b_space_; }
  const TensorSpace& cg_space() const { return cg_; }

  // Ampère/Faraday derivative; load_e[l] = (J̃_l, η) over the E_l space.
  void rhs(ConstFieldView fields, const std::vector<double>& load_e1,
           const std::vector<double>& load_e2, FieldView out, bool electrostatic) const;

  // E = -∇Φ with -ε0 ΔΦ = ρ - ρ0; returns (E1, E2) coefficient vectors
  std::vector<std::vector<double>> poisson_init(std::span<const double> rho, double rho0) const;

  // sqrt(sum_i (ε0 (E, ∇φ_i) + (ρ - ρ0, φ_i))^2)
  double gauss_error(ConstFieldView fields, std::span<const double> rho, double rho0) const;
  std::vector<double> gauss_residual(ConstFieldView fields, std::span<const double> rho,
                                     double rho0) const;

  // ½ ε0 ∫E_l², ½ (1/μ0) ∫B3²
  double electric_energy(int l, std::span<const double> e) const;
  double magnetic_energy(std::span<const double> b) const;
  // ∫ E_2 B_3 and ∫ E_1 B_3 (momentum coupling terms)
  double cross_integral(int l, std::span<const double> e, std::span<const double> b) const;

  // force-scaled (q/m) field values at the x quadrature points of the field rule
  void quadrature_values(ConstFieldView fields, CellQuadValues& e1, CellQuadValues& e2,
                         CellQuadValues& b3) const;
  // (q/m) ∫ field φ_i dx against the CG basis
  FieldMoments moments(ConstFieldView fields) const;
  // field values at the CG node positions of each cell, cell-major, (k+1)^d per cell
  void cell_node_values(ConstFieldView fields, CellQuadValues& e1, CellQuadValues& e2,
                        CellQuadValues& b3) const;

 private:
  const CartesianMesh* mesh_;
  PhysicalConstants pc_;
  TensorSpace cg_;
  std::vector<TensorSpace> e_spaces_;
  TensorSpace b_space_;
  std::vector<KroneckerSolver> e_mass_solvers_;
  std::vector<PeriodicStencil> e_mass_;
  PeriodicStencil b_mass_;
  PeriodicStencil cg_mass_;
  std::vector<PeriodicStencil> d_strong_;  // 1D CG -> DG derivative, per direction
  std::vector<PeriodicStencil> curl_;      // (B3, ∂η) rows E_l, cols B; E2 first
  std::vector<PeriodicStencil> grad_;      // (η_m, ∂_l φ_i) rows CG, cols E_l
  std::vector<PeriodicStencil> cg_e_;      // (η_m, φ_i) rows CG, cols E_l
  PeriodicStencil cg_b_;                   // (B-basis, φ_i)
  std::vector<PeriodicStencil> e_b_;       // (B-basis, η_i) rows E_l
  PeriodicStencil stiffness_;
  FactoredSPD poisson_direct_;  // 1D only
  std::vector<double> cg_weights_;
};

}  // namespace vmfem
