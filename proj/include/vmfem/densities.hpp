#pragma once
// Exact marginals of f_h: charge and current densities on V_x, the velocity
// marginal and its flux on V_v, and the viscosity-modified current.

#include <span>
#include <vector>

#include "vmfem/fem.hpp"
#include "vmfem/grid.hpp"

namespace vmfem {

struct MarginalWeights {
  std::vector<double> x;                        // ∫ φ_i dx
  std::vector<double> v;                        // ∫ ϕ_j dv
  std::vector<std::vector<double>> v_moment;    // ∫ v_l ϕ_j dv
  std::vector<double> v_energy;                 // ∫ |v|^2 ϕ_j dv
  std::vector<std::vector<double>> v_nodes;     // v_l at node j
};

MarginalWeights marginal_weights(const TensorGrid& grid);

// ∫ E_l φ_i dx and ∫ B_3 φ_i dx against the continuous x-basis
struct FieldMoments {
  std::vector<double> e1, e2, b3;  // empty = zero field
};

struct Marginals {
  std::vector<double> rho;                     // N_x
  std::vector<std::vector<double>> current;    // d_v x N_x
  std::vector<double> u_v;                     // N_v
  std::vector<std::vector<double>> flux_v;     // d_v x N_v
};

std::vector<double> charge_density(const TensorGrid& grid, const MarginalWeights& w,
                                   std::span<const double> f, double charge = 1.0);
std::vector<std::vector<double>> current_density(const TensorGrid& grid, const MarginalWeights& w,
                                                 std::span<const double> f, double charge = 1.0);
// u_v = ∫ f dx; F_v = ∫ (E + v×B) f dx with v collocated at the velocity node
void velocity_marginal(const TensorGrid& grid, const MarginalWeights& w,
                       std::span<const double> f, const FieldMoments& fm,
                       std::vector<double>& u_v, std::vector<std::vector<double>>& flux_v);

// All of the above in one sweep over f.
Marginals compute_marginals(const TensorGrid& grid, const MarginalWeights& w,
                            std::span<const double> f, const FieldMoments& fm,
                            double charge = 1.0);

// Weak modified current (J_l - ν_l ∂_l ρ, η) for η in `test`. J_l, ρ and ν_l are
// nodal on the continuous x-space; ν_l empty or l >= d_x means no correction.
std::vector<double> modified_current_load(const TensorSpace& test, std::span<const double> j_l,
                                          std::span<const double> rho,
                                          std::span<const double> nu_l, int l);

// Nodal L2-consistent representation of J̃_l in V_x (diagnostics).
std::vector<double> modified_current(const CartesianMesh& x, std::span<const double> j_l,
                                     std::span<const double> rho, std::span<const double> nu_l,
                                     int l);

}  // namespace vmfem
