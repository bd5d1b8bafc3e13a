#pragma once
// Factor matrices of the Kronecker-structured Vlasov system and the
// right-hand side evaluation. Velocity space is two-dimensional (v1, v2);
// physical space has one or two directions.

#include <cstddef>
#include <span>
#include <vector>

#include "vmfem/fem.hpp"
#include "vmfem/grid.hpp"
#include "vmfem/linalg.hpp"

namespace vmfem {

// 1D factors of one velocity direction
struct VelocityAxisFactors {
  PeriodicStencil mass;      // ∫ φ_j φ_i
  PeriodicStencil deriv;     // ∫ φ_j' φ_i
  PeriodicStencil weighted;  // ∫ v φ_j φ_i
};

struct ConstantFactors {
  std::vector<PeriodicStencil> x_mass_1d;  // per x-direction
  PeriodicStencil mass_x;                  // M^x
  std::vector<PeriodicStencil> deriv_x;    // A^{x,l} on the full x-mesh
  std::vector<VelocityAxisFactors> v;      // per v-direction
  KroneckerSolver mass_x_solver;
  KroneckerSolver mass_v_solver;
  KroneckerSolver phase_solver;  // (M^x ⊗ M^v)^{-1}
};

ConstantFactors assemble_constant(const TensorGrid& grid);

// Full velocity-mesh stencils built from the 1D factors (reference forms).
PeriodicStencil velocity_mass(const ConstantFactors& cf);
PeriodicStencil velocity_weighted(const ConstantFactors& cf, std::size_t l);  // C^{v,l}
PeriodicStencil velocity_deriv(const ConstantFactors& cf, std::size_t l);     // A^{v,l}
PeriodicStencil velocity_curl(const ConstantFactors& cf);                     // G^{v,3}

struct FieldFactors {
  PeriodicStencil e1, e2, b3;  // C^{x,1}(E), C^{x,2}(E), C^{x,3}(B)
  bool e1_zero = true, e2_zero = true, b3_zero = true;
};

// Number of points per direction used for field-weighted x-matrices.
int field_quadrature_points(int degree);

// Weighted spatial mass matrices from field values at the quadrature points
// of field_quadrature_points(k); an empty table means a zero field.
FieldFactors assemble_field_weighted(const TensorGrid& grid, const CellQuadValues& e1,
                                     const CellQuadValues& e2, const CellQuadValues& b3);

// ∑_l ∫ ν_l ∂_l φ_j ∂_l φ_i with ν_l interpolated from nodal values (one vector per
// direction, empty = zero). std::invalid_argument on negative values.
PeriodicStencil assemble_diffusion(const CartesianMesh& mesh,
                                   const std::vector<std::vector<double>>& nu);

struct DiffusionFactors {
  PeriodicStencil dx, dv;
  bool dx_zero = true, dv_zero = true;
};

DiffusionFactors assemble_diffusion_factors(const TensorGrid& grid,
                                            const std::vector<std::vector<double>>& nu_x,
                                            const std::vector<std::vector<double>>& nu_v);

class VlasovOperator {
 public:
  VlasovOperator(const TensorGrid& grid, const ConstantFactors& cf);

  // out = (advection + diffusion) f, the bracket before the mass solve
  void apply_bracket(std::span<const double> f, const FieldFactors& ff,
                     const DiffusionFactors* diff, std::span<double> out);
  // out = -(M^x ⊗ M^v)^{-1} bracket
  void rhs(std::span<const double> f, const FieldFactors& ff, const DiffusionFactors* diff,
           std::span<double> out);

 private:
  const TensorGrid* grid_;
  const ConstantFactors* cf_;
  std::vector<std::size_t> dims_;
  std::size_t v1_axis_, v2_axis_;
  std::vector<double> g_m_, g_a_, g_c_, h_;
};

}  // namespace vmfem
