#pragma once
// Artificial viscosity: first-order (upwind strength), conventional residual
// on the full phase space, and the marginal-residual construction.

#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vmfem/densities.hpp"
#include "vmfem/fem.hpp"
#include "vmfem/grid.hpp"
#include "vmfem/maxwell.hpp"

namespace vmfem {

enum class ViscosityMode { none, first_order, conventional, novel };

ViscosityMode parse_viscosity_mode(const std::string& s);  // std::invalid_argument
std::string mode_name(ViscosityMode m);

struct ViscosityState {
  ViscosityMode mode = ViscosityMode::none;
  std::vector<std::vector<double>> nu_x;  // per x-direction, N_x each; empty = zero
  std::vector<std::vector<double>> nu_v;  // per v-direction, N_v each
  bool residual_based = false;            // false while the BDF2 history fills
  double clamp = 0.0;                     // largest negative projected residual set to 0
  double max_x() const;
  double max_v() const;
};

// Cell end points of the support of every 1D node, per axis; wraps periodically.
struct SupportEnds {
  std::vector<std::vector<std::vector<double>>> ends;  // [axis][node] -> coordinates
  static SupportEnds build(const CartesianMesh& mesh);
};

// Cells containing each node, flattened cell index (last direction fastest).
std::vector<std::vector<std::size_t>> node_cells(const CartesianMesh& mesh);

// Force-field samples over the support of each x-node: (q/m)(E1, E2, B3) at
// the CG node positions of every cell touching the node.
struct FieldSamples {
  std::vector<std::size_t> offset;  // N_x + 1
  std::vector<double> e1, e2, b3;
  static FieldSamples build(const MaxwellSolver& mw, ConstFieldView fields,
                            const std::vector<std::vector<std::size_t>>& cells_of_node);
  double max_e() const;  // max |(E1, E2)|
  double max_b() const;
};

// ε^L on phase-space nodes per direction, x-directions first, each of size N_x N_v.
std::vector<std::vector<double>> first_order_nodal(const TensorGrid& grid,
                                                   const FieldSamples& fs);
// Averages over the other variable: (ν^L_x per x-direction, ν^L_v per v-direction).
std::pair<std::vector<std::vector<double>>, std::vector<std::vector<double>>> reduce_first_order(
    const TensorGrid& grid, const std::vector<std::vector<double>>& eps);
// Same as reduce_first_order(first_order_nodal(...)) without the phase-space array.
std::pair<std::vector<std::vector<double>>, std::vector<std::vector<double>>> first_order_reduced(
    const TensorGrid& grid, const FieldSamples& fs);

// Variable-step BDF2 derivative at level n; tau_n = t_n - t_{n-1}, tau_n1 = t_{n-1} - t_{n-2}.
std::vector<double> bdf2(std::span<const double> un, std::span<const double> un1,
                         std::span<const double> un2, double tau_n, double tau_n1);

struct MarginalHistory {
  struct Level {
    double t;
    std::vector<double> u_x, u_v;
  };
  std::deque<Level> levels;  // oldest first, at most 3
  void push(double t, std::vector<double> u_x, std::vector<double> u_v);
  bool ready() const { return levels.size() == 3; }
};

// (R, φ_i) = (|du + Σ_l ∂_l F_l|, φ_i) on the continuous space of `mesh`; flux
// components beyond the mesh dimension are ignored. Negative values are set
// to zero and the largest such magnitude is added to `clamp` via max.
std::vector<double> residual_projection(const CartesianMesh& mesh, std::span<const double> du,
                                        const std::vector<std::vector<double>>& flux,
                                        double& clamp);

struct Normalization {
  std::vector<double> lambda;  // nodal Λ
  double u_inf = 0.0;          // ||u||_∞, for the division guard
};
// Λ_i = (1 - 0.5 local range / global range) ||u - ū||_∞, ū the integral mean.
Normalization normalization(const CartesianMesh& mesh, std::span<const double> u);

// Residual projection and normalization on one mesh with the continuous
// space, its mass factors and quadrature cached.
class MeshProjector {
 public:
  explicit MeshProjector(const CartesianMesh& mesh);
  std::vector<double> residual(std::span<const double> du,
                               const std::vector<std::vector<double>>& flux, double& clamp) const;
  Normalization normalization(std::span<const double> u) const;
  double integral_mean(std::span<const double> u) const;

 private:
  const CartesianMesh* mesh_;
  TensorSpace cg_;
  KroneckerSolver solver_;
  std::vector<double> w_;  // M 1
  double vol_ = 0.0;
  int nq_ = 0;
};

// R Λ / (Λ² + 1e-14 ||u||²_∞)
double guarded_ratio(double r, double lambda, double u_inf);

// ν^H = min(ν^L, (Δz_l/k)² R/Λ d_z/(d_x+d_v)) per direction and node.
ViscosityState novel_high_order(const TensorGrid& grid,
                                const std::vector<std::vector<double>>& nu_lx,
                                const std::vector<std::vector<double>>& nu_lv,
                                std::span<const double> r_x, std::span<const double> r_v,
                                const Normalization& n_x, const Normalization& n_v);

// Phase-space residual viscosity (reference mode). The advection term is the
// L2 projection of β·∇f supplied by the caller; the result is averaged to
// x-only and v-only fields so that it fits the Kronecker diffusion structure.
class ConventionalResidual {
 public:
  ConventionalResidual(const TensorGrid& grid, std::size_t size_cap);
  // advection = projected β·∇f at level n
  ViscosityState compute(std::span<const double> fn, std::span<const double> fn1,
                         std::span<const double> fn2, double tau_n, double tau_n1,
                         std::span<const double> advection,
                         const std::vector<std::vector<double>>& eps_l) const;

 private:
  const TensorGrid* grid_;
  CartesianMesh mesh_;
};

// Per-step driver for all modes.
class ViscosityModel {
 public:
  ViscosityModel(const TensorGrid& grid, const MaxwellSolver& mw, ViscosityMode mode,
                 std::size_t conventional_cap = 4'000'000);

  ViscosityMode mode() const { return mode_; }
  bool needs_advection() const { return mode_ == ViscosityMode::conventional; }
  // State at time t; history is updated (a repeated t replaces the newest level).
  // `advection` is the projected β·∇f, only read in conventional mode.
  const ViscosityState& update(double t, std::span<const double> f, ConstFieldView fields,
                               std::span<const double> advection = {});
  const ViscosityState& state() const { return state_; }
  const FieldSamples& samples() const { return samples_; }

 private:
  const TensorGrid* grid_;
  const MaxwellSolver* mw_;
  ViscosityMode mode_;
  MarginalWeights w_;
  std::vector<std::vector<std::size_t>> cells_;
  MeshProjector px_, pv_;
  MarginalHistory hist_;
  std::deque<std::pair<double, std::vector<double>>> f_hist_;  // conventional only
  std::optional<ConventionalResidual> conventional_;
  FieldSamples samples_;
  ViscosityState state_;
};

}  // namespace vmfem
