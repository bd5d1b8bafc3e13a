#pragma once
// Tensor-product finite element spaces on a CartesianMesh. Each direction is
// either continuous Q_k (cg) or discontinuous Q_{k-1} with nodes at the k
// Gauss points of the cell (dg). Both have cells*k unknowns per direction, so
// every bilinear form between them is a square periodic stencil of bandwidth k.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "vmfem/grid.hpp"
#include "vmfem/linalg.hpp"

namespace vmfem {

enum class SpaceKind { cg, dg };

class AxisSpace {
 public:
  AxisSpace(const Axis& axis, SpaceKind kind);

  SpaceKind kind() const { return kind_; }
  const Axis& axis() const { return *axis_; }
  int local_count() const { return static_cast<int>(ref_.size()); }
  std::size_t size() const { return axis_->size(); }
  std::size_t global(std::size_t cell, int a) const;
  const std::vector<double>& ref_nodes() const { return ref_; }

 private:
  const Axis* axis_;
  SpaceKind kind_;
  std::vector<double> ref_;
};

// values/derivatives (w.r.t. the reference coordinate) at quadrature points, [q][a]
struct AxisTable {
  int nq = 0, nl = 0;
  std::vector<double> val, der;
};
AxisTable tabulate(const AxisSpace& s, const QuadratureRule& q);

class TensorSpace {
 public:
  TensorSpace(const CartesianMesh& mesh, std::vector<SpaceKind> kinds);
  static TensorSpace continuous(const CartesianMesh& mesh);

  const CartesianMesh& mesh() const { return *mesh_; }
  std::size_t dim() const { return axes_.size(); }
  const AxisSpace& axis(std::size_t d) const { return axes_[d]; }
  SpaceKind kind(std::size_t d) const { return axes_[d].kind(); }
  std::size_t size() const { return mesh_->size(); }
  const std::vector<std::size_t>& dims() const { return mesh_->dims(); }

 private:
  const CartesianMesh* mesh_;
  std::vector<AxisSpace> axes_;
};

// Values at quadrature points: cell-major, tensor quadrature index last-direction fastest.
using CellQuadValues = std::vector<double>;

// Physical coordinates of all quadrature points, per direction.
std::vector<CellQuadValues> quadrature_coordinates(const CartesianMesh& mesh, int nq);
// Quadrature weights including the cell Jacobian.
CellQuadValues quadrature_weights(const CartesianMesh& mesh, int nq);
std::size_t quad_points_per_cell(const CartesianMesh& mesh, int nq);

// u_h (or d u_h / d x_dir when dir >= 0) at all quadrature points.
CellQuadValues evaluate(const TensorSpace& s, std::span<const double> coeffs, int nq,
                        int dir = -1);
// Same at the tensor product of arbitrary reference points (per direction) in every cell.
CellQuadValues evaluate_points(const TensorSpace& s, std::span<const double> coeffs,
                               std::span<const double> points, int dir = -1);
CellQuadValues evaluate_closure(const CartesianMesh& mesh, int nq,
                                const std::function<double(std::span<const double>)>& fn);

// sum over cells and points of coef * (test or its derivative) * (trial or its derivative);
// coef empty means 1, deriv = -1 means no derivative, otherwise the direction.
PeriodicStencil assemble_form(const TensorSpace& test, const TensorSpace& trial, int nq,
                              int test_deriv, int trial_deriv, const CellQuadValues& coef = {});

// (coef, test_i) or (coef, d test_i / d x_dir)
std::vector<double> assemble_load(const TensorSpace& test, int nq, const CellQuadValues& coef,
                                  int test_deriv = -1);

// 1D form on one direction: sum of w(x) * test^(td) * trial^(sd) over cells
PeriodicStencil assemble_axis_form(const AxisSpace& test, const AxisSpace& trial, int nq,
                                   bool test_deriv, bool trial_deriv,
                                   const std::function<double(double)>& weight = {});
PeriodicStencil axis_mass(const AxisSpace& s);  // exact with k + 2 points

// Σ_l (ν_l ∂_l w, ∂_l u) with each ν_l a CG coefficient vector of the space.
// Per-cell tables are precomputed once (uniform cells), so reassembly is a
// gather and a small contraction per cell. Matches assemble_form with the
// interpolated coefficient at nq points.
class WeightedStiffness {
 public:
  WeightedStiffness() = default;
  WeightedStiffness(const TensorSpace& s, int nq);
  // Empty or all-zero ν_l are skipped; std::invalid_argument on negative values.
  void assemble(const std::vector<std::vector<double>>& nu, PeriodicStencil& out) const;

 private:
  const TensorSpace* s_ = nullptr;
  std::size_t nlt_ = 0, nc_ = 0;
  std::vector<std::vector<double>> t_;  // per direction: [e][a][b]
  std::vector<std::size_t> pair_oi_, nodes_;  // nodes_: nc x nlt
};

// Inverse mass of a tensor space (Kronecker of 1D factors).
KroneckerSolver mass_solver(const TensorSpace& s);
PeriodicStencil mass_stencil(const TensorSpace& s);

std::vector<double> interpolate(const TensorSpace& s,
                                const std::function<double(std::span<const double>)>& fn);
std::vector<double> l2_project(const TensorSpace& s,
                               const std::function<double(std::span<const double>)>& fn,
                               int nq);
// ||u_h - fn||_{L2} by quadrature
double l2_error(const TensorSpace& s, std::span<const double> coeffs,
                const std::function<double(std::span<const double>)>& fn, int nq);

}  // namespace vmfem
