#pragma once
// Cartesian phase-space meshes, Q_k Lagrange bases, Gauss quadrature.
// Composite layout contract: l = i * N_v + j (velocity index fastest),
// and inside each mesh the last direction is fastest.

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace vmfem {

enum class NodeFamily { equispaced, gauss_lobatto };

struct DomainSpec {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<int> cells;
  int degree = 1;
  std::vector<bool> periodic;
  NodeFamily nodes = NodeFamily::equispaced;

  std::size_t dim() const { return lower.size(); }
  void validate() const;  // std::invalid_argument on bad input
};

struct QuadratureRule {
  std::vector<double> points;  // on [0, 1]
  std::vector<double> weights;
  int exact_degree = 0;
};

QuadratureRule quadrature_rule(int n_points);

// Lagrange nodes of degree k on [0, 1] (k + 1 of them, endpoints included).
std::vector<double> reference_nodes(int degree, NodeFamily family = NodeFamily::equispaced);

struct BasisValues {
  std::vector<double> values;
  std::vector<double> derivatives;
};

BasisValues lagrange_eval(std::span<const double> nodes, double t);
BasisValues basis_eval(int degree, double t, NodeFamily family = NodeFamily::equispaced);

// One periodic direction: cells * k unique nodes, node c*k + a is local node a of cell c.
class Axis {
 public:
  Axis(double lower, double upper, int cells, int degree, NodeFamily family);

  std::size_t size() const { return n_; }
  int cells() const { return cells_; }
  int degree() const { return degree_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double length() const { return upper_ - lower_; }
  double h() const { return h_; }
  double node(std::size_t i) const;
  std::size_t cell_node(std::size_t c, int a) const {
    return (c * static_cast<std::size_t>(degree_) + static_cast<std::size_t>(a)) % n_;
  }
  // offsets (lo <= 0 <= hi) of nodes sharing a cell with node i
  std::pair<int, int> support(std::size_t i) const;
  const std::vector<double>& ref_nodes() const { return ref_; }

 private:
  double lower_, upper_, h_;
  int cells_, degree_;
  std::size_t n_;
  std::vector<double> ref_;
};

class CartesianMesh {
 public:
  CartesianMesh() = default;
  explicit CartesianMesh(const DomainSpec& spec);

  const DomainSpec& spec() const { return spec_; }
  std::size_t dim() const { return axes_.size(); }
  std::size_t size() const { return size_; }
  int degree() const { return spec_.degree; }
  const Axis& axis(std::size_t d) const { return axes_[d]; }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t cell_count() const;
  double measure() const;
  double min_h() const;

  std::size_t flat(std::span<const std::size_t> idx) const;
  void unflat(std::size_t l, std::span<std::size_t> idx) const;
  double coordinate(std::size_t l, std::size_t d) const;
  // flattened indices of all nodes sharing a cell with node l (contains l)
  std::vector<std::size_t> support(std::size_t l) const;

 private:
  DomainSpec spec_;
  std::vector<Axis> axes_;
  std::vector<std::size_t> dims_;
  std::size_t size_ = 0;
};

class TensorGrid {
 public:
  TensorGrid(const DomainSpec& x_spec, const DomainSpec& v_spec);

  const CartesianMesh& x() const { return x_; }
  const CartesianMesh& v() const { return v_; }
  std::size_t nx() const { return x_.size(); }
  std::size_t nv() const { return v_.size(); }
  std::size_t size() const { return x_.size() * v_.size(); }
  int degree() const { return x_.degree(); }
  std::size_t composite(std::size_t i, std::size_t j) const { return i * v_.size() + j; }
  std::pair<std::size_t, std::size_t> split(std::size_t l) const {
    return {l / v_.size(), l % v_.size()};
  }
  double h_min() const;

 private:
  CartesianMesh x_, v_;
};

TensorGrid build_grid(const DomainSpec& x_spec, const DomainSpec& v_spec);

// Permutation of v-node indices taking the node at v to the node at -v.
std::vector<std::size_t> velocity_reflection(const TensorGrid& grid);

// Apply the reflection to a composite coefficient vector.
std::vector<double> reflect_velocity(const TensorGrid& grid, std::span<const double> f);

// Phase-space domain (x directions then v directions) of a tensor grid.
DomainSpec composite_spec(const TensorGrid& grid);

// Periodic domain from a node count per direction (count includes the repeated endpoint).
DomainSpec domain_from_nodes(std::vector<double> lower, std::vector<double> upper,
                             const std::vector<int>& nodes, int degree,
                             NodeFamily family = NodeFamily::equispaced);

}  // namespace vmfem
