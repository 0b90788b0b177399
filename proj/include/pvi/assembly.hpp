#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <span>
#include <vector>

#include "pvi/mesh.hpp"

namespace pvi {

/// Compressed-row sparse matrix.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
/// Nodal coefficient vector of a P1 field, one entry per mesh vertex.
using NodalField = Eigen::VectorXd;

using ScalarMap = std::function<double(double)>;
/// Integrand weight at a quadrature point: position and the values of the
/// interpolated input fields there.
using QuadratureWeight =
    std::function<double(const Point& x, std::span<const double> values)>;
using SourceFn = std::function<double(const Point& x, double t)>;

/// Symmetric quadrature rule of degree two on the reference simplex, in
/// barycentric coordinates. Weights sum to one.
struct QuadratureRule {
  std::vector<std::array<double, 4>> points;
  std::vector<double> weights;
};
const QuadratureRule& quadrature_rule(int dim);

/// P1 assembly on a fixed mesh. The sparsity pattern and cellwise gradients
/// are computed once; each assembly fills a fresh value array in a fixed cell
/// order, so results do not depend on how often or where it runs.
class Assembler {
 public:
  explicit Assembler(const SimplicialMesh& mesh);

  const SimplicialMesh& mesh() const { return *mesh_; }
  std::size_t size() const { return mesh_->num_vertices(); }

  /// Consistent mass matrix.
  SparseMatrix mass() const;

  /// Entries: integral of map(w_h) phi_i phi_j, with w_h the P1 interpolant of
  /// `weight`, evaluated at the quadrature points.
  SparseMatrix weighted_mass(const NodalField& weight, const ScalarMap& map) const;

  /// General weighted mass: the weight callback sees the quadrature point and
  /// the interpolated values of every field in `fields`.
  SparseMatrix weighted_mass(std::span<const NodalField* const> fields,
                             const QuadratureWeight& weight) const;

  /// Entries: integral of map(c_h) grad phi_i . grad phi_j. Throws if the map
  /// is negative at any quadrature point, naming the cell.
  SparseMatrix stiffness(const NodalField& coefficient, const ScalarMap& map) const;
  /// Unit-coefficient stiffness.
  SparseMatrix stiffness() const;

  /// Entries: integral of f(x, t) phi_i.
  Eigen::VectorXd load(const SourceFn& f, double t) const;

  /// Gradient of the barycentric coordinate of local vertex k in cell c.
  const Point& gradient(std::size_t c, int k) const {
    return grads_[c * 4 + static_cast<std::size_t>(k)];
  }

 private:
  const SimplicialMesh* mesh_;
  int nloc_;
  std::vector<int> row_ptr_, col_idx_;
  // Slot in the value array of local entry (a, b) of cell c.
  std::vector<int> slot_;
  std::vector<Point> grads_;
  std::vector<Point> quad_x_;  // physical quadrature points, per cell
};

SparseMatrix assemble_mass(const SimplicialMesh& mesh);
SparseMatrix assemble_weighted_mass(const SimplicialMesh& mesh,
                                    const NodalField& weight,
                                    const ScalarMap& pointwise_map);
SparseMatrix assemble_stiffness(const SimplicialMesh& mesh,
                                const NodalField& coefficient,
                                const ScalarMap& coefficient_map);
Eigen::VectorXd assemble_load(const SimplicialMesh& mesh, const SourceFn& source,
                              double t);

/// Diagonal matrix of row sums.
SparseMatrix lumped(const SparseMatrix& m);

NodalField nodal_interpolate(const SimplicialMesh& mesh,
                             const std::function<double(const Point&)>& f);
NodalField nodal_interpolate(const SimplicialMesh& mesh,
                             const std::function<double(const Point&, int)>& f);

}  // namespace pvi
