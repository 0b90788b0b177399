#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pvi {

/// Coordinates in up to three dimensions; unused trailing components are zero.
using Point = std::array<double, 3>;

/// Vertex indices of one simplex. Slots past dim()+1 hold -1.
using Cell = std::array<int, 4>;

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Conforming simplicial mesh of an interval (d=1), polygon (d=2) or
/// polyhedron (d=3).
///
/// Instances are immutable once built. build() normalizes orientation so that
/// every cell has positive measure and rejects meshes that are degenerate or
/// not conforming (a facet shared by more than two cells, or a vertex hanging
/// in the interior of another cell's facet).
class SimplicialMesh {
 public:
  static SimplicialMesh build(int dim, std::vector<Point> vertices,
                              std::vector<Cell> cells,
                              std::vector<int> vertex_tags = {},
                              std::vector<int> cell_tags = {});

  int dim() const { return dim_; }
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_cells() const { return cells_.size(); }

  std::span<const Point> vertices() const { return vertices_; }
  std::span<const Cell> cells() const { return cells_; }
  const Point& vertex(std::size_t i) const { return vertices_[i]; }
  const Cell& cell(std::size_t c) const { return cells_[c]; }

  std::span<const int> vertex_tags() const { return vertex_tags_; }
  std::span<const int> cell_tags() const { return cell_tags_; }

  /// Measure of each cell (length, area or volume).
  std::span<const double> cell_volumes() const { return volumes_; }
  double measure() const;

  /// Sorted indices of vertices on facets that belong to exactly one cell.
  std::span<const int> boundary_vertices() const { return boundary_list_; }
  bool is_boundary(std::size_t v) const { return boundary_flag_[v] != 0; }

  /// Maximum edge length over all cells.
  double h() const { return h_; }

  /// Axis-aligned bounding box.
  std::pair<Point, Point> bounding_box() const;
  double diameter() const;

  Point barycenter(std::size_t c) const;

  /// Barycentric coordinates of x with respect to cell c (dim()+1 entries).
  std::array<double, 4> barycentric(std::size_t c, const Point& x) const;

 private:
  SimplicialMesh() = default;

  int dim_ = 0;
  std::vector<Point> vertices_;
  std::vector<Cell> cells_;
  std::vector<int> vertex_tags_;
  std::vector<int> cell_tags_;
  std::vector<double> volumes_;
  std::vector<char> boundary_flag_;
  std::vector<int> boundary_list_;
  double h_ = 0.0;
};

/// Signed measure of the simplex spanned by the given vertices.
double signed_volume(int dim, std::span<const Point> simplex);

SimplicialMesh generate_interval(double a, double b, int n_cells);

/// Structured m x m grid of rectangles, each cut into two triangles along the
/// diagonal from its lower-left to its upper-right corner. A grid with
/// k*m cells per side is a nested refinement of the grid with m.
SimplicialMesh generate_rectangle(std::array<double, 2> x_range,
                                  std::array<double, 2> y_range, int m);

/// Axis spacing of a structured rectangle grid: (x_range length) / m. The
/// convergence studies label 2D levels by this value, while
/// SimplicialMesh::h() reports the longest edge (the cell diagonal).
double rectangle_axis_spacing(std::array<double, 2> x_range, int m);

struct RefinedMesh {
  SimplicialMesh mesh;
  /// parent[c] is the index of the coarse cell containing fine cell c.
  std::vector<int> parent;
};

/// Bisects every segment (d=1) or red-refines every triangle into four (d=2).
RefinedMesh refine_uniform(const SimplicialMesh& mesh);

/// Sequence of uniformly refined meshes with parent maps between levels.
class MeshHierarchy {
 public:
  explicit MeshHierarchy(SimplicialMesh coarsest);

  /// Appends the uniform refinement of the finest level and returns it.
  const SimplicialMesh& refine();

  std::size_t num_levels() const { return levels_.size(); }
  const SimplicialMesh& level(std::size_t k) const { return levels_.at(k); }
  /// Parent map from level k+1 to level k.
  std::span<const int> parent_map(std::size_t k) const { return parents_.at(k); }

 private:
  std::vector<SimplicialMesh> levels_;
  std::vector<std::vector<int>> parents_;
};

/// Reads the whitespace-separated text format:
///   dim n_vertices n_cells
///   x [y [z]] [tag]          (n_vertices lines)
///   i0 i1 [i2 [i3]] [tag]    (n_cells lines, 0-based indices)
/// Blank lines and lines starting with '#' are ignored.
SimplicialMesh import_mesh(const std::filesystem::path& path,
                           const std::string& format = "pvi-text");
SimplicialMesh parse_mesh_text(const std::string& text);
std::string format_mesh_text(const SimplicialMesh& mesh);

/// Bucket grid over cells for point location.
class PointLocator {
 public:
  explicit PointLocator(const SimplicialMesh& mesh);

  /// Index of a cell whose closure contains x (within a relative tolerance),
  /// or -1.
  int locate(const Point& x) const;

 private:
  std::size_t bin_of(const Point& x, int axis) const;

  const SimplicialMesh* mesh_;
  Point lo_{}, inv_width_{};
  std::array<std::size_t, 3> nbins_{1, 1, 1};
  std::vector<std::vector<int>> bins_;
  double tol_ = 0.0;
};

}  // namespace pvi
