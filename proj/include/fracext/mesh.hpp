#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace fracext {

/// Function on Omega evaluated at (x1, x2); x2 is ignored when n = 1.
using SpatialFunction = std::function<double(double, double)>;

/// Partition of [0, Y] with points y_k = (k/M)^grading * Y, clustered at y = 0.
struct GradedInterval {
  std::vector<double> points;
  double grading = 1.0;
  double height = 1.0;

  int cells() const { return static_cast<int>(points.size()) - 1; }
  double width(int k) const { return points[k + 1] - points[k]; }
};

GradedInterval graded_points(int cells, double grading, double height);

/// 1.05 * 3/(2s): strictly above the threshold needed for the near-optimal rate.
double default_grading(double s);

/// Y = 1 + ln(#cells)/3.
double truncation_height(std::size_t num_base_cells);

/// Number of cells of the extended direction matched to a base mesh: round(#cells^(1/n)), at least 1.
int matched_interval_cells(std::size_t num_base_cells, int dim);

/// Conforming mesh of (0,1)^n made of intervals (n = 1) or axis-aligned rectangles (n = 2).
///
/// Cell vertex order is tensor order: for n = 1 {left, right}; for n = 2
/// {(x0,y0), (x1,y0), (x0,y1), (x1,y1)}.  Vertices are stored lexicographically
/// with x fastest, so the free-vertex enumeration is lexicographic in x'.
struct BaseMesh {
  int dim = 1;
  std::vector<std::array<double, 2>> vertices;
  std::vector<std::array<int, 4>> cells;
  std::vector<bool> boundary;
  /// Bisection counters, one per cell (n = 1 only).
  std::vector<int> generation;

  std::size_t num_cells() const { return cells.size(); }
  std::size_t num_vertices() const { return vertices.size(); }
  int vertices_per_cell() const { return dim == 1 ? 2 : 4; }
  /// Cell extents (hx, hy); hy = 1 for n = 1.
  std::array<double, 2> cell_size(std::size_t c) const;
  double cell_diameter(std::size_t c) const;
  std::size_t num_interior_vertices() const;
};

BaseMesh uniform_base(int dim, int cells_per_side);

/// Bisect the marked intervals at their midpoints (n = 1 only).
BaseMesh bisect_marked(const BaseMesh &base, std::span<const int> marked);

/// Tensor product of a base mesh with a graded interval, with Q1 DoF numbering.
///
/// Free DoFs are (interior base vertex, level l < M); DoF id = free_vertex * M + l,
/// so each vertical line occupies a contiguous index range.
class TensorMesh {
public:
  TensorMesh(BaseMesh base, GradedInterval interval);

  const BaseMesh &base() const { return base_; }
  const GradedInterval &interval() const { return interval_; }
  int dim() const { return base_.dim; }
  int levels() const { return interval_.cells(); }

  std::size_t num_elements() const { return base_.num_cells() * static_cast<std::size_t>(levels()); }
  std::size_t num_dofs() const { return free_vertices_.size() * static_cast<std::size_t>(levels()); }
  std::size_t num_lines() const { return free_vertices_.size(); }
  std::size_t num_nodes() const { return base_.num_vertices() * static_cast<std::size_t>(levels() + 1); }

  /// Global DoF of node (vertex, level), or -1 if the node is Dirichlet.
  long dof(std::size_t vertex, int level) const {
    const int f = free_index_[vertex];
    if (f < 0 || level >= levels())
      return -1;
    return static_cast<long>(f) * levels() + level;
  }
  /// Free index of a base vertex, -1 on the boundary.
  int free_index(std::size_t vertex) const { return free_index_[vertex]; }
  const std::vector<std::size_t> &free_vertices() const { return free_vertices_; }

  /// Dirichlet flag per node, node id = vertex * (M + 1) + level.
  const std::vector<bool> &dirichlet_mask() const { return dirichlet_; }

private:
  BaseMesh base_;
  GradedInterval interval_;
  std::vector<int> free_index_;
  std::vector<std::size_t> free_vertices_;
  std::vector<bool> dirichlet_;
};

TensorMesh build_tensor(const BaseMesh &base, const GradedInterval &interval);

} // namespace fracext
