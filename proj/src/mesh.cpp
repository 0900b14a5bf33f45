#include "fracext/mesh.hpp"

#include "fracext/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fracext {

GradedInterval graded_points(int cells, double grading, double height) {
  detail::require(cells >= 1, "graded_points: cell count must be >= 1");
  detail::require(grading > 0.0, "graded_points: grading exponent must be positive");
  detail::require(height > 0.0, "graded_points: height must be positive");

  GradedInterval out;
  out.grading = grading;
  out.height = height;
  out.points.resize(cells + 1);
  for (int k = 0; k <= cells; ++k)
    out.points[k] = std::pow(static_cast<double>(k) / cells, grading) * height;
  out.points[cells] = height;
  return out;
}

double default_grading(double s) {
  detail::require(s > 0.0 && s < 1.0, "default_grading: s must lie in (0,1)");
  return 1.05 * 3.0 / (2.0 * s);
}

double truncation_height(std::size_t num_base_cells) {
  detail::require(num_base_cells >= 1, "truncation_height: need at least one cell");
  return 1.0 + std::log(static_cast<double>(num_base_cells)) / 3.0;
}

int matched_interval_cells(std::size_t num_base_cells, int dim) {
  const double m = std::round(std::pow(static_cast<double>(num_base_cells), 1.0 / dim));
  return std::max(1, static_cast<int>(m));
}

std::array<double, 2> BaseMesh::cell_size(std::size_t c) const {
  const auto &cell = cells[c];
  if (dim == 1)
    return {vertices[cell[1]][0] - vertices[cell[0]][0], 1.0};
  return {vertices[cell[1]][0] - vertices[cell[0]][0], vertices[cell[2]][1] - vertices[cell[0]][1]};
}

double BaseMesh::cell_diameter(std::size_t c) const {
  const auto h = cell_size(c);
  return dim == 1 ? h[0] : std::hypot(h[0], h[1]);
}

std::size_t BaseMesh::num_interior_vertices() const {
  return static_cast<std::size_t>(std::count(boundary.begin(), boundary.end(), false));
}

BaseMesh uniform_base(int dim, int cells_per_side) {
  if (dim != 1 && dim != 2)
    throw UnsupportedDimension("uniform_base: dimension " + std::to_string(dim) + " not in {1,2}");
  detail::require(cells_per_side >= 1, "uniform_base: cells_per_side must be >= 1");

  const int n = cells_per_side;
  const double h = 1.0 / n;
  BaseMesh mesh;
  mesh.dim = dim;
  if (dim == 1) {
    for (int i = 0; i <= n; ++i) {
      mesh.vertices.push_back({i == n ? 1.0 : i * h, 0.0});
      mesh.boundary.push_back(i == 0 || i == n);
    }
    for (int i = 0; i < n; ++i)
      mesh.cells.push_back({i, i + 1, -1, -1});
    mesh.generation.assign(n, 0);
    return mesh;
  }
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      mesh.vertices.push_back({i == n ? 1.0 : i * h, j == n ? 1.0 : j * h});
      mesh.boundary.push_back(i == 0 || i == n || j == 0 || j == n);
    }
  const int stride = n + 1;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int v = j * stride + i;
      mesh.cells.push_back({v, v + 1, v + stride, v + stride + 1});
    }
  return mesh;
}

BaseMesh bisect_marked(const BaseMesh &base, std::span<const int> marked) {
  if (base.dim != 1)
    throw UnsupportedDimension("bisect_marked: adaptive refinement is implemented for n = 1 only");

  std::vector<bool> split(base.num_cells(), false);
  for (int c : marked) {
    detail::require(c >= 0 && static_cast<std::size_t>(c) < base.num_cells(),
                    "bisect_marked: marked cell index out of range");
    split[c] = true;
  }

  BaseMesh out;
  out.dim = 1;
  // Cells of a 1D mesh are stored left to right, so a single sweep rebuilds the vertex list.
  out.vertices.push_back(base.vertices[base.cells.front()[0]]);
  for (std::size_t c = 0; c < base.num_cells(); ++c) {
    const double a = base.vertices[base.cells[c][0]][0];
    const double b = base.vertices[base.cells[c][1]][0];
    const int gen = base.generation.empty() ? 0 : base.generation[c];
    if (split[c]) {
      out.vertices.push_back({0.5 * (a + b), 0.0});
      out.generation.push_back(gen + 1);
      out.generation.push_back(gen + 1);
    } else {
      out.generation.push_back(gen);
    }
    out.vertices.push_back({b, 0.0});
  }
  const int nv = static_cast<int>(out.vertices.size());
  for (int i = 0; i + 1 < nv; ++i)
    out.cells.push_back({i, i + 1, -1, -1});
  out.boundary.assign(nv, false);
  out.boundary.front() = true;
  out.boundary.back() = true;
  return out;
}

TensorMesh::TensorMesh(BaseMesh base, GradedInterval interval)
    : base_(std::move(base)), interval_(std::move(interval)) {
  free_index_.assign(base_.num_vertices(), -1);
  for (std::size_t v = 0; v < base_.num_vertices(); ++v)
    if (!base_.boundary[v]) {
      free_index_[v] = static_cast<int>(free_vertices_.size());
      free_vertices_.push_back(v);
    }

  const int m = levels();
  dirichlet_.assign(num_nodes(), true);
  for (std::size_t v = 0; v < base_.num_vertices(); ++v)
    for (int l = 0; l < m; ++l)
      dirichlet_[v * (m + 1) + l] = base_.boundary[v];
}

TensorMesh build_tensor(const BaseMesh &base, const GradedInterval &interval) {
  return TensorMesh(base, interval);
}

} // namespace fracext
