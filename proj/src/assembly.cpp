#include "fracext/assembly.hpp"

#include "fracext/error.hpp"
#include "fracext/moments.hpp"
#include "fracext/special_functions.hpp"

#include <algorithm>
#include <cmath>

namespace fracext {

namespace {

constexpr std::array<double, 4> kGaussNodes = {0.06943184420297371, 0.33000947820757187, 0.66999052179242813,
                                               0.93056815579702629};
constexpr std::array<double, 4> kGaussWeights = {0.17392742256872693, 0.32607257743127307, 0.32607257743127307,
                                                 0.17392742256872693};

void check_alpha(double alpha) {
  detail::require(alpha > -1.0 && alpha < 1.0, "assembly: weight exponent outside (-1,1) is not admissible");
}

std::vector<CellMatrices> level_matrices(const GradedInterval &interval, double alpha) {
  std::vector<CellMatrices> out;
  out.reserve(interval.cells());
  for (int l = 0; l < interval.cells(); ++l)
    out.push_back(cell_matrices(1, 1, weighted_moments(interval.points[l], interval.points[l + 1], alpha)));
  return out;
}

// Coefficients of an element operator c_kx * Kx⊗My + c_m * Mx⊗My + c_ky * Mx⊗Ky.
struct Mix {
  double kx, m, ky;
};

double element_entry(const BaseCellMatrices &bx, const CellMatrices &cy, const Mix &mix, int a, int i, int b, int j) {
  const int n = bx.size;
  const double kx = bx.stiffness[a * n + b];
  const double mx = bx.mass[a * n + b];
  return mix.kx * kx * cy.m(i, j) + mix.m * mx * cy.m(i, j) + mix.ky * mx * cy.k(i, j);
}

// Sorted free neighbours (including itself) of every free base vertex.
std::vector<std::vector<int>> free_neighbours(const TensorMesh &mesh) {
  const BaseMesh &base = mesh.base();
  std::vector<std::vector<int>> nb(mesh.num_lines());
  const int nv = base.vertices_per_cell();
  for (const auto &cell : base.cells)
    for (int a = 0; a < nv; ++a) {
      const int fa = mesh.free_index(cell[a]);
      if (fa < 0)
        continue;
      for (int b = 0; b < nv; ++b) {
        const int fb = mesh.free_index(cell[b]);
        if (fb >= 0)
          nb[fa].push_back(fb);
      }
    }
  for (auto &v : nb) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return nb;
}

CsrMatrix tensor_pattern(const TensorMesh &mesh) {
  const auto nb = free_neighbours(mesh);
  const int m = mesh.levels();
  CsrMatrix a;
  a.rows = a.cols = mesh.num_dofs();
  a.row_offsets.assign(a.rows + 1, 0);
  for (std::size_t f = 0; f < nb.size(); ++f)
    for (int l = 0; l < m; ++l) {
      for (int g : nb[f])
        for (int k = std::max(0, l - 1); k <= std::min(m - 1, l + 1); ++k)
          a.col_indices.push_back(g * m + k);
      a.row_offsets[f * m + l + 1] = a.col_indices.size();
    }
  a.values.assign(a.col_indices.size(), 0.0);
  return a;
}

CsrMatrix assemble_colored(const TensorMesh &mesh, double alpha, const Mix &mix) {
  check_alpha(alpha);
  CsrMatrix a = tensor_pattern(mesh);
  const BaseMesh &base = mesh.base();
  const auto ym = level_matrices(mesh.interval(), alpha);
  const int m = mesh.levels();
  const int nv = base.vertices_per_cell();

  for (const auto &color : color_base_cells(base)) {
    const long count = static_cast<long>(color.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (long idx = 0; idx < count; ++idx) {
      const std::size_t c = color[idx];
      const auto bx = base_cell_matrices(base, c);
      const auto &cell = base.cells[c];
      for (int l = 0; l < m; ++l)
        for (int a_loc = 0; a_loc < nv; ++a_loc)
          for (int i = 0; i < 2; ++i) {
            const long row = mesh.dof(cell[a_loc], l + i);
            if (row < 0)
              continue;
            for (int b_loc = 0; b_loc < nv; ++b_loc)
              for (int j = 0; j < 2; ++j) {
                const long col = mesh.dof(cell[b_loc], l + j);
                if (col < 0)
                  continue;
                a.values[a.find(row, col)] += element_entry(bx, ym[l], mix, a_loc, i, b_loc, j);
              }
          }
    }
  }
  return a;
}

CsrMatrix assemble_serial(const TensorMesh &mesh, double alpha, const Mix &mix) {
  check_alpha(alpha);
  const BaseMesh &base = mesh.base();
  const auto ym = level_matrices(mesh.interval(), alpha);
  const int m = mesh.levels();
  const int nv = base.vertices_per_cell();
  CsrBuilder builder(mesh.num_dofs(), mesh.num_dofs());
  builder.reserve(mesh.num_elements() * 4 * nv * nv);
  for (std::size_t c = 0; c < base.num_cells(); ++c) {
    const auto bx = base_cell_matrices(base, c);
    const auto &cell = base.cells[c];
    for (int l = 0; l < m; ++l)
      for (int a_loc = 0; a_loc < nv; ++a_loc)
        for (int i = 0; i < 2; ++i) {
          const long row = mesh.dof(cell[a_loc], l + i);
          if (row < 0)
            continue;
          for (int b_loc = 0; b_loc < nv; ++b_loc)
            for (int j = 0; j < 2; ++j) {
              const long col = mesh.dof(cell[b_loc], l + j);
              if (col >= 0)
                builder.add(row, col, element_entry(bx, ym[l], mix, a_loc, i, b_loc, j));
            }
        }
  }
  return builder.build();
}

constexpr Mix kStiffness{1.0, 0.0, 1.0};
constexpr Mix kMass{0.0, 1.0, 0.0};

} // namespace

BaseCellMatrices base_cell_matrices(const BaseMesh &base, std::size_t cell) {
  const auto h = base.cell_size(cell);
  auto k1 = [](double hx) { return std::array<double, 4>{1.0 / hx, -1.0 / hx, -1.0 / hx, 1.0 / hx}; };
  auto m1 = [](double hx) { return std::array<double, 4>{hx / 3.0, hx / 6.0, hx / 6.0, hx / 3.0}; };
  BaseCellMatrices out;
  if (base.dim == 1) {
    out.size = 2;
    const auto k = k1(h[0]);
    const auto m = m1(h[0]);
    for (int i = 0; i < 4; ++i) {
      out.stiffness[i] = k[i];
      out.mass[i] = m[i];
    }
    return out;
  }
  out.size = 4;
  const auto kx = k1(h[0]), mx = m1(h[0]), ky = k1(h[1]), my = m1(h[1]);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const int xa = (a % 2) * 2 + b % 2;
      const int ya = (a / 2) * 2 + b / 2;
      out.stiffness[a * 4 + b] = kx[xa] * my[ya] + mx[xa] * ky[ya];
      out.mass[a * 4 + b] = mx[xa] * my[ya];
    }
  return out;
}

CsrMatrix assemble_stiffness(const TensorMesh &mesh, double alpha) { return assemble_colored(mesh, alpha, kStiffness); }
CsrMatrix assemble_weighted_mass(const TensorMesh &mesh, double alpha) { return assemble_colored(mesh, alpha, kMass); }

namespace serial {
CsrMatrix assemble_stiffness(const TensorMesh &mesh, double alpha) { return assemble_serial(mesh, alpha, kStiffness); }
CsrMatrix assemble_weighted_mass(const TensorMesh &mesh, double alpha) { return assemble_serial(mesh, alpha, kMass); }
} // namespace serial

std::vector<std::vector<std::size_t>> color_base_cells(const BaseMesh &base) {
  // Greedy colouring in cell order; a cell takes the first colour none of its vertices carries yet.
  std::vector<std::vector<std::size_t>> colors;
  std::vector<std::vector<char>> used; // used[color][vertex]
  const int nv = base.vertices_per_cell();
  for (std::size_t c = 0; c < base.num_cells(); ++c) {
    const auto &cell = base.cells[c];
    std::size_t k = 0;
    for (; k < colors.size(); ++k) {
      bool clash = false;
      for (int a = 0; a < nv && !clash; ++a)
        clash = used[k][cell[a]] != 0;
      if (!clash)
        break;
    }
    if (k == colors.size()) {
      colors.emplace_back();
      used.emplace_back(base.num_vertices(), 0);
    }
    colors[k].push_back(c);
    for (int a = 0; a < nv; ++a)
      used[k][cell[a]] = 1;
  }
  return colors;
}

CsrMatrix assemble_trace_mass(const TensorMesh &mesh) {
  const BaseMesh &base = mesh.base();
  const int nv = base.vertices_per_cell();
  CsrBuilder builder(mesh.num_dofs(), mesh.num_dofs());
  for (std::size_t c = 0; c < base.num_cells(); ++c) {
    const auto bx = base_cell_matrices(base, c);
    const auto &cell = base.cells[c];
    for (int a = 0; a < nv; ++a) {
      const long row = mesh.dof(cell[a], 0);
      if (row < 0)
        continue;
      for (int b = 0; b < nv; ++b) {
        const long col = mesh.dof(cell[b], 0);
        if (col >= 0)
          builder.add(row, col, bx.mass[a * nv + b]);
      }
    }
  }
  return builder.build();
}

FieldVector trace_moments(const TensorMesh &mesh, const SpatialFunction &f) {
  const BaseMesh &base = mesh.base();
  FieldVector out(mesh.num_dofs(), 0.0);
  for (std::size_t c = 0; c < base.num_cells(); ++c) {
    const auto &cell = base.cells[c];
    const auto h = base.cell_size(c);
    const auto &x0 = base.vertices[cell[0]];
    if (base.dim == 1) {
      for (int q = 0; q < 4; ++q) {
        const double t = kGaussNodes[q];
        const double fw = f(x0[0] + t * h[0], 0.0) * kGaussWeights[q] * h[0];
        const double phi[2] = {1.0 - t, t};
        for (int a = 0; a < 2; ++a) {
          const long row = mesh.dof(cell[a], 0);
          if (row >= 0)
            out[row] += fw * phi[a];
        }
      }
      continue;
    }
    for (int q2 = 0; q2 < 4; ++q2)
      for (int q1 = 0; q1 < 4; ++q1) {
        const double t1 = kGaussNodes[q1], t2 = kGaussNodes[q2];
        const double fw =
            f(x0[0] + t1 * h[0], x0[1] + t2 * h[1]) * kGaussWeights[q1] * kGaussWeights[q2] * h[0] * h[1];
        const double p1[2] = {1.0 - t1, t1}, p2[2] = {1.0 - t2, t2};
        for (int a = 0; a < 4; ++a) {
          const long row = mesh.dof(cell[a], 0);
          if (row >= 0)
            out[row] += fw * p1[a % 2] * p2[a / 2];
        }
      }
  }
  return out;
}

FieldVector assemble_trace_load(const TensorMesh &mesh, const SpatialFunction &f, double s) {
  FieldVector out = trace_moments(mesh, f);
  const double ds = normalization_ds(s);
  for (double &v : out)
    v *= ds;
  return out;
}

double weighted_energy_norm(const TensorMesh &mesh, const FieldVector &v, double alpha) {
  detail::require(v.size() == mesh.num_dofs(), "weighted_energy_norm: vector does not match the mesh");
  return std::sqrt(std::max(0.0, quadratic_form(assemble_stiffness(mesh, alpha), v, v)));
}

double weighted_l2_norm(const TensorMesh &mesh, const FieldVector &v, double alpha) {
  detail::require(v.size() == mesh.num_dofs(), "weighted_l2_norm: vector does not match the mesh");
  return std::sqrt(std::max(0.0, quadratic_form(assemble_weighted_mass(mesh, alpha), v, v)));
}

BaseOperators base_operators(const BaseMesh &base) {
  std::vector<int> free(base.num_vertices(), -1);
  int count = 0;
  for (std::size_t v = 0; v < base.num_vertices(); ++v)
    if (!base.boundary[v])
      free[v] = count++;
  const int nv = base.vertices_per_cell();
  CsrBuilder k(count, count), m(count, count);
  for (std::size_t c = 0; c < base.num_cells(); ++c) {
    const auto bx = base_cell_matrices(base, c);
    const auto &cell = base.cells[c];
    for (int a = 0; a < nv; ++a)
      for (int b = 0; b < nv; ++b) {
        const int i = free[cell[a]], j = free[cell[b]];
        if (i < 0 || j < 0)
          continue;
        k.add(i, j, bx.stiffness[a * nv + b]);
        m.add(i, j, bx.mass[a * nv + b]);
      }
  }
  return {k.build(), m.build()};
}

IntervalOperators interval_operators(const GradedInterval &interval, double alpha) {
  check_alpha(alpha);
  const int m = interval.cells();
  const auto ym = level_matrices(interval, alpha);
  CsrBuilder k(m, m), ms(m, m);
  for (int l = 0; l < m; ++l)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        if (l + i >= m || l + j >= m)
          continue;
        k.add(l + i, l + j, ym[l].k(i, j));
        ms.add(l + i, l + j, ym[l].m(i, j));
      }
  return {k.build(), ms.build()};
}

std::vector<double> trace_values(const TensorMesh &mesh, const FieldVector &v) {
  detail::require(v.size() == mesh.num_dofs(), "trace_values: vector does not match the mesh");
  std::vector<double> out(mesh.base().num_vertices(), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const long d = mesh.dof(k, 0);
    if (d >= 0)
      out[k] = v[d];
  }
  return out;
}

FieldVector embed_trace(const TensorMesh &mesh, const std::vector<double> &vertex_values) {
  detail::require(vertex_values.size() == mesh.base().num_vertices(), "embed_trace: one value per base vertex expected");
  FieldVector out(mesh.num_dofs(), 0.0);
  for (std::size_t k = 0; k < vertex_values.size(); ++k) {
    const long d = mesh.dof(k, 0);
    if (d >= 0)
      out[d] = vertex_values[k];
  }
  return out;
}

std::vector<double> nodal_values(const BaseMesh &base, const SpatialFunction &f) {
  std::vector<double> out(base.num_vertices());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = f(base.vertices[k][0], base.vertices[k][1]);
  return out;
}

} // namespace fracext
