#pragma once

#include "fracext/mesh.hpp"
#include "fracext/sparse.hpp"

#include <array>
#include <vector>

namespace fracext {

/// Q1 stiffness and mass of one base cell, local vertices in tensor order.
struct BaseCellMatrices {
  int size = 2;
  std::array<double, 16> stiffness{};
  std::array<double, 16> mass{};
};

BaseCellMatrices base_cell_matrices(const BaseMesh &base, std::size_t cell);

/// ∫ y^alpha ∇V·∇W over the truncated cylinder, on free DoFs.
///
/// Elements are processed by colour classes of base cells that share no vertex,
/// so each thread owns the rows it writes.
CsrMatrix assemble_stiffness(const TensorMesh &mesh, double alpha);
/// ∫ y^alpha V W over the truncated cylinder.
CsrMatrix assemble_weighted_mass(const TensorMesh &mesh, double alpha);

namespace serial {
/// Element loop with triplet accumulation; reference for the coloured assembly.
CsrMatrix assemble_stiffness(const TensorMesh &mesh, double alpha);
CsrMatrix assemble_weighted_mass(const TensorMesh &mesh, double alpha);
} // namespace serial

/// L2(Omega) mass of the traces, embedded in the full DoF numbering
/// (rows and columns off the y = 0 layer are empty).
CsrMatrix assemble_trace_mass(const TensorMesh &mesh);

/// d_s ∫_Omega f tr(phi_i), 4-point Gauss per cell direction.
FieldVector assemble_trace_load(const TensorMesh &mesh, const SpatialFunction &f, double s);
/// ∫_Omega f tr(phi_i) without the d_s factor.
FieldVector trace_moments(const TensorMesh &mesh, const SpatialFunction &f);

/// sqrt(v^T A v) with A the weighted stiffness.
double weighted_energy_norm(const TensorMesh &mesh, const FieldVector &v, double alpha);
/// sqrt(v^T M v) with M the weighted mass.
double weighted_l2_norm(const TensorMesh &mesh, const FieldVector &v, double alpha);

/// Q1 stiffness and mass of the base mesh restricted to interior vertices (free index order).
struct BaseOperators {
  CsrMatrix stiffness;
  CsrMatrix mass;
};
BaseOperators base_operators(const BaseMesh &base);

/// Weighted P1 stiffness and mass of a graded interval on levels 0..M-1 (top node removed).
struct IntervalOperators {
  CsrMatrix stiffness;
  CsrMatrix mass;
};
IntervalOperators interval_operators(const GradedInterval &interval, double alpha);

/// Colour classes of base cells such that no two cells of a class share a vertex.
std::vector<std::vector<std::size_t>> color_base_cells(const BaseMesh &base);

/// Trace of V at every base vertex (zero on the boundary).
std::vector<double> trace_values(const TensorMesh &mesh, const FieldVector &v);
/// Field that carries the given vertex values on the y = 0 layer and vanishes elsewhere.
FieldVector embed_trace(const TensorMesh &mesh, const std::vector<double> &vertex_values);
/// f at every base vertex.
std::vector<double> nodal_values(const BaseMesh &base, const SpatialFunction &f);

} // namespace fracext
