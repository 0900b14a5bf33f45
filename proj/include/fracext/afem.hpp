#pragma once

#include "fracext/mesh.hpp"
#include "fracext/sparse.hpp"
#include "fracext/spectral.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace fracext {

/// Star of a base vertex z' (n = 1) and the cylinder S_z' x (0, Y) above it.
struct CylindricalStar {
  std::size_t center = 0;
  /// Adjacent base cells, left to right (one for a boundary vertex).
  std::vector<std::size_t> cells;
  /// Diameter of S_z'.
  double diameter = 0.0;
};

/// One star per base vertex, boundary vertices included.
std::vector<CylindricalStar> build_stars(const BaseMesh &base);

/// Local residual problem on the quadratic space W(C_z'): P2 in x' on every star cell
/// times P2 in y on every interval cell, vanishing on the lateral walls and on y = Y.
///
/// Unknown (a, j) has index a * ny + j; a runs over the interior P2 nodes of the star
/// (vertices and midpoints, left to right), j over the P2 nodes of [0, Y) bottom up.
struct StarProblem {
  int nx = 0;
  int ny = 0;
  /// Dense nx x nx x'-matrices.
  std::vector<double> kx, mx;
  /// Weighted ny x ny y-matrices.
  CsrMatrix ky, my;
  /// d_s <f, tr W> - ∫ y^alpha ∇V·∇W for every basis function W.
  FieldVector rhs;

  std::size_t dim() const { return static_cast<std::size_t>(nx) * ny; }
};

StarProblem assemble_star_problem(const TensorMesh &mesh, const CylindricalStar &star, const FieldVector &v,
                                  const SpatialFunction &f, double s);
/// (Kx ⊗ My + Mx ⊗ Ky) eta = rhs, diagonalising the x' factor.
FieldVector solve_star(const StarProblem &p);
/// sqrt(eta^T A_loc eta), the weighted H^1 seminorm of eta over the star cylinder.
double indicator(const StarProblem &p, const FieldVector &eta);
/// d_s h^(2s) ||f - f_K||^2 over the star, f_K the cell means.
double oscillation(const BaseMesh &base, const CylindricalStar &star, const SpatialFunction &f, double s);

struct IndicatorSet {
  /// Per base vertex.
  std::vector<double> estimator, oscillation, total;
  double global_estimator = 0.0;
  double global_oscillation = 0.0;
  double global_total = 0.0;
};

/// Indicators of every star; stars are processed in parallel and stored by vertex.
IndicatorSet estimate(const TensorMesh &mesh, const FieldVector &v, const SpatialFunction &f, double s);

namespace serial {
IndicatorSet estimate(const TensorMesh &mesh, const FieldVector &v, const SpatialFunction &f, double s);
} // namespace serial

/// Shortest prefix of the totals sorted descending (ties: lower index first) whose
/// squared sum reaches theta^2 times the full squared sum.
std::vector<std::size_t> dorfler_mark(const std::vector<double> &totals, double theta);

/// Bisect every cell that belongs to a marked star.
BaseMesh refine_stars(const BaseMesh &base, const std::vector<std::size_t> &marked_vertices);

/// Tensor mesh over a base mesh with Y = 1 + ln(#cells)/3, M = #cells^(1/n), grading for s.
TensorMesh adapted_tensor(const BaseMesh &base, double s);

/// Discrete solution on the mesh with every base cell bisected `depth` times and 2^depth M
/// interval cells (same Y, grading).
struct OverkillReference {
  TensorMesh mesh;
  FieldVector solution;
  CsrMatrix stiffness;
  int depth = 1;
};

OverkillReference overkill_reference(const TensorMesh &mesh, const SpatialFunction &f, double s, int depth = 2);
/// Interpolate V onto the overkill mesh (exact, the spaces are nested).
FieldVector prolong_to_overkill(const TensorMesh &mesh, const TensorMesh &fine, const FieldVector &v);
/// ||∇(v_ref - V)||_{L2(y^alpha, C_z')} for every base vertex z' of the coarse mesh.
std::vector<double> star_errors(const OverkillReference &ref, const TensorMesh &mesh, const FieldVector &v,
                                double alpha);

/// Data for the exact error: sine coefficients of f and of u = (-Δ)^(-s) f.
struct SpectralOracle {
  SineExpansion f;
  SineExpansion u;
  /// H^s mass of u beyond the cutoff, when known.
  double u_tail_sq = 0.0;
};

struct AfemConfig {
  double s = 0.5;
  SpatialFunction f;
  int initial_cells = 4;
  double theta = 0.5;
  int max_iterations = 8;
  std::size_t max_dofs = 1000000;
  std::optional<SpectralOracle> oracle;
  /// Compute the overkill reference each iteration (per-star and global errors).
  bool overkill = false;
  int overkill_depth = 2;
};

struct AfemRecord {
  int iteration = 0;
  std::size_t cells = 0;
  int levels = 0;
  double height = 0.0;
  std::size_t dofs = 0;
  double estimator = 0.0;
  double oscillation = 0.0;
  double total = 0.0;
  std::size_t marked = 0;
  /// Against the exact extension; negative without an oracle.
  double energy_error = -1.0;
  double trace_error = -1.0;
  bool cutoff_warning = false;
  /// Against the overkill reference; negative when not requested.
  double overkill_error = -1.0;
  std::vector<double> star_indicators;
  std::vector<double> star_overkill_errors;
};

std::vector<AfemRecord> afem_loop(const AfemConfig &config);

} // namespace fracext
