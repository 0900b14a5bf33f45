#pragma once

#include "fracext/mesh.hpp"
#include "fracext/sparse.hpp"

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace fracext {

struct SolveResult {
  FieldVector x;
  int iterations = 0;
  /// Final l2 norm of b - A x.
  double residual = 0.0;
};

/// z = B r for a symmetric positive definite B.
using Preconditioner = std::function<void(std::span<const double> r, std::span<double> z)>;

/// Conjugate gradients until ||b - A x||_2 < tol.
///
/// Throws IndefiniteMatrix on non-positive curvature and ConvergenceFailure after maxit steps.
SolveResult cg_solve(const CsrMatrix &a, const FieldVector &b, double tol, int maxit,
                     const FieldVector *x0 = nullptr);
SolveResult pcg_solve(const CsrMatrix &a, const FieldVector &b, const Preconditioner &precond, double tol, int maxit,
                      const FieldVector *x0 = nullptr);

/// Sparse Cholesky (LDL^T) solve for an SPD matrix.
FieldVector direct_solve(const CsrMatrix &a, const FieldVector &b);

/// Vertical lines of a tensor mesh with the factorised tridiagonal diagonal block of A on each.
///
/// Line f holds DoFs f*M .. f*M + M - 1 ordered by level.
class LineBlocks {
public:
  LineBlocks() = default;
  LineBlocks(const CsrMatrix &a, std::size_t lines, int levels);

  std::size_t num_lines() const { return lines_; }
  int levels() const { return levels_; }
  /// Solve T_f z = r in place for line f (r holds M entries).
  void solve(std::size_t line, std::span<double> r) const;

private:
  std::size_t lines_ = 0;
  int levels_ = 0;
  // LDL^T of each tridiagonal block: pivots d and multipliers l (l[0] unused).
  std::vector<double> pivot_, lower_;
};

enum class Smoother { line, point };

/// One level of the nested hierarchy.
struct HierarchyLevel {
  TensorMesh mesh;
  CsrMatrix stiffness;
  CsrMatrix trace_mass;
  /// Operator the cycle works on: c_A * stiffness + c_M * trace_mass.
  CsrMatrix op;
  LineBlocks lines;
  /// Interpolation from the next coarser level (empty on level 0).
  CsrMatrix prolongation;
  CsrMatrix restriction;
};

struct HierarchyOptions {
  int dim = 1;
  /// Base cells per side and interval cells on level 0.
  int coarse_cells = 2;
  int coarse_levels = 2;
  int refinements = 0;
  double grading = 1.0;
  double height = 1.0;
  double alpha = 0.0;
};

/// Nested meshes: level k has 2^k times the coarse resolution in x' and in the
/// reference coordinate yhat, with y = Y yhat^grading.
class MeshHierarchy {
public:
  explicit MeshHierarchy(const HierarchyOptions &opts);
  ~MeshHierarchy();
  MeshHierarchy(MeshHierarchy &&) noexcept;
  MeshHierarchy &operator=(MeshHierarchy &&) noexcept;

  const HierarchyOptions &options() const { return opts_; }
  int num_levels() const { return static_cast<int>(levels_.size()); }
  const HierarchyLevel &level(int k) const { return levels_[k]; }
  const HierarchyLevel &finest() const { return levels_.back(); }

  /// Switch every level to c_stiffness * A + c_mass * M_trace and refactor the smoother and coarse solve.
  void set_operator(double c_stiffness, double c_mass);

  /// Smoother sweep on level k; forward = lexicographic line order, otherwise reversed.
  void smooth(int k, FieldVector &x, const FieldVector &b, bool forward, Smoother kind = Smoother::line) const;
  /// Exact solve on level 0.
  void coarse_solve(const FieldVector &b, FieldVector &x) const;

private:
  struct CoarseFactor;
  HierarchyOptions opts_;
  std::vector<HierarchyLevel> levels_;
  std::unique_ptr<CoarseFactor> coarse_;
};

MeshHierarchy build_hierarchy(const HierarchyOptions &opts);

/// One block Gauss-Seidel pass over the lines of level k (lexicographic order).
void line_smoother_sweep(const MeshHierarchy &h, int k, FieldVector &x, const FieldVector &b);

struct CycleOptions {
  /// Pre- and post-smoothing steps on the finest level.
  int smoothing_steps = 1;
  /// Steps grow by this factor per coarser level (1 = standard V-cycle).
  double smoothing_growth = 1.0;
  Smoother smoother = Smoother::line;
};

/// One symmetric V-cycle on level k starting from x.
void vcycle(const MeshHierarchy &h, int k, FieldVector &x, const FieldVector &b, const CycleOptions &opts = {});

struct MgResult {
  FieldVector x;
  int iterations = 0;
  double residual = 0.0;
  /// Geometric mean of per-cycle A-norm error ratios; negative when not measured.
  double contraction = -1.0;
  std::vector<double> ratios;
};

struct MgOptions {
  double tol = 1e-12;
  int max_cycles = 200;
  CycleOptions cycle;
  /// Measure the contraction against a CG reference solved to 1e-14.
  bool measure_contraction = false;
};

/// Stationary V-cycle iteration from x = 0 on the finest level until ||b - A x||_2 < tol.
MgResult mg_solve(const MeshHierarchy &h, const FieldVector &b, const MgOptions &opts = {});

/// CG on the finest level preconditioned by one V-cycle.
SolveResult mg_pcg_solve(const MeshHierarchy &h, const FieldVector &b, double tol, int maxit,
                         const CycleOptions &opts = {}, const FieldVector *x0 = nullptr);

/// Prolongation between two nested uniform base meshes (interior vertices, free index order).
CsrMatrix base_prolongation(int dim, int coarse_cells);
/// Linear interpolation in y from a coarse to a fine partition of the same [0, Y] (levels 0..M-1).
CsrMatrix interval_prolongation(const GradedInterval &coarse, const GradedInterval &fine);

} // namespace fracext
