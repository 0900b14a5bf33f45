#include "fracext/solver.hpp"

#include "fracext/assembly.hpp"
#include "fracext/error.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <string>

namespace fracext {

SolveResult pcg_solve(const CsrMatrix &a, const FieldVector &b, const Preconditioner &precond, double tol, int maxit,
                      const FieldVector *x0) {
  detail::require(a.rows == a.cols && a.rows == b.size(), "pcg_solve: dimension mismatch");
  const std::size_t n = b.size();
  SolveResult out;
  out.x = x0 ? *x0 : FieldVector(n, 0.0);
  FieldVector r(n), z(n), p(n), q(n);
  kernels::residual(a, out.x, b, r);
  out.residual = kernels::norm2(r);
  if (out.residual < tol)
    return out;
  if (precond)
    precond(r, z);
  else
    z = r;
  p = z;
  double rz = kernels::dot(r, z);
  while (true) {
    if (out.iterations == maxit)
      throw ConvergenceFailure("cg: no convergence after " + std::to_string(maxit) + " iterations", out.iterations,
                               out.residual);
    kernels::spmv(a, p, q);
    const double curvature = kernels::dot(p, q);
    if (!(curvature > 0.0))
      throw IndefiniteMatrix("cg: non-positive curvature p^T A p = " + std::to_string(curvature));
    const double step = rz / curvature;
    kernels::axpy(step, p, out.x);
    kernels::axpy(-step, q, r);
    ++out.iterations;
    out.residual = kernels::norm2(r);
    if (out.residual < tol)
      return out;
    if (precond)
      precond(r, z);
    else
      z = r;
    const double rz_new = kernels::dot(r, z);
    kernels::xpby(z, rz_new / rz, p);
    rz = rz_new;
  }
}

SolveResult cg_solve(const CsrMatrix &a, const FieldVector &b, double tol, int maxit, const FieldVector *x0) {
  return pcg_solve(a, b, Preconditioner{}, tol, maxit, x0);
}

FieldVector direct_solve(const CsrMatrix &a, const FieldVector &b) {
  detail::require(a.rows == a.cols && a.rows == b.size(), "direct_solve: dimension mismatch");
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(a.nnz());
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
      triplets.emplace_back(static_cast<int>(i), a.col_indices[k], a.values[k]);
  Eigen::SparseMatrix<double> m(a.rows, a.cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(m);
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
    throw IndefiniteMatrix("direct_solve: matrix is not positive definite");
  const Eigen::VectorXd x = ldlt.solve(Eigen::Map<const Eigen::VectorXd>(b.data(), b.size()));
  return FieldVector(x.data(), x.data() + x.size());
}

LineBlocks::LineBlocks(const CsrMatrix &a, std::size_t lines, int levels)
    : lines_(lines), levels_(levels), pivot_(lines * levels), lower_(lines * levels, 0.0) {
  detail::require(a.rows == lines * static_cast<std::size_t>(levels), "LineBlocks: matrix size does not match lines");
  for (std::size_t f = 0; f < lines; ++f) {
    const std::size_t first = f * levels;
    for (int l = 0; l < levels; ++l) {
      const std::size_t row = first + l;
      double d = a.at(row, row);
      if (l > 0) {
        const double m = a.at(row, row - 1) / pivot_[row - 1];
        lower_[row] = m;
        d -= m * m * pivot_[row - 1];
      }
      if (!(d > 0.0))
        throw IndefiniteMatrix("LineBlocks: non-positive pivot on line " + std::to_string(f));
      pivot_[row] = d;
    }
  }
}

void LineBlocks::solve(std::size_t line, std::span<double> r) const {
  const std::size_t first = line * levels_;
  for (int l = 1; l < levels_; ++l)
    r[l] -= lower_[first + l] * r[l - 1];
  for (int l = 0; l < levels_; ++l)
    r[l] /= pivot_[first + l];
  for (int l = levels_ - 2; l >= 0; --l)
    r[l] -= lower_[first + l + 1] * r[l + 1];
}

struct MeshHierarchy::CoarseFactor {
  Eigen::LLT<Eigen::MatrixXd> llt;
};

MeshHierarchy::MeshHierarchy(const HierarchyOptions &opts) : opts_(opts) {
  detail::require(opts.coarse_cells >= 2, "build_hierarchy: coarse base needs at least 2 cells per side");
  detail::require(opts.coarse_levels >= 1, "build_hierarchy: coarse interval needs at least one cell");
  detail::require(opts.refinements >= 0, "build_hierarchy: refinements must be non-negative");
  GradedInterval previous;
  for (int k = 0; k <= opts.refinements; ++k) {
    const int cells = opts.coarse_cells << k;
    GradedInterval iv = graded_points(opts.coarse_levels << k, opts.grading, opts.height);
    TensorMesh mesh(uniform_base(opts.dim, cells), iv);
    HierarchyLevel level{mesh, assemble_stiffness(mesh, opts.alpha), assemble_trace_mass(mesh), {}, {}, {}, {}};
    if (k > 0) {
      level.prolongation = kronecker(base_prolongation(opts.dim, cells / 2), interval_prolongation(previous, iv));
      level.restriction = transpose(level.prolongation);
    }
    levels_.push_back(std::move(level));
    previous = std::move(iv);
  }
  set_operator(1.0, 0.0);
}

MeshHierarchy::~MeshHierarchy() = default;
MeshHierarchy::MeshHierarchy(MeshHierarchy &&) noexcept = default;
MeshHierarchy &MeshHierarchy::operator=(MeshHierarchy &&) noexcept = default;

void MeshHierarchy::set_operator(double c_stiffness, double c_mass) {
  for (auto &level : levels_) {
    level.op = c_mass == 0.0 ? level.stiffness : add(c_stiffness, level.stiffness, c_mass, level.trace_mass);
    if (c_mass == 0.0 && c_stiffness != 1.0)
      for (double &v : level.op.values)
        v *= c_stiffness;
    level.lines = LineBlocks(level.op, level.mesh.num_lines(), level.mesh.levels());
  }
  const CsrMatrix &a0 = levels_.front().op;
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(a0.rows, a0.cols);
  for (std::size_t i = 0; i < a0.rows; ++i)
    for (std::size_t k = a0.row_offsets[i]; k < a0.row_offsets[i + 1]; ++k)
      dense(i, a0.col_indices[k]) = a0.values[k];
  coarse_ = std::make_unique<CoarseFactor>();
  coarse_->llt.compute(dense);
  if (coarse_->llt.info() != Eigen::Success)
    throw IndefiniteMatrix("MeshHierarchy: coarse operator is not positive definite");
}

void MeshHierarchy::coarse_solve(const FieldVector &b, FieldVector &x) const {
  const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<long>(b.size()));
  const Eigen::VectorXd sol = coarse_->llt.solve(rhs);
  x.assign(sol.data(), sol.data() + sol.size());
}

void MeshHierarchy::smooth(int k, FieldVector &x, const FieldVector &b, bool forward, Smoother kind) const {
  const HierarchyLevel &lv = levels_[k];
  const CsrMatrix &a = lv.op;
  if (kind == Smoother::point) {
    const long n = static_cast<long>(a.rows);
    for (long step = 0; step < n; ++step) {
      const long i = forward ? step : n - 1 - step;
      double sum = b[i], diag = 0.0;
      for (std::size_t q = a.row_offsets[i]; q < a.row_offsets[i + 1]; ++q) {
        if (a.col_indices[q] == i)
          diag = a.values[q];
        else
          sum -= a.values[q] * x[a.col_indices[q]];
      }
      x[i] = sum / diag;
    }
    return;
  }
  const int m = lv.lines.levels();
  const long lines = static_cast<long>(lv.lines.num_lines());
  std::vector<double> r(m);
  for (long step = 0; step < lines; ++step) {
    const long f = forward ? step : lines - 1 - step;
    const long first = f * m, last = first + m;
    for (int l = 0; l < m; ++l) {
      const std::size_t row = first + l;
      double sum = b[row];
      for (std::size_t q = a.row_offsets[row]; q < a.row_offsets[row + 1]; ++q) {
        const int col = a.col_indices[q];
        if (col < first || col >= last)
          sum -= a.values[q] * x[col];
      }
      r[l] = sum;
    }
    lv.lines.solve(f, r);
    std::copy(r.begin(), r.end(), x.begin() + first);
  }
}

MeshHierarchy build_hierarchy(const HierarchyOptions &opts) { return MeshHierarchy(opts); }

void line_smoother_sweep(const MeshHierarchy &h, int k, FieldVector &x, const FieldVector &b) {
  h.smooth(k, x, b, true, Smoother::line);
}

void vcycle(const MeshHierarchy &h, int k, FieldVector &x, const FieldVector &b, const CycleOptions &opts) {
  detail::require(opts.smoothing_steps >= 1, "vcycle: at least one smoothing step is required");
  detail::require(opts.smoothing_growth >= 1.0, "vcycle: smoothing growth must be >= 1");
  if (k == 0) {
    h.coarse_solve(b, x);
    return;
  }
  const HierarchyLevel &lv = h.level(k);
  const int depth = h.num_levels() - 1 - k;
  const int steps =
      static_cast<int>(std::ceil(opts.smoothing_steps * std::pow(opts.smoothing_growth, depth) - 1e-9));
  for (int i = 0; i < steps; ++i)
    h.smooth(k, x, b, true, opts.smoother);
  FieldVector r(b.size());
  kernels::residual(lv.op, x, b, r);
  FieldVector rc(lv.restriction.rows), ec(lv.restriction.rows, 0.0);
  kernels::spmv(lv.restriction, r, rc);
  vcycle(h, k - 1, ec, rc, opts);
  kernels::spmv(lv.prolongation, ec, r);
  kernels::axpy(1.0, r, x);
  for (int i = 0; i < steps; ++i)
    h.smooth(k, x, b, false, opts.smoother);
}

MgResult mg_solve(const MeshHierarchy &h, const FieldVector &b, const MgOptions &opts) {
  detail::require(opts.tol > 0.0, "mg_solve: tolerance must be positive");
  const int top = h.num_levels() - 1;
  const CsrMatrix &a = h.finest().op;
  detail::require(b.size() == a.rows, "mg_solve: right-hand side does not match the finest level");

  MgResult out;
  out.x.assign(b.size(), 0.0);
  FieldVector reference, diff(b.size()), r(b.size());
  double previous_error = 0.0, first_error = 0.0;
  auto energy_error = [&]() {
    for (std::size_t i = 0; i < diff.size(); ++i)
      diff[i] = reference[i] - out.x[i];
    return std::sqrt(std::max(0.0, quadratic_form(a, diff, diff)));
  };
  if (opts.measure_contraction) {
    const double ref_tol = 1e-14 * std::max(1.0, kernels::norm2(b));
    reference = mg_pcg_solve(h, b, ref_tol, 1000, opts.cycle).x;
    first_error = previous_error = energy_error();
  }

  kernels::residual(a, out.x, b, r);
  out.residual = kernels::norm2(r);
  while (out.residual >= opts.tol) {
    if (out.iterations == opts.max_cycles)
      throw ConvergenceFailure("mg_solve: no convergence after " + std::to_string(opts.max_cycles) + " cycles",
                               out.iterations, out.residual);
    vcycle(h, top, out.x, b, opts.cycle);
    ++out.iterations;
    kernels::residual(a, out.x, b, r);
    out.residual = kernels::norm2(r);
    if (opts.measure_contraction && previous_error > 1e-9 * first_error && previous_error > 0.0) {
      const double e = energy_error();
      out.ratios.push_back(e / previous_error);
      previous_error = e;
    }
  }
  if (!out.ratios.empty()) {
    double log_sum = 0.0;
    for (double q : out.ratios)
      log_sum += std::log(q);
    out.contraction = std::exp(log_sum / out.ratios.size());
  }
  return out;
}

SolveResult mg_pcg_solve(const MeshHierarchy &h, const FieldVector &b, double tol, int maxit, const CycleOptions &opts,
                         const FieldVector *x0) {
  const int top = h.num_levels() - 1;
  Preconditioner precond = [&](std::span<const double> r, std::span<double> z) {
    FieldVector rv(r.begin(), r.end()), zv(r.size(), 0.0);
    vcycle(h, top, zv, rv, opts);
    std::copy(zv.begin(), zv.end(), z.begin());
  };
  return pcg_solve(h.finest().op, b, precond, tol, maxit, x0);
}

CsrMatrix base_prolongation(int dim, int coarse_cells) {
  detail::require(dim == 1 || dim == 2, "base_prolongation: dimension must be 1 or 2");
  detail::require(coarse_cells >= 1, "base_prolongation: need at least one coarse cell");
  const int nc = coarse_cells, nf = 2 * coarse_cells;
  CsrBuilder p(nf - 1, nc - 1);
  for (int i = 1; i < nf; ++i) {
    auto put = [&](int c, double w) {
      if (c >= 1 && c <= nc - 1)
        p.add(i - 1, c - 1, w);
    };
    if (i % 2 == 0)
      put(i / 2, 1.0);
    else {
      put((i - 1) / 2, 0.5);
      put((i + 1) / 2, 0.5);
    }
  }
  const CsrMatrix p1 = p.build();
  return dim == 1 ? p1 : kronecker(p1, p1);
}

CsrMatrix interval_prolongation(const GradedInterval &coarse, const GradedInterval &fine) {
  const int mc = coarse.cells(), mf = fine.cells();
  CsrBuilder p(mf, mc);
  const auto &yc = coarse.points;
  for (int l = 0; l < mf; ++l) {
    const double y = fine.points[l];
    int j = static_cast<int>(std::upper_bound(yc.begin(), yc.end(), y) - yc.begin()) - 1;
    j = std::clamp(j, 0, mc - 1);
    const double w = (y - yc[j]) / (yc[j + 1] - yc[j]);
    if (w < 1.0)
      p.add(l, j, 1.0 - w);
    if (w > 0.0 && j + 1 < mc)
      p.add(l, j + 1, w);
  }
  return p.build();
}

} // namespace fracext
