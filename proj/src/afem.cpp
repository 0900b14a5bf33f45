#include "fracext/afem.hpp"

#include "fracext/assembly.hpp"
#include "fracext/error.hpp"
#include "fracext/moments.hpp"
#include "fracext/solver.hpp"
#include "fracext/special_functions.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fracext {

namespace {

using Gauss6 = boost::math::quadrature::gauss<double, 6>;

double cell_left(const BaseMesh &base, std::size_t c) { return base.vertices[base.cells[c][0]][0]; }
double cell_right(const BaseMesh &base, std::size_t c) { return base.vertices[base.cells[c][1]][0]; }

void require_1d(const BaseMesh &base, const char *what) {
  if (base.dim != 1)
    throw UnsupportedDimension(std::string(what) + ": cylindrical stars are implemented for n = 1 only");
}

// P2 x P2 (or P2 x P1) weighted matrices of the whole interval, rows/cols limited to `rows` and `cols`.
struct IntervalPair {
  CsrMatrix mass, stiffness;
};

IntervalPair interval_matrices(const GradedInterval &iv, double alpha, int p, int q) {
  const int m = iv.cells();
  const int rows = p * m, cols = q * m; // the top node is dropped
  CsrBuilder mb(rows, cols), kb(rows, cols);
  for (int l = 0; l < m; ++l) {
    const CellMatrices cm = cell_matrices(p, q, weighted_moments(iv.points[l], iv.points[l + 1], alpha));
    for (int i = 0; i <= p; ++i)
      for (int k = 0; k <= q; ++k) {
        const int r = p * l + i, c = q * l + k;
        if (r >= rows || c >= cols)
          continue;
        mb.add(r, c, cm.m(i, k));
        kb.add(r, c, cm.k(i, k));
      }
  }
  return {mb.build(), kb.build()};
}

void add_scaled(const CsrMatrix &a, std::span<const double> x, double scale, std::span<double> y) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    double sum = 0.0;
    for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
      sum += a.values[k] * x[a.col_indices[k]];
    y[i] += scale * sum;
  }
}

Eigen::SparseMatrix<double> to_eigen(const CsrMatrix &a, double ca, const CsrMatrix &b, double cb) {
  const CsrMatrix sum = add(ca, a, cb, b);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(sum.nnz());
  for (std::size_t i = 0; i < sum.rows; ++i)
    for (std::size_t k = sum.row_offsets[i]; k < sum.row_offsets[i + 1]; ++k)
      t.emplace_back(static_cast<int>(i), sum.col_indices[k], sum.values[k]);
  Eigen::SparseMatrix<double> m(sum.rows, sum.cols);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

// Star problem with the y-matrices shared by all stars of a mesh.
struct StarContext {
  const TensorMesh &mesh;
  IntervalPair yy; // P2 x P2
  IntervalPair yl; // P2 x P1
  double ds;
  double alpha;
};

StarContext make_context(const TensorMesh &mesh, double s) {
  const double alpha = 1.0 - 2.0 * s;
  return {mesh, interval_matrices(mesh.interval(), alpha, 2, 2), interval_matrices(mesh.interval(), alpha, 2, 1),
          normalization_ds(s), alpha};
}

StarProblem assemble_with(const StarContext &ctx, const CylindricalStar &star, const FieldVector &v,
                          const SpatialFunction &f) {
  const TensorMesh &mesh = ctx.mesh;
  const BaseMesh &base = mesh.base();
  const int ncell = static_cast<int>(star.cells.size());
  const int m = mesh.levels();
  StarProblem p;
  p.nx = 2 * ncell - 1;
  p.ny = 2 * m;
  p.kx.assign(p.nx * p.nx, 0.0);
  p.mx.assign(p.nx * p.nx, 0.0);
  p.ky = ctx.yy.stiffness;
  p.my = ctx.yy.mass;
  p.rhs.assign(p.dim(), 0.0);

  const auto basis = lagrange_basis(2);
  std::vector<double> values(m), my_v(p.ny), ky_v(p.ny);
  for (int k = 0; k < ncell; ++k) {
    const std::size_t c = star.cells[k];
    const double xa = cell_left(base, c), xb = cell_right(base, c), h = xb - xa;
    const CellMatrices qq = cell_matrices(2, 2, plain_moments(xa, xb));
    const CellMatrices ql = cell_matrices(2, 1, plain_moments(xa, xb));
    // local P2 node i of cell k is star node 2k + i - 1
    auto star_index = [&](int i) { return 2 * k + i - 1; };
    for (int i = 0; i < 3; ++i) {
      const int a = star_index(i);
      if (a < 0 || a >= p.nx)
        continue;
      for (int j = 0; j < 3; ++j) {
        const int b = star_index(j);
        if (b < 0 || b >= p.nx)
          continue;
        p.kx[a * p.nx + b] += qq.k(i, j);
        p.mx[a * p.nx + b] += qq.m(i, j);
      }
      const double load = Gauss6::integrate([&](double t) { return f(xa + t * h, 0.0) * evaluate(basis[i], t); },
                                            0.0, 1.0) * h;
      p.rhs[static_cast<std::size_t>(a) * p.ny] += ctx.ds * load;
    }
    // - ∫ y^alpha ∇V·∇W, V bilinear on the cell
    for (int vtx = 0; vtx < 2; ++vtx) {
      const std::size_t vertex = base.cells[c][vtx];
      for (int l = 0; l < m; ++l) {
        const long d = mesh.dof(vertex, l);
        values[l] = d < 0 ? 0.0 : v[d];
      }
      std::fill(my_v.begin(), my_v.end(), 0.0);
      std::fill(ky_v.begin(), ky_v.end(), 0.0);
      add_scaled(ctx.yl.mass, values, 1.0, my_v);
      add_scaled(ctx.yl.stiffness, values, 1.0, ky_v);
      for (int i = 0; i < 3; ++i) {
        const int a = star_index(i);
        if (a < 0 || a >= p.nx)
          continue;
        const double kxa = ql.k(i, vtx), mxa = ql.m(i, vtx);
        double *row = p.rhs.data() + static_cast<std::size_t>(a) * p.ny;
        for (int j = 0; j < p.ny; ++j)
          row[j] -= kxa * my_v[j] + mxa * ky_v[j];
      }
    }
  }
  return p;
}

double osc_with(const BaseMesh &base, const CylindricalStar &star, const SpatialFunction &f, double s, double ds) {
  double sum = 0.0;
  for (std::size_t c : star.cells) {
    const double xa = cell_left(base, c), h = cell_right(base, c) - xa;
    const double mean = Gauss6::integrate([&](double t) { return f(xa + t * h, 0.0); }, 0.0, 1.0);
    sum += h * Gauss6::integrate(
                   [&](double t) {
                     const double e = f(xa + t * h, 0.0) - mean;
                     return e * e;
                   },
                   0.0, 1.0);
  }
  return std::sqrt(ds * std::pow(star.diameter, 2.0 * s) * sum);
}

template <bool Parallel>
IndicatorSet estimate_impl(const TensorMesh &mesh, const FieldVector &v, const SpatialFunction &f, double s) {
  require_1d(mesh.base(), "estimate");
  detail::require(v.size() == mesh.num_dofs(), "estimate: vector does not match the mesh");
  const auto stars = build_stars(mesh.base());
  const StarContext ctx = make_context(mesh, s);
  const long n = static_cast<long>(stars.size());
  IndicatorSet out;
  out.estimator.assign(n, 0.0);
  out.oscillation.assign(n, 0.0);
  out.total.assign(n, 0.0);
  auto one = [&](long i) {
    const StarProblem p = assemble_with(ctx, stars[i], v, f);
    out.estimator[i] = indicator(p, solve_star(p));
    out.oscillation[i] = osc_with(mesh.base(), stars[i], f, s, ctx.ds);
    out.total[i] = std::hypot(out.estimator[i], out.oscillation[i]);
  };
  if constexpr (Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i)
      one(i);
  } else {
    for (long i = 0; i < n; ++i)
      one(i);
  }
  auto root_sum = [](const std::vector<double> &x) {
    return std::sqrt(std::accumulate(x.begin(), x.end(), 0.0, [](double acc, double e) { return acc + e * e; }));
  };
  out.global_estimator = root_sum(out.estimator);
  out.global_oscillation = root_sum(out.oscillation);
  out.global_total = root_sum(out.total);
  return out;
}

// Free-vertex prolongation between a 1D base mesh and its uniform bisection.
CsrMatrix bisection_prolongation(std::size_t coarse_vertices) {
  const std::size_t nc = coarse_vertices, nf = 2 * nc - 1;
  CsrBuilder p(nf - 2, nc - 2);
  for (std::size_t i = 1; i + 1 < nf; ++i) {
    auto put = [&](std::size_t c, double w) {
      if (c >= 1 && c + 1 < nc)
        p.add(i - 1, c - 1, w);
    };
    if (i % 2 == 0)
      put(i / 2, 1.0);
    else {
      put(i / 2, 0.5);
      put(i / 2 + 1, 0.5);
    }
  }
  return p.build();
}

BaseMesh bisect_all(const BaseMesh &base) {
  std::vector<int> all(base.num_cells());
  std::iota(all.begin(), all.end(), 0);
  return bisect_marked(base, all);
}

} // namespace

std::vector<CylindricalStar> build_stars(const BaseMesh &base) {
  require_1d(base, "build_stars");
  const std::size_t nv = base.num_vertices();
  std::vector<CylindricalStar> stars(nv);
  // 1D cells are stored left to right with cell c = [v_c, v_{c+1}]
  for (std::size_t v = 0; v < nv; ++v) {
    CylindricalStar &st = stars[v];
    st.center = v;
    if (v > 0)
      st.cells.push_back(v - 1);
    if (v + 1 < nv)
      st.cells.push_back(v);
    for (std::size_t c : st.cells)
      st.diameter += cell_right(base, c) - cell_left(base, c);
  }
  return stars;
}

StarProblem assemble_star_problem(const TensorMesh &mesh, const CylindricalStar &star, const FieldVector &v,
                                  const SpatialFunction &f, double s) {
  require_1d(mesh.base(), "assemble_star_problem");
  detail::require(v.size() == mesh.num_dofs(), "assemble_star_problem: vector does not match the mesh");
  return assemble_with(make_context(mesh, s), star, v, f);
}

FieldVector solve_star(const StarProblem &p) {
  const Eigen::Map<const Eigen::MatrixXd> kx(p.kx.data(), p.nx, p.nx), mx(p.mx.data(), p.nx, p.nx);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(kx, mx);
  if (es.info() != Eigen::Success)
    throw IndefiniteMatrix("solve_star: local x' matrices are not positive definite");
  const Eigen::MatrixXd &phi = es.eigenvectors(); // phi^T Mx phi = I, phi^T Kx phi = diag(mu)
  // row-major rhs: R(a, j) = rhs[a * ny + j]
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> r(p.rhs.data(), p.nx,
                                                                                                    p.ny);
  const Eigen::MatrixXd rt = phi.transpose() * r;
  Eigen::MatrixXd xi(p.nx, p.ny);
  for (int i = 0; i < p.nx; ++i) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(to_eigen(p.my, es.eigenvalues()[i], p.ky, 1.0));
    if (ldlt.info() != Eigen::Success)
      throw IndefiniteMatrix("solve_star: singular local system");
    xi.row(i) = ldlt.solve(rt.row(i).transpose()).transpose();
  }
  const Eigen::MatrixXd eta = phi * xi;
  FieldVector out(p.dim());
  for (int a = 0; a < p.nx; ++a)
    for (int j = 0; j < p.ny; ++j)
      out[static_cast<std::size_t>(a) * p.ny + j] = eta(a, j);
  return out;
}

double indicator(const StarProblem &p, const FieldVector &eta) {
  detail::require(eta.size() == p.dim(), "indicator: vector does not match the star problem");
  std::vector<double> my_e(p.dim(), 0.0), ky_e(p.dim(), 0.0);
  for (int b = 0; b < p.nx; ++b) {
    const std::span<const double> row(eta.data() + static_cast<std::size_t>(b) * p.ny, p.ny);
    add_scaled(p.my, row, 1.0, std::span<double>(my_e.data() + static_cast<std::size_t>(b) * p.ny, p.ny));
    add_scaled(p.ky, row, 1.0, std::span<double>(ky_e.data() + static_cast<std::size_t>(b) * p.ny, p.ny));
  }
  double sum = 0.0;
  for (int a = 0; a < p.nx; ++a)
    for (int b = 0; b < p.nx; ++b) {
      double dm = 0.0, dk = 0.0;
      for (int j = 0; j < p.ny; ++j) {
        const double ea = eta[static_cast<std::size_t>(a) * p.ny + j];
        dm += ea * my_e[static_cast<std::size_t>(b) * p.ny + j];
        dk += ea * ky_e[static_cast<std::size_t>(b) * p.ny + j];
      }
      sum += p.kx[a * p.nx + b] * dm + p.mx[a * p.nx + b] * dk;
    }
  return std::sqrt(std::max(0.0, sum));
}

double oscillation(const BaseMesh &base, const CylindricalStar &star, const SpatialFunction &f, double s) {
  require_1d(base, "oscillation");
  return osc_with(base, star, f, s, normalization_ds(s));
}

IndicatorSet estimate(const TensorMesh &mesh, const FieldVector &v, const SpatialFunction &f, double s) {
  return estimate_impl<true>(mesh, v, f, s);
}

IndicatorSet serial::estimate(const TensorMesh &mesh, const FieldVector &v, const SpatialFunction &f, double s) {
  return estimate_impl<false>(mesh, v, f, s);
}

std::vector<std::size_t> dorfler_mark(const std::vector<double> &totals, double theta) {
  detail::require(theta > 0.0 && theta <= 1.0, "dorfler_mark: theta must lie in (0, 1]");
  std::vector<std::size_t> order(totals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return totals[a] > totals[b]; });
  double all = 0.0;
  for (double t : totals) {
    detail::require(t >= 0.0, "dorfler_mark: indicators must be non-negative");
    all += t * t;
  }
  const double target = theta * theta * all;
  std::vector<std::size_t> marked;
  double sum = 0.0;
  for (std::size_t i : order) {
    if (!marked.empty() && sum >= target)
      break;
    marked.push_back(i);
    sum += totals[i] * totals[i];
  }
  if (theta == 1.0)
    marked = order;
  return marked;
}

BaseMesh refine_stars(const BaseMesh &base, const std::vector<std::size_t> &marked_vertices) {
  require_1d(base, "refine_stars");
  std::vector<int> cells;
  const int nc = static_cast<int>(base.num_cells());
  for (std::size_t v : marked_vertices) {
    detail::require(v < base.num_vertices(), "refine_stars: vertex index out of range");
    if (v > 0)
      cells.push_back(static_cast<int>(v) - 1);
    if (static_cast<int>(v) < nc)
      cells.push_back(static_cast<int>(v));
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return bisect_marked(base, cells);
}

TensorMesh adapted_tensor(const BaseMesh &base, double s) {
  const std::size_t cells = base.num_cells();
  return TensorMesh(base, graded_points(matched_interval_cells(cells, base.dim), default_grading(s),
                                        truncation_height(cells)));
}

OverkillReference overkill_reference(const TensorMesh &mesh, const SpatialFunction &f, double s, int depth) {
  require_1d(mesh.base(), "overkill_reference");
  detail::require(depth >= 1, "overkill_reference: depth must be >= 1");
  BaseMesh base = mesh.base();
  for (int k = 0; k < depth; ++k)
    base = bisect_all(base);
  const GradedInterval &iv = mesh.interval();
  TensorMesh fine(std::move(base), graded_points(iv.cells() << depth, iv.grading, iv.height));
  CsrMatrix a = assemble_stiffness(fine, 1.0 - 2.0 * s);
  FieldVector u = direct_solve(a, assemble_trace_load(fine, f, s));
  return {std::move(fine), std::move(u), std::move(a), depth};
}

FieldVector prolong_to_overkill(const TensorMesh &mesh, const TensorMesh &fine, const FieldVector &v) {
  detail::require(v.size() == mesh.num_dofs(), "prolong_to_overkill: vector does not match the mesh");
  const std::size_t ratio = fine.base().num_cells() / mesh.base().num_cells();
  detail::require(ratio >= 2 && (ratio & (ratio - 1)) == 0 && ratio * mesh.base().num_cells() == fine.base().num_cells(),
                  "prolong_to_overkill: fine base is not a uniform refinement");
  CsrMatrix base_p = bisection_prolongation(mesh.base().num_vertices());
  for (std::size_t nv = 2 * mesh.base().num_vertices() - 1; nv < fine.base().num_vertices(); nv = 2 * nv - 1)
    base_p = multiply(bisection_prolongation(nv), base_p);
  const CsrMatrix p = kronecker(base_p, interval_prolongation(mesh.interval(), fine.interval()));
  FieldVector out(p.rows);
  kernels::spmv(p, v, out);
  return out;
}

std::vector<double> star_errors(const OverkillReference &ref, const TensorMesh &mesh, const FieldVector &v,
                                double alpha) {
  const TensorMesh &fine = ref.mesh;
  FieldVector d = prolong_to_overkill(mesh, fine, v);
  for (std::size_t i = 0; i < d.size(); ++i)
    d[i] = ref.solution[i] - d[i];

  // energy of d on every fine base cell, summed over all levels
  const BaseMesh &fb = fine.base();
  const GradedInterval &iv = fine.interval();
  const int m = fine.levels();
  std::vector<CellMatrices> ycells(m);
  for (int l = 0; l < m; ++l)
    ycells[l] = cell_matrices(1, 1, weighted_moments(iv.points[l], iv.points[l + 1], alpha));
  std::vector<double> cell_energy(fb.num_cells(), 0.0);
  for (std::size_t c = 0; c < fb.num_cells(); ++c) {
    const auto bx = base_cell_matrices(fb, c);
    double sum = 0.0;
    for (int l = 0; l < m; ++l) {
      double w[4];
      for (int a = 0; a < 2; ++a)
        for (int j = 0; j < 2; ++j) {
          const long dof = fine.dof(fb.cells[c][a], l + j);
          w[2 * a + j] = dof < 0 ? 0.0 : d[dof];
        }
      for (int a = 0; a < 2; ++a)
        for (int i = 0; i < 2; ++i)
          for (int b = 0; b < 2; ++b)
            for (int j = 0; j < 2; ++j)
              sum += w[2 * a + i] * w[2 * b + j] *
                     (bx.stiffness[a * 2 + b] * ycells[l].m(i, j) + bx.mass[a * 2 + b] * ycells[l].k(i, j));
    }
    cell_energy[c] = sum;
  }
  const auto stars = build_stars(mesh.base());
  const std::size_t ratio = fb.num_cells() / mesh.base().num_cells();
  std::vector<double> out(stars.size());
  for (std::size_t z = 0; z < stars.size(); ++z) {
    double sum = 0.0;
    for (std::size_t c : stars[z].cells)
      for (std::size_t k = 0; k < ratio; ++k) // coarse cell c covers fine cells c*ratio .. c*ratio + ratio - 1
        sum += cell_energy[c * ratio + k];
    out[z] = std::sqrt(std::max(0.0, sum));
  }
  return out;
}

std::vector<AfemRecord> afem_loop(const AfemConfig &config) {
  detail::require(config.s > 0.0 && config.s < 1.0, "afem_loop: s must lie in (0,1)");
  detail::require(static_cast<bool>(config.f), "afem_loop: right-hand side missing");
  detail::require(config.initial_cells >= 2, "afem_loop: need at least two initial cells");
  detail::require(config.max_iterations >= 1, "afem_loop: need at least one iteration");
  const double s = config.s, alpha = 1.0 - 2.0 * s;
  double ds_fu = 0.0;
  if (config.oracle) {
    detail::require(config.oracle->f.dim == 1 && config.oracle->u.dim == 1, "afem_loop: oracle must be one-dimensional");
    ds_fu = normalization_ds(s) * l2_pairing(config.oracle->f, config.oracle->u);
  }

  std::vector<AfemRecord> records;
  BaseMesh base = uniform_base(1, config.initial_cells);
  for (int it = 0; it < config.max_iterations; ++it) {
    const TensorMesh mesh = adapted_tensor(base, s);
    const CsrMatrix a = assemble_stiffness(mesh, alpha);
    const FieldVector b = assemble_trace_load(mesh, config.f, s);
    FieldVector v;
    try {
      v = direct_solve(a, b);
    } catch (const Error &) {
      break; // keep the records gathered so far
    }
    const IndicatorSet ind = estimate(mesh, v, config.f, s);

    AfemRecord rec;
    rec.iteration = it;
    rec.cells = base.num_cells();
    rec.levels = mesh.levels();
    rec.height = mesh.interval().height;
    rec.dofs = mesh.num_dofs();
    rec.estimator = ind.global_estimator;
    rec.oscillation = ind.global_oscillation;
    rec.total = ind.global_total;
    rec.star_indicators = ind.estimator;
    if (config.oracle) {
      rec.energy_error = extension_energy_error(a, b, v, ds_fu);
      const TraceError te = trace_error_hs(mesh, v, config.oracle->u, s, config.oracle->u_tail_sq);
      rec.trace_error = te.value;
      rec.cutoff_warning = te.cutoff_warning;
    }
    if (config.overkill) {
      const OverkillReference ref = overkill_reference(mesh, config.f, s, config.overkill_depth);
      rec.star_overkill_errors = star_errors(ref, mesh, v, alpha);
      FieldVector d = prolong_to_overkill(mesh, ref.mesh, v);
      for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = ref.solution[i] - d[i];
      rec.overkill_error = std::sqrt(std::max(0.0, quadratic_form(ref.stiffness, d, d)));
    }
    const bool last = it + 1 == config.max_iterations || rec.dofs >= config.max_dofs;
    if (!last) {
      const auto marked = dorfler_mark(ind.total, config.theta);
      rec.marked = marked.size();
      base = refine_stars(base, marked);
    }
    records.push_back(std::move(rec));
    if (last)
      break;
  }
  return records;
}

} // namespace fracext
