#include "fracext/assembly.hpp"
#include "fracext/error.hpp"
#include "fracext/special_functions.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace fracext;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::MatrixXd to_dense(const CsrMatrix &a) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(a.rows, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
      d(i, a.col_indices[k]) = a.values[k];
  return d;
}

FieldVector random_field(std::size_t n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FieldVector v(n);
  for (auto &x : v)
    x = u(gen);
  return v;
}

// Nodal value of a free-DoF vector at (vertex, level), zero on Dirichlet nodes.
double node_value(const TensorMesh &mesh, const FieldVector &v, std::size_t vertex, int level) {
  const long d = mesh.dof(vertex, level);
  return d < 0 ? 0.0 : v[d];
}

// ∫ y^alpha |∇W|^2 over the cylinder, element by element: exact Gauss in x', double-exponential quadrature in y.
double energy_by_quadrature(const TensorMesh &mesh, const FieldVector &v, double alpha) {
  const auto &base = mesh.base();
  const auto &pts = mesh.interval().points;
  const double gx[3] = {0.1127016653792583, 0.5, 0.8872983346207417};
  const double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  boost::math::quadrature::tanh_sinh<double> integrator;
  double total = 0.0;
  for (std::size_t c = 0; c < base.num_cells(); ++c) {
    const auto &cell = base.cells[c];
    const auto hs = base.cell_size(c);
    const int nv = base.vertices_per_cell();
    for (int l = 0; l < mesh.levels(); ++l) {
      const double y0 = pts[l], y1 = pts[l + 1], hy = y1 - y0;
      double lo[4], hi[4];
      for (int a = 0; a < nv; ++a) {
        lo[a] = node_value(mesh, v, cell[a], l);
        hi[a] = node_value(mesh, v, cell[a], l + 1);
      }
      auto integrand = [&](double y) {
        const double t = (y - y0) / hy;
        double sum = 0.0;
        if (nv == 2) {
          for (int q = 0; q < 3; ++q) {
            const double x = gx[q];
            const double w0 = (1 - t) * lo[0] + t * hi[0], w1 = (1 - t) * lo[1] + t * hi[1];
            const double dx = (w1 - w0) / hs[0];
            const double dy = ((1 - x) * (hi[0] - lo[0]) + x * (hi[1] - lo[1])) / hy;
            sum += gw[q] * hs[0] * (dx * dx + dy * dy);
          }
        } else {
          for (int q1 = 0; q1 < 3; ++q1)
            for (int q2 = 0; q2 < 3; ++q2) {
              const double x1 = gx[q1], x2 = gx[q2];
              double w[4], dw[4];
              for (int a = 0; a < 4; ++a) {
                w[a] = (1 - t) * lo[a] + t * hi[a];
                dw[a] = (hi[a] - lo[a]) / hy;
              }
              auto bil = [&](const double *f, double s1, double s2) {
                return (1 - s1) * (1 - s2) * f[0] + s1 * (1 - s2) * f[1] + (1 - s1) * s2 * f[2] + s1 * s2 * f[3];
              };
              const double d1 = ((1 - x2) * (w[1] - w[0]) + x2 * (w[3] - w[2])) / hs[0];
              const double d2 = ((1 - x1) * (w[2] - w[0]) + x1 * (w[3] - w[1])) / hs[1];
              const double d3 = bil(dw, x1, x2);
              sum += gw[q1] * gw[q2] * hs[0] * hs[1] * (d1 * d1 + d2 * d2 + d3 * d3);
            }
        }
        return std::pow(y, alpha) * sum;
      };
      total += integrator.integrate(integrand, y0, y1, 1e-14);
    }
  }
  return total;
}

CsrMatrix kron(const CsrMatrix &a, const CsrMatrix &b) {
  CsrBuilder out(a.rows * b.rows, a.cols * b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
      for (std::size_t p = 0; p < b.rows; ++p)
        for (std::size_t q = b.row_offsets[p]; q < b.row_offsets[p + 1]; ++q)
          out.add(i * b.rows + p, a.col_indices[k] * b.cols + b.col_indices[q], a.values[k] * b.values[q]);
  return out.build();
}

} // namespace

TEST_CASE("single free DoF stiffness") {
  const TensorMesh mesh = build_tensor(uniform_base(1, 2), graded_points(1, 1.0, 1.0));
  const CsrMatrix a = assemble_stiffness(mesh, 0.0);
  REQUIRE(a.rows == 1);
  CHECK(a.at(0, 0) == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  CHECK(weighted_energy_norm(mesh, {1.0}, 0.0) == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
  CHECK(weighted_energy_norm(mesh, {0.0}, 0.0) == 0.0);
}

TEST_CASE("stiffness quadratic form matches element quadrature") {
  struct Case {
    int dim, n, m;
    double grading, alpha;
  };
  const Case cases[] = {{1, 4, 4, 1.0, 0.0}, {1, 4, 4, 2.5, -0.6}, {1, 5, 3, 1.7, 0.5},
                        {2, 3, 3, 1.0, 0.0}, {2, 4, 4, 3.0, -0.6}, {2, 3, 2, 2.0, 0.6}};
  unsigned seed = 10;
  for (const auto &c : cases) {
    const TensorMesh mesh = build_tensor(uniform_base(c.dim, c.n), graded_points(c.m, c.grading, 1.3));
    const CsrMatrix a = assemble_stiffness(mesh, c.alpha);
    for (int r = 0; r < 3; ++r) {
      const FieldVector v = random_field(mesh.num_dofs(), seed++);
      const double ref = energy_by_quadrature(mesh, v, c.alpha);
      CHECK(quadratic_form(a, v, v) == doctest::Approx(ref).epsilon(1e-10));
    }
  }
}

TEST_CASE("coloured assembly agrees with the serial element loop") {
  for (int dim : {1, 2}) {
    const TensorMesh mesh = build_tensor(uniform_base(dim, dim == 1 ? 32 : 8), graded_points(9, 3.0, 1.5));
    for (double alpha : {-0.7, 0.0, 0.6}) {
      const CsrMatrix par = assemble_stiffness(mesh, alpha);
      const CsrMatrix ser = serial::assemble_stiffness(mesh, alpha);
      REQUIRE(par.col_indices == ser.col_indices);
      REQUIRE(par.row_offsets == ser.row_offsets);
      const double scale = ser.max_abs();
      for (std::size_t k = 0; k < par.nnz(); ++k)
        CHECK(std::abs(par.values[k] - ser.values[k]) <= 1e-14 * scale);
      const CsrMatrix mpar = assemble_weighted_mass(mesh, alpha);
      const CsrMatrix mser = serial::assemble_weighted_mass(mesh, alpha);
      for (std::size_t k = 0; k < mpar.nnz(); ++k)
        CHECK(std::abs(mpar.values[k] - mser.values[k]) <= 1e-14 * mser.max_abs());
    }
  }
}

TEST_CASE("stiffness factorises as a Kronecker sum") {
  const BaseMesh base = bisect_marked(uniform_base(1, 4), std::vector<int>{0, 3});
  const GradedInterval iv = graded_points(6, 2.2, 1.1);
  const TensorMesh mesh = build_tensor(base, iv);
  const double alpha = -0.4;
  const auto bo = base_operators(base);
  const auto io = interval_operators(iv, alpha);
  const Eigen::MatrixXd ref = to_dense(kron(bo.stiffness, io.mass)) + to_dense(kron(bo.mass, io.stiffness));
  const Eigen::MatrixXd got = to_dense(assemble_stiffness(mesh, alpha));
  CHECK((ref - got).cwiseAbs().maxCoeff() <= 1e-13 * ref.cwiseAbs().maxCoeff());
}

TEST_CASE("unweighted stiffness is the standard Q1 Laplacian") {
  // Q1 on a uniform 2x2 grid with unit spacing in both directions: diagonal 2/3 per element in 2D.
  const TensorMesh mesh = build_tensor(uniform_base(1, 3), graded_points(3, 1.0, 1.0));
  const Eigen::MatrixXd a = to_dense(assemble_stiffness(mesh, 0.0));
  // Interior node touches four squares of side 1/3, each contributing 2/3.
  CHECK(a(1, 1) == doctest::Approx(8.0 / 3.0));
  // Horizontal and diagonal neighbours: 2 * (-1/6) and -1/3.
  CHECK(a(1, 4) == doctest::Approx(-1.0 / 3.0));
  CHECK(a(1, 5) == doctest::Approx(-1.0 / 3.0));
  CHECK(a(1, 0) == doctest::Approx(-1.0 / 3.0));
}

TEST_CASE("assembled operators are symmetric positive definite") {
  std::mt19937 gen(42);
  std::uniform_real_distribution<double> alpha_dist(-0.95, 0.95), grading_dist(1.0, 6.0);
  for (int trial = 0; trial < 12; ++trial) {
    const int dim = 1 + trial % 2;
    const TensorMesh mesh =
        build_tensor(uniform_base(dim, 3 + trial % 4), graded_points(2 + trial % 5, grading_dist(gen), 1.0 + 0.2 * trial));
    const double alpha = alpha_dist(gen);
    for (const CsrMatrix &a : {assemble_stiffness(mesh, alpha), assemble_weighted_mass(mesh, alpha)}) {
      CHECK(max_asymmetry(a) <= 1e-12 * a.max_abs());
      Eigen::LLT<Eigen::MatrixXd> llt(to_dense(a));
      CHECK(llt.info() == Eigen::Success);
    }
  }
  CHECK_THROWS_AS(assemble_stiffness(build_tensor(uniform_base(1, 2), graded_points(2, 1.0, 1.0)), 1.0),
                  InvalidArgument);
}

TEST_CASE("trace load") {
  const TensorMesh mesh = build_tensor(uniform_base(1, 64), graded_points(4, 2.0, 1.0));
  const double h = 1.0 / 64;
  const FieldVector zero = assemble_trace_load(mesh, [](double, double) { return 0.0; }, 0.3);
  for (double v : zero)
    CHECK(v == 0.0);

  const FieldVector ones = assemble_trace_load(mesh, [](double, double) { return 1.0; }, 0.5);
  for (std::size_t v = 1; v < 64; ++v) {
    CHECK(ones[mesh.dof(v, 0)] == doctest::Approx(h).epsilon(1e-14));
    CHECK(ones[mesh.dof(v, 1)] == 0.0);
  }

  const FieldVector sines = assemble_trace_load(mesh, [](double x, double) { return std::sin(kPi * x); }, 0.5);
  for (std::size_t v = 1; v < 64; ++v) {
    const double xi = v * h;
    const double exact = 2.0 * std::sin(kPi * xi) * (1.0 - std::cos(kPi * h)) / (kPi * kPi * h);
    CHECK(std::abs(sines[mesh.dof(v, 0)] - exact) < 1e-10);
  }

  const double ds = normalization_ds(0.25);
  const FieldVector scaled = assemble_trace_load(mesh, [](double, double) { return 1.0; }, 0.25);
  CHECK(scaled[mesh.dof(5, 0)] == doctest::Approx(ds * h).epsilon(1e-14));
}

TEST_CASE("trace load on the square") {
  const TensorMesh mesh = build_tensor(uniform_base(2, 8), graded_points(2, 2.0, 1.0));
  const FieldVector ones = trace_moments(mesh, [](double, double) { return 1.0; });
  const double h = 1.0 / 8;
  for (std::size_t v : mesh.free_vertices())
    CHECK(ones[mesh.dof(v, 0)] == doctest::Approx(h * h).epsilon(1e-14));
}

TEST_CASE("trace mass") {
  const int n = 16;
  const double h = 1.0 / n;
  const TensorMesh mesh = build_tensor(uniform_base(1, n), graded_points(3, 2.0, 1.0));
  const CsrMatrix mt = assemble_trace_mass(mesh);
  for (std::size_t v = 1; v < static_cast<std::size_t>(n); ++v) {
    const long d = mesh.dof(v, 0);
    CHECK(mt.at(d, d) == doctest::Approx(2.0 * h / 3.0));
    double row = 0.0;
    for (std::size_t k = mt.row_offsets[d]; k < mt.row_offsets[d + 1]; ++k)
      row += mt.values[k];
    // Nodes next to the boundary lose the coupling to the Dirichlet node.
    CHECK(row == doctest::Approx(v == 1 || v == n - 1 ? h - h / 6.0 : h));
    CHECK(mt.row_offsets[mesh.dof(v, 1) + 1] == mt.row_offsets[mesh.dof(v, 1)]);
  }
  // Total mass of the interior hats: sum of ∫ hat_i = (n-1) h minus the two boundary couplings.
  double total = 0.0;
  for (double x : mt.values)
    total += x;
  CHECK(total == doctest::Approx((n - 1) * h - 2.0 * h / 6.0).epsilon(1e-12));
}

TEST_CASE("weighted Poincare constant is stable under refinement") {
  const double s = 0.3, alpha = 1.0 - 2.0 * s;
  double previous = 0.0;
  for (int n : {4, 8, 16}) {
    const TensorMesh mesh = build_tensor(uniform_base(1, n), graded_points(n, default_grading(s), 1.0));
    const Eigen::MatrixXd a = to_dense(assemble_stiffness(mesh, alpha));
    const Eigen::MatrixXd m = to_dense(assemble_weighted_mass(mesh, alpha));
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, a);
    const double cp = std::sqrt(eig.eigenvalues().maxCoeff());
    for (unsigned r = 0; r < 50; ++r) {
      const FieldVector v = random_field(mesh.num_dofs(), 100 + r);
      CHECK(weighted_l2_norm(mesh, v, alpha) <= cp * weighted_energy_norm(mesh, v, alpha) * (1.0 + 1e-12));
    }
    if (previous > 0.0)
      CHECK(cp <= 1.1 * previous);
    previous = cp;
  }
}

TEST_CASE("trace helpers") {
  const TensorMesh mesh = build_tensor(uniform_base(1, 4), graded_points(2, 1.0, 1.0));
  const auto nodal = nodal_values(mesh.base(), [](double x, double) { return x * (1.0 - x); });
  const FieldVector v = embed_trace(mesh, nodal);
  const auto back = trace_values(mesh, v);
  for (std::size_t k = 0; k < back.size(); ++k)
    CHECK(back[k] == doctest::Approx(nodal[k]));
  CHECK(v[mesh.dof(2, 1)] == 0.0);
}

TEST_CASE("base cell colouring separates vertices") {
  for (int dim : {1, 2}) {
    const BaseMesh base = uniform_base(dim, 6);
    const auto colors = color_base_cells(base);
    CHECK(colors.size() == (dim == 1 ? 2u : 4u));
    std::size_t total = 0;
    for (const auto &cls : colors) {
      std::vector<int> hits(base.num_vertices(), 0);
      for (std::size_t c : cls)
        for (int a = 0; a < base.vertices_per_cell(); ++a)
          ++hits[base.cells[c][a]];
      for (int h : hits)
        CHECK(h <= 1);
      total += cls.size();
    }
    CHECK(total == base.num_cells());
  }
}
