#include "fracext/assembly.hpp"
#include "fracext/special_functions.hpp"
#include "fracext/spectral.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace fracext;

namespace {

constexpr double kPi = std::numbers::pi;

double fit_slope(const std::vector<double> &x, const std::vector<double> &y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= x.size();
  my /= y.size();
  double num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    den += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return num / den;
}

} // namespace

TEST_CASE("sine expansion layout and evaluation") {
  const SineExpansion one = sine_mode(1, 8, 1.0, 1);
  CHECK(one.eigenvalue(0) == doctest::Approx(kPi * kPi));
  CHECK(one.evaluate(0.5) == doctest::Approx(std::sqrt(2.0)));
  const SineExpansion sq = sine_mode(2, 4, 1.0, 2, 3);
  CHECK(sq.eigenvalue((2 - 1) * 4 + (3 - 1)) == doctest::Approx(13.0 * kPi * kPi));
  CHECK(sq.evaluate(0.25, 0.5) == doctest::Approx(2.0 * std::sin(kPi / 2.0) * std::sin(1.5 * kPi)));
  // Eigenvalues increase along the 1D ordering.
  for (std::size_t i = 1; i < one.size(); ++i)
    CHECK(one.eigenvalue(i) > one.eigenvalue(i - 1));
}

TEST_CASE("spectral solve") {
  for (double s : {0.2, 0.5, 0.9}) {
    const SineExpansion f = sine_mode(1, 16, std::pow(kPi, 2.0 * s) / std::sqrt(2.0), 1);
    const SineExpansion u = spectral_solve(f, s);
    CHECK(u.evaluate(0.3) == doctest::Approx(std::sin(0.3 * kPi)).epsilon(1e-14));
    const SineExpansion zero = spectral_solve(SineExpansion::zeros(1, 16), s);
    CHECK(hs_norm(zero, s) == 0.0);
  }
  const SineExpansion one = constant_one(1, 64);
  boost::math::quadrature::gauss_kronrod<double, 61> gk;
  for (int k = 1; k <= 7; ++k) {
    const double ref = gk.integrate([k](double x) { return std::sqrt(2.0) * std::sin(k * kPi * x); }, 0.0, 1.0);
    CHECK(one.at(k) == doctest::Approx(ref).epsilon(1e-12));
  }
  const SineExpansion u = spectral_solve(one, 0.3);
  CHECK(u.at(3) == doctest::Approx(one.at(3) * std::pow(3.0 * kPi, -0.6)).epsilon(1e-14));
}

TEST_CASE("spectral apply and solve are inverse") {
  SineExpansion w = SineExpansion::zeros(2, 12);
  for (std::size_t i = 0; i < w.size(); ++i)
    w.coeffs[i] = std::sin(1.0 + i);
  const SineExpansion back = spectral_solve(spectral_apply(w, 0.7), 0.7);
  for (std::size_t i = 0; i < w.size(); ++i)
    CHECK(std::abs(back.coeffs[i] - w.coeffs[i]) <= 1e-13 * std::abs(w.coeffs[i]) + 1e-15);
}

TEST_CASE("H^s norms") {
  for (double s : {-0.5, 0.0, 0.3, 1.0}) {
    CHECK(hs_norm(sine_mode(1, 4, 1.0, 1), s) == doctest::Approx(std::pow(kPi, s)).epsilon(1e-14));
    CHECK(hs_norm(sine_mode(1, 4, 1.0, 3), s) == doctest::Approx(std::pow(9.0 * kPi * kPi, s / 2.0)).epsilon(1e-14));
  }
  SineExpansion w = SineExpansion::zeros(1, 5);
  w.at(1) = 3.0;
  w.at(4) = 4.0;
  CHECK(hs_norm(w, 0.0) == doctest::Approx(5.0));
  CHECK(hs_norm(SineExpansion::zeros(1, 5), 0.4) == 0.0);
}

TEST_CASE("exact extensions") {
  for (double y : {0.1, 1.0, 3.0}) {
    CHECK(exact_extension_1d(0.4, 0.0, y) == 0.0);
    CHECK(exact_extension_square(0.4, 0.0, 0.3, y) == 0.0);
    CHECK(exact_extension_square(0.3, 0.2, 0.7, y) == doctest::Approx(exact_extension_square(0.3, 0.7, 0.2, y)));
  }
  // s = 1/2: U = sin(pi x) exp(-pi y)
  for (double y : {0.0, 0.2, 1.5})
    CHECK(exact_extension_1d(0.5, 0.3, y) == doctest::Approx(std::sin(0.3 * kPi) * std::exp(-kPi * y)).epsilon(1e-11));
}

TEST_CASE("extension traces by small-y extrapolation") {
  for (double s : {0.2, 0.5, 0.8}) {
    const double u3 = exact_extension_1d(s, 0.5, 1e-3), u4 = exact_extension_1d(s, 0.5, 1e-4);
    // Leading correction is O(y^(2s)); Richardson step eliminates it.
    const double r = std::pow(10.0, 2.0 * s);
    const double trace = (r * u4 - u3) / (r - 1.0);
    CHECK(trace == doctest::Approx(1.0).epsilon(1e-3));
    const double t3 = exact_extension_square(s, 0.5, 0.5, 1e-3), t4 = exact_extension_square(s, 0.5, 0.5, 1e-4);
    CHECK((r * t4 - t3) / (r - 1.0) == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("conormal derivative of the extension realises d_s (-Delta)^s") {
  for (double s : {0.3, 0.5, 0.7}) {
    const double alpha = 1.0 - 2.0 * s;
    auto flux = [&](double y) {
      const double d = 1e-3 * y;
      const double dy = (exact_extension_1d(s, 0.5, y + d) - exact_extension_1d(s, 0.5, y - d)) / (2.0 * d);
      return -std::pow(y, alpha) * dy;
    };
    const double expected = normalization_ds(s) * std::pow(kPi, 2.0 * s);
    const double f1 = flux(1e-3), f2 = flux(5e-4);
    if (s <= 0.5) {
      CHECK(f1 == doctest::Approx(expected).epsilon(0.01));
      CHECK(f2 == doctest::Approx(expected).epsilon(0.01));
    }
    // The flux approaches its limit like y^(2-2s); one extrapolation step removes that term.
    const double r = std::pow(2.0, 2.0 - 2.0 * s);
    CHECK((r * f2 - f1) / (r - 1.0) == doctest::Approx(expected).epsilon(0.01));
  }
}

TEST_CASE("piecewise-linear sine coefficients match quadrature") {
  BaseMesh base = uniform_base(1, 5);
  base = bisect_marked(base, std::vector<int>{0, 2});
  std::vector<double> values(base.num_vertices());
  for (std::size_t k = 0; k < values.size(); ++k)
    values[k] = base.boundary[k] ? 0.0 : std::cos(3.0 * base.vertices[k][0]) + 0.1 * k;
  const SineExpansion c = piecewise_linear_coefficients(base, values, 600);
  boost::math::quadrature::gauss_kronrod<double, 61> gk;
  for (int k : {1, 2, 7, 100, 333, 600}) {
    double ref = 0.0;
    for (std::size_t cell = 0; cell < base.num_cells(); ++cell) {
      const int a = base.cells[cell][0], b = base.cells[cell][1];
      const double xa = base.vertices[a][0], xb = base.vertices[b][0];
      auto f = [&](double x) {
        const double t = (x - xa) / (xb - xa);
        return std::sqrt(2.0) * ((1 - t) * values[a] + t * values[b]) * std::sin(k * kPi * x);
      };
      ref += gk.integrate(f, xa, xb, 20, 1e-15);
    }
    CHECK(std::abs(c.at(k) - ref) < 1e-13);
  }
}

TEST_CASE("bilinear sine coefficients on the square") {
  const BaseMesh base = uniform_base(2, 4);
  std::vector<double> values(base.num_vertices(), 0.0);
  for (std::size_t k = 0; k < values.size(); ++k)
    if (!base.boundary[k])
      values[k] = 1.0 + base.vertices[k][0] * 2.0 - base.vertices[k][1];
  const SineExpansion c = piecewise_linear_coefficients(base, values, 9);
  // 2D oracle: product Gauss on every cell.
  boost::math::quadrature::gauss_kronrod<double, 15> gk;
  for (auto [m, n] : {std::pair{1, 1}, std::pair{2, 3}, std::pair{9, 4}}) {
    double ref = 0.0;
    for (std::size_t cell = 0; cell < base.num_cells(); ++cell) {
      const auto &cv = base.cells[cell];
      const double x0 = base.vertices[cv[0]][0], y0 = base.vertices[cv[0]][1], h = 0.25;
      auto inner = [&](double y) {
        auto f = [&](double x) {
          const double s1 = (x - x0) / h, s2 = (y - y0) / h;
          const double v = (1 - s1) * (1 - s2) * values[cv[0]] + s1 * (1 - s2) * values[cv[1]] +
                           (1 - s1) * s2 * values[cv[2]] + s1 * s2 * values[cv[3]];
          return 2.0 * v * std::sin(m * kPi * x) * std::sin(n * kPi * y);
        };
        return gk.integrate(f, x0, x0 + h);
      };
      ref += gk.integrate(inner, y0, y0 + h);
    }
    CHECK(std::abs(c.at(m, n) - ref) < 1e-12);
  }
}

TEST_CASE("trace error of the nodal interpolant converges at rate 2 - s") {
  const double s = 0.3;
  const SineExpansion u = sine_mode(1, 1 << 16, 1.0 / std::sqrt(2.0), 1); // sin(pi x)
  std::vector<double> hs, errs;
  for (int n : {32, 64, 128, 256}) {
    const TensorMesh mesh = build_tensor(uniform_base(1, n), graded_points(2, 1.0, 1.0));
    const FieldVector v = embed_trace(mesh, nodal_values(mesh.base(), [](double x, double) { return std::sin(kPi * x); }));
    const TraceError e = trace_error_hs(mesh, v, u, s);
    CHECK_FALSE(e.cutoff_warning);
    hs.push_back(1.0 / n);
    errs.push_back(e.value);
  }
  CHECK(fit_slope(hs, errs) == doctest::Approx(2.0 - s).epsilon(0.05));
}

TEST_CASE("trace error depends only on the trace") {
  const TensorMesh mesh = build_tensor(uniform_base(1, 8), graded_points(3, 2.0, 1.0));
  const SineExpansion zero = SineExpansion::zeros(1, 256);
  CHECK(trace_error_hs(mesh, FieldVector(mesh.num_dofs(), 0.0), zero, 0.4).value == 0.0);
  FieldVector v(mesh.num_dofs(), 0.0);
  for (std::size_t f = 0; f < mesh.num_lines(); ++f)
    v[f * 3] = std::sin(1.0 + f);
  const double before = trace_error_hs(mesh, v, sine_mode(1, 256, 0.5, 1), 0.4).value;
  for (std::size_t f = 0; f < mesh.num_lines(); ++f)
    v[f * 3 + 1] += 7.0 * f;
  CHECK(trace_error_hs(mesh, v, sine_mode(1, 256, 0.5, 1), 0.4).value == before);
}
