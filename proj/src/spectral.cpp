#include "fracext/spectral.hpp"

#include "fracext/assembly.hpp"
#include "fracext/error.hpp"
#include "fracext/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace fracext {

namespace {

constexpr double kPi = std::numbers::pi;

void check_compatible(const SineExpansion &a, const SineExpansion &b) {
  detail::require(a.dim == b.dim && a.cutoff == b.cutoff, "sine expansions with different layouts");
}

} // namespace

SineExpansion SineExpansion::zeros(int dim, int cutoff) {
  detail::require(dim == 1 || dim == 2, "SineExpansion: dimension must be 1 or 2");
  detail::require(cutoff >= 1, "SineExpansion: cutoff must be >= 1");
  SineExpansion out;
  out.dim = dim;
  out.cutoff = cutoff;
  out.coeffs.assign(dim == 1 ? cutoff : static_cast<std::size_t>(cutoff) * cutoff, 0.0);
  return out;
}

double SineExpansion::eigenvalue(std::size_t idx) const {
  if (dim == 1) {
    const double k = static_cast<double>(idx + 1);
    return kPi * kPi * k * k;
  }
  const double m = static_cast<double>(idx / cutoff + 1);
  const double n = static_cast<double>(idx % cutoff + 1);
  return kPi * kPi * (m * m + n * n);
}

double SineExpansion::evaluate(double x1, double x2) const {
  double sum = 0.0;
  if (dim == 1) {
    for (int k = 1; k <= cutoff; ++k)
      sum += at(k) * std::sin(k * kPi * x1);
    return std::sqrt(2.0) * sum;
  }
  for (int m = 1; m <= cutoff; ++m) {
    double inner = 0.0;
    for (int n = 1; n <= cutoff; ++n)
      inner += at(m, n) * std::sin(n * kPi * x2);
    sum += inner * std::sin(m * kPi * x1);
  }
  return 2.0 * sum;
}

SineExpansion sine_mode(int dim, int cutoff, double amplitude, int m, int n) {
  SineExpansion out = SineExpansion::zeros(dim, cutoff);
  detail::require(m >= 1 && m <= cutoff, "sine_mode: mode index outside the cutoff");
  if (dim == 1) {
    out.at(m) = amplitude;
  } else {
    detail::require(n >= 1 && n <= cutoff, "sine_mode: mode index outside the cutoff");
    out.at(m, n) = amplitude;
  }
  return out;
}

SineExpansion constant_one(int dim, int cutoff) {
  SineExpansion out = SineExpansion::zeros(dim, cutoff);
  // sqrt(2) ∫ sin(k pi x) dx = sqrt(2) * 2/(k pi) for odd k
  auto c1 = [](int k) { return k % 2 == 1 ? 2.0 / (k * kPi) : 0.0; };
  if (dim == 1) {
    for (int k = 1; k <= cutoff; ++k)
      out.at(k) = std::sqrt(2.0) * c1(k);
  } else {
    for (int m = 1; m <= cutoff; ++m)
      for (int n = 1; n <= cutoff; ++n)
        out.at(m, n) = 2.0 * c1(m) * c1(n);
  }
  return out;
}

SineExpansion spectral_apply(const SineExpansion &u, double s) {
  SineExpansion out = u;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.coeffs[i] *= std::pow(u.eigenvalue(i), s);
  return out;
}

SineExpansion spectral_solve(const SineExpansion &f, double s) { return spectral_apply(f, -s); }

double hs_norm(const SineExpansion &w, double s) {
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w.coeffs[i] != 0.0)
      sum += std::pow(w.eigenvalue(i), s) * w.coeffs[i] * w.coeffs[i];
  return std::sqrt(sum);
}

double l2_pairing(const SineExpansion &f, const SineExpansion &g) {
  check_compatible(f, g);
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    sum += f.coeffs[i] * g.coeffs[i];
  return sum;
}

double extension_profile(double s, double lambda, double y) {
  detail::require(s > 0.0 && s < 1.0, "extension_profile: s must lie in (0,1)");
  detail::require(y >= 0.0, "extension_profile: y must be non-negative");
  if (y == 0.0)
    return 1.0;
  const double z = std::sqrt(lambda) * y;
  bool underflow = false;
  const double k = bessel_k(s, z, &underflow);
  if (underflow)
    return 0.0;
  return std::pow(2.0, 1.0 - s) / gamma_fn(s) * std::pow(z, s) * k;
}

double exact_extension_1d(double s, double x, double y) {
  return std::sin(kPi * x) * extension_profile(s, kPi * kPi, y);
}

double exact_extension_square(double s, double x1, double x2, double y) {
  return std::sin(kPi * x1) * std::sin(kPi * x2) * extension_profile(s, 2.0 * kPi * kPi, y);
}

namespace {

// sum_i w_i sin(k pi x_i) for k = 1..cutoff, by a rotation recurrence restarted every chunk.
std::vector<double> sine_sums(const std::vector<double> &x, const std::vector<double> &w, int cutoff) {
  constexpr int kChunk = 256;
  std::vector<double> out(cutoff, 0.0);
  const int chunks = (cutoff + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < chunks; ++c) {
    const int k0 = c * kChunk + 1;
    const int k1 = std::min(cutoff, k0 + kChunk - 1);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double theta = kPi * x[i];
      const double cr = std::cos(theta), sr = std::sin(theta);
      double cs = std::cos(k0 * theta), sn = std::sin(k0 * theta);
      for (int k = k0; k <= k1; ++k) {
        out[k - 1] += w[i] * sn;
        const double cn = cs * cr - sn * sr;
        sn = sn * cr + cs * sr;
        cs = cn;
      }
    }
  }
  return out;
}

// Coordinates of a tensor grid, sorted, and the index of every vertex along each axis.
struct GridAxes {
  std::vector<double> coords[2];
  std::vector<int> index[2];
};

GridAxes grid_axes(const BaseMesh &base) {
  GridAxes g;
  for (int d = 0; d < 2; ++d) {
    std::map<double, int> pos;
    for (const auto &v : base.vertices)
      pos.emplace(v[d], 0);
    int k = 0;
    for (auto &[coord, idx] : pos) {
      idx = k++;
      g.coords[d].push_back(coord);
    }
    for (const auto &v : base.vertices)
      g.index[d].push_back(pos.at(v[d]));
  }
  detail::require(g.coords[0].size() * g.coords[1].size() == base.num_vertices(),
                  "piecewise_linear_coefficients: n = 2 requires a tensor-product grid");
  return g;
}

// H[(m-1) * nx + i] = ∫ hat_i(x) sin(m pi x) dx for every grid point i.
std::vector<double> hat_transform(const std::vector<double> &xs, int cutoff) {
  const std::size_t nx = xs.size();
  std::vector<double> h(static_cast<std::size_t>(cutoff) * nx, 0.0);
  for (int m = 1; m <= cutoff; ++m) {
    const double km = m * kPi;
    for (std::size_t i = 1; i + 1 < nx; ++i) {
      const double hl = xs[i] - xs[i - 1], hr = xs[i + 1] - xs[i];
      const double kinks = std::sin(km * xs[i - 1]) / hl - std::sin(km * xs[i]) * (1.0 / hl + 1.0 / hr) +
                           std::sin(km * xs[i + 1]) / hr;
      h[(m - 1) * nx + i] = -kinks / (km * km);
    }
  }
  return h;
}

} // namespace

SineExpansion piecewise_linear_coefficients(const BaseMesh &base, const std::vector<double> &vertex_values,
                                            int cutoff) {
  detail::require(vertex_values.size() == base.num_vertices(),
                  "piecewise_linear_coefficients: one value per vertex expected");
  SineExpansion out = SineExpansion::zeros(base.dim, cutoff);
  if (base.dim == 1) {
    std::vector<int> order(base.num_vertices());
    for (std::size_t i = 0; i < order.size(); ++i)
      order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return base.vertices[a][0] < base.vertices[b][0]; });
    std::vector<double> xs, kinks;
    for (std::size_t p = 1; p + 1 < order.size(); ++p) {
      const int l = order[p - 1], c = order[p], r = order[p + 1];
      const double sl = (vertex_values[c] - vertex_values[l]) / (base.vertices[c][0] - base.vertices[l][0]);
      const double sr = (vertex_values[r] - vertex_values[c]) / (base.vertices[r][0] - base.vertices[c][0]);
      xs.push_back(base.vertices[c][0]);
      kinks.push_back(sr - sl);
    }
    const auto sums = sine_sums(xs, kinks, cutoff);
    for (int k = 1; k <= cutoff; ++k) {
      const double km = k * kPi;
      out.at(k) = -std::sqrt(2.0) * sums[k - 1] / (km * km);
    }
    return out;
  }

  const GridAxes g = grid_axes(base);
  const std::size_t nx = g.coords[0].size(), ny = g.coords[1].size();
  std::vector<double> values(nx * ny, 0.0); // values[i * ny + j]
  for (std::size_t v = 0; v < base.num_vertices(); ++v)
    values[g.index[0][v] * ny + g.index[1][v]] = vertex_values[v];
  const auto hx = hat_transform(g.coords[0], cutoff);
  const auto hy = hat_transform(g.coords[1], cutoff);

  // tmp[m][j] = sum_i Hx[m][i] values[i][j]
  std::vector<double> tmp(static_cast<std::size_t>(cutoff) * ny, 0.0);
#pragma omp parallel for schedule(static)
  for (int m = 0; m < cutoff; ++m)
    for (std::size_t i = 0; i < nx; ++i) {
      const double h = hx[m * nx + i];
      if (h == 0.0)
        continue;
      for (std::size_t j = 0; j < ny; ++j)
        tmp[m * ny + j] += h * values[i * ny + j];
    }
#pragma omp parallel for schedule(static)
  for (int m = 0; m < cutoff; ++m)
    for (int n = 0; n < cutoff; ++n) {
      double sum = 0.0;
      for (std::size_t j = 0; j < ny; ++j)
        sum += tmp[m * ny + j] * hy[n * ny + j];
      out.coeffs[static_cast<std::size_t>(m) * cutoff + n] = 2.0 * sum;
    }
  return out;
}

double extension_energy_error(const CsrMatrix &a, const FieldVector &load, const FieldVector &v, double ds_fu) {
  detail::require(a.rows == v.size() && load.size() == v.size(), "extension_energy_error: dimension mismatch");
  const double e2 = ds_fu - 2.0 * kernels::dot(load, v) + quadratic_form(a, v, v);
  return std::sqrt(std::max(0.0, e2));
}

TraceError trace_error_hs(const TensorMesh &mesh, const FieldVector &v, const SineExpansion &u_exact, double s,
                          double exact_tail_sq) {
  detail::require(u_exact.dim == mesh.dim(), "trace_error_hs: expansion dimension does not match the mesh");
  const SineExpansion tr = piecewise_linear_coefficients(mesh.base(), trace_values(mesh, v), u_exact.cutoff);
  double total = 0.0, top = 0.0;
  const int half = u_exact.cutoff / 2;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double e = u_exact.coeffs[i] - tr.coeffs[i];
    const double c = std::pow(u_exact.eigenvalue(i), s) * e * e;
    total += c;
    const int m = u_exact.dim == 1 ? static_cast<int>(i) + 1
                                   : std::max(static_cast<int>(i) / u_exact.cutoff, static_cast<int>(i) % u_exact.cutoff) + 1;
    if (m > half)
      top += c;
  }
  TraceError out;
  out.value = std::sqrt(total + exact_tail_sq);
  out.tail = std::sqrt(top);
  out.cutoff_warning = top > 1e-4 * total; // tail above 1% of the norm
  return out;
}

double constant_one_solution_tail(int cutoff, double s) {
  detail::require(cutoff >= 1, "constant_one_solution_tail: cutoff must be >= 1");
  // odd k only: lambda^s u_k^2 = 8 / (k pi)^(2+2s); sum over k = 2j+1 > cutoff
  const double p = 2.0 + 2.0 * s;
  const double k0 = cutoff % 2 == 0 ? cutoff + 1.0 : cutoff + 2.0; // first odd mode above the cutoff
  const double integral = std::pow(k0, 1.0 - p) / (2.0 * (p - 1.0));
  const double g = std::pow(k0, -p), dg = -2.0 * p * std::pow(k0, -p - 1.0);
  return 8.0 * std::pow(kPi, -p) * (integral + 0.5 * g - dg / 12.0);
}

} // namespace fracext
