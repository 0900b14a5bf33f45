#include "fracext/moments.hpp"

#include "fracext/error.hpp"

#include <cmath>

namespace fracext {

double weight_moment(double a, double b, double alpha, int m) {
  detail::require(alpha > -1.0 && alpha < 1.0, "weight_moment: weight exponent outside (-1,1) is not admissible");
  detail::require(a >= 0.0 && a < b, "weight_moment: need 0 <= a < b");
  detail::require(m >= 0, "weight_moment: degree must be non-negative");
  const double p = alpha + m + 1.0;
  if (a == 0.0)
    return std::pow(b, p) / p;
  // b^p - a^p = a^p (exp(p log(b/a)) - 1), evaluated without cancellation.
  return std::pow(a, p) * std::expm1(p * std::log1p((b - a) / a)) / p;
}

CellMoments weighted_moments(double a, double b, double alpha) {
  detail::require(alpha > -1.0 && alpha < 1.0, "weighted_moments: weight exponent outside (-1,1)");
  detail::require(a >= 0.0 && a < b, "weighted_moments: need 0 <= a < b");
  CellMoments out;
  const double h = b - a;
  out.width = h;

  if (a == 0.0) {
    const double scale = std::pow(h, alpha + 1.0);
    for (int m = 0; m <= kMaxMomentDegree; ++m)
      out.j[m] = scale / (alpha + m + 1.0);
    return out;
  }

  const double rho = a / h;
  if (rho > 2.0) {
    // (1 + t/rho)^alpha = sum_k binom(alpha,k) (t/rho)^k, ratio at most 1/2.
    const double scale = h * std::pow(a, alpha);
    std::array<double, kMaxMomentDegree + 1> sum{};
    double coef = 1.0; // binom(alpha, k) rho^-k
    for (int k = 0; k < 400; ++k) {
      for (int m = 0; m <= kMaxMomentDegree; ++m)
        sum[m] += coef / (m + k + 1.0);
      if (std::abs(coef) < 1e-18 * std::abs(sum[0]))
        break;
      coef *= (alpha - k) / ((k + 1.0) * rho);
    }
    for (int m = 0; m <= kMaxMomentDegree; ++m)
      out.j[m] = scale * sum[m];
    return out;
  }

  // t^m = ((rho + t) - rho)^m expanded binomially; every power of (rho + t) has a closed-form integral.
  const double scale = std::pow(h, alpha + 1.0);
  std::array<double, kMaxMomentDegree + 1> base{};
  for (int k = 0; k <= kMaxMomentDegree; ++k)
    base[k] = weight_moment(rho, 1.0 + rho, alpha, k);
  for (int m = 0; m <= kMaxMomentDegree; ++m) {
    double sum = 0.0;
    double binom = 1.0;
    for (int k = m; k >= 0; --k) {
      sum += binom * std::pow(-rho, m - k) * base[k];
      binom = binom * k / (m - k + 1.0);
    }
    out.j[m] = scale * sum;
  }
  return out;
}

CellMoments plain_moments(double a, double b) {
  CellMoments out;
  out.width = b - a;
  for (int m = 0; m <= kMaxMomentDegree; ++m)
    out.j[m] = out.width / (m + 1.0);
  return out;
}

std::vector<LocalPoly> lagrange_basis(int degree) {
  if (degree == 1)
    return {LocalPoly{1.0, -1.0}, LocalPoly{0.0, 1.0}};
  if (degree == 2)
    return {LocalPoly{1.0, -3.0, 2.0}, LocalPoly{0.0, 4.0, -4.0}, LocalPoly{0.0, -1.0, 2.0}};
  throw InvalidArgument("lagrange_basis: degree must be 1 or 2");
}

LocalPoly derivative(const LocalPoly &p) {
  LocalPoly d{};
  for (int m = 1; m <= kMaxMomentDegree; ++m)
    d[m - 1] = m * p[m];
  return d;
}

LocalPoly product(const LocalPoly &p, const LocalPoly &q) {
  LocalPoly r{};
  for (int i = 0; i <= kMaxMomentDegree; ++i)
    for (int k = 0; i + k <= kMaxMomentDegree; ++k)
      r[i + k] += p[i] * q[k];
  return r;
}

double integrate(const LocalPoly &p, const CellMoments &m) {
  double sum = 0.0;
  for (int i = 0; i <= kMaxMomentDegree; ++i)
    sum += p[i] * m.j[i];
  return sum;
}

double evaluate(const LocalPoly &p, double t) {
  double v = 0.0;
  for (int i = kMaxMomentDegree; i >= 0; --i)
    v = v * t + p[i];
  return v;
}

CellMatrices cell_matrices(int p, int q, const CellMoments &moments) {
  const auto bp = lagrange_basis(p);
  const auto bq = lagrange_basis(q);
  CellMatrices out;
  out.rows = p + 1;
  out.cols = q + 1;
  const double inv_h2 = 1.0 / (moments.width * moments.width);
  for (int i = 0; i < out.rows; ++i)
    for (int k = 0; k < out.cols; ++k) {
      out.mass[i * out.cols + k] = integrate(product(bp[i], bq[k]), moments);
      out.stiffness[i * out.cols + k] = inv_h2 * integrate(product(derivative(bp[i]), derivative(bq[k])), moments);
    }
  return out;
}

} // namespace fracext
