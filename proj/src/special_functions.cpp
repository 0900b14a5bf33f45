#include "fracext/special_functions.hpp"

#include "fracext/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <numbers>

namespace fracext {

double gamma_fn(double x) {
  detail::require(x > 0.0, "gamma_fn: argument must be positive");
  return std::tgamma(x);
}

double bessel_k(double order, double y, bool *underflow) {
  detail::require(y > 0.0, "bessel_k: argument must be positive");
  if (underflow)
    *underflow = false;
  if (y > 700.0) {
    if (underflow)
      *underflow = true;
    return 0.0;
  }
  const double nu = std::abs(order);
  // e^y K(y) = ∫ exp(-y (cosh t - 1)) cosh(nu t) dt; truncate where the integrand drops below 1e-18.
  double t_max = std::acosh(1.0 + 42.0 / y);
  for (int it = 0; it < 3; ++it)
    t_max = std::acosh(1.0 + (42.0 + nu * t_max) / y);
  auto integrand = [&](double t) { return std::exp(-y * (std::cosh(t) - 1.0) + nu * t) * 0.5 * (1.0 + std::exp(-2.0 * nu * t)); };
  double error = 0.0;
  const double scaled =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, t_max, 20, 1e-13, &error);
  return scaled * std::exp(-y);
}

namespace {

double mittag_leffler_series(double gamma, double z) {
  // Neumaier summation
  double sum = 0.0, comp = 0.0;
  double zk = 1.0;
  for (int k = 0; k < 500; ++k) {
    const double term = zk / std::tgamma(gamma * k + 1.0);
    const double t = sum + term;
    if (std::abs(sum) >= std::abs(term))
      comp += (sum - t) + term;
    else
      comp += (term - t) + sum;
    sum = t;
    if (k > 2 && std::abs(term) < 1e-18 * std::abs(sum + comp))
      break;
    zk *= z;
  }
  return sum + comp;
}

double mittag_leffler_integral(double gamma, double x) {
  // E_g(-x) = sin(g pi)/(g pi) ∫_0^∞ exp(-u^(1/g)) x / (u^2 + 2 u x cos(g pi) + x^2) du
  const double pi = std::numbers::pi;
  const double c = std::cos(gamma * pi);
  auto integrand = [&](double u) { return std::exp(-std::pow(u, 1.0 / gamma)) * x / (u * u + 2.0 * u * x * c + x * x); };
  using boost::math::quadrature::gauss_kronrod;
  double error = 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  const double head = gauss_kronrod<double, 61>::integrate(integrand, 0.0, 1.0, 15, 1e-14, &error);
  const double tail = gauss_kronrod<double, 61>::integrate(integrand, 1.0, inf, 15, 1e-14, &error);
  return std::sin(gamma * pi) / (gamma * pi) * (head + tail);
}

} // namespace

double mittag_leffler(double gamma, double z) {
  detail::require(gamma > 0.0 && gamma <= 1.0, "mittag_leffler: order must lie in (0,1]");
  if (z > 0.0 || z < -50.0)
    throw DomainError("mittag_leffler: argument outside the validated range [-50, 0]");
  if (gamma == 1.0)
    return std::exp(z);
  if (z >= -1.0)
    return mittag_leffler_series(gamma, z);
  return mittag_leffler_integral(gamma, -z);
}

double normalization_ds(double s) {
  detail::require(s > 0.0 && s < 1.0, "normalization_ds: s must lie in (0,1)");
  return std::pow(2.0, 1.0 - 2.0 * s) * gamma_fn(1.0 - s) / gamma_fn(s);
}

} // namespace fracext
