#pragma once

namespace fracext {

/// Γ(x) for x > 0.
double gamma_fn(double x);

/// Modified Bessel function of the second kind K_order(y), y > 0, from the integral
/// representation ∫_0^∞ exp(-y cosh t) cosh(order t) dt.
///
/// For y > 700 the result underflows: returns 0 and sets *underflow when given.
double bessel_k(double order, double y, bool *underflow = nullptr);

/// Mittag-Leffler function E_gamma(z) for gamma in (0,1], z <= 0, |z| <= 50.
///
/// Power series with compensated summation for |z| <= 1; for larger |z| the
/// completely monotone integral representation on the negative axis is used,
/// where the alternating series loses all significant digits.
double mittag_leffler(double gamma, double z);

/// 2^(1-2s) Γ(1-s)/Γ(s), the constant linking the extension to (-Δ)^s.
double normalization_ds(double s);

} // namespace fracext
