#pragma once

#include "fracext/mesh.hpp"
#include "fracext/sparse.hpp"

#include <cstddef>
#include <vector>

namespace fracext {

/// Coefficients in the orthonormal Dirichlet eigenbasis of (0,1) or (0,1)^2.
///
/// n = 1: phi_k = sqrt(2) sin(k pi x), lambda_k = (k pi)^2, coeffs[k-1].
/// n = 2: phi_mn = 2 sin(m pi x1) sin(n pi x2), lambda_mn = pi^2 (m^2 + n^2),
///        coeffs[(m-1) * cutoff + (n-1)].
struct SineExpansion {
  int dim = 1;
  int cutoff = 0;
  std::vector<double> coeffs;

  static SineExpansion zeros(int dim, int cutoff);

  std::size_t size() const { return coeffs.size(); }
  double &at(int k) { return coeffs[k - 1]; }
  double at(int k) const { return coeffs[k - 1]; }
  double &at(int m, int n) { return coeffs[static_cast<std::size_t>(m - 1) * cutoff + (n - 1)]; }
  double at(int m, int n) const { return coeffs[static_cast<std::size_t>(m - 1) * cutoff + (n - 1)]; }
  /// Eigenvalue belonging to storage index idx.
  double eigenvalue(std::size_t idx) const;
  double evaluate(double x1, double x2 = 0.0) const;
};

/// Single mode: amplitude * phi_k (n = 1) or amplitude * phi_mn (n = 2, pass n > 0).
SineExpansion sine_mode(int dim, int cutoff, double amplitude, int m, int n = 0);
/// Expansion of f = 1; odd modes only.
SineExpansion constant_one(int dim, int cutoff);

/// u_k = f_k / lambda_k^s
SineExpansion spectral_solve(const SineExpansion &f, double s);
/// f_k = lambda_k^s u_k
SineExpansion spectral_apply(const SineExpansion &u, double s);
/// sqrt(sum lambda_k^s w_k^2); negative s gives the dual-norm surrogate.
double hs_norm(const SineExpansion &w, double s);
/// sum f_k g_k, the L2 pairing.
double l2_pairing(const SineExpansion &f, const SineExpansion &g);

/// 2^(1-s)/Γ(s) z^s K_s(z) with z = sqrt(lambda) y; equals 1 at y = 0 and decays like e^(-z).
double extension_profile(double s, double lambda, double y);

/// Extension of u = sin(pi x), the solution for f = pi^(2s) sin(pi x).
double exact_extension_1d(double s, double x, double y);
/// Extension of u = sin(pi x1) sin(pi x2), the solution for f = (2 pi^2)^s u.
double exact_extension_square(double s, double x1, double x2, double y);

/// Exact sine coefficients of the piecewise-(bi)linear interpolant with the given vertex values.
///
/// n = 1 uses the slope-jump identity w_k = -sqrt(2)/(k pi)^2 sum_i kink_i sin(k pi x_i);
/// n = 2 requires a tensor grid and factorises into 1D hat transforms.
SineExpansion piecewise_linear_coefficients(const BaseMesh &base, const std::vector<double> &vertex_values,
                                            int cutoff);

struct TraceError {
  double value = 0.0;
  /// H^s mass of the error in the top octave of modes, a proxy for the truncated tail.
  double tail = 0.0;
  bool cutoff_warning = false;
};

/// ||∇(U - V)||_{L2(y^alpha, C)} for the exact extension U and a discrete V extended by zero,
/// from ||∇U||^2 = d_s <f, u>, a(U, V) = b^T V and a(V, V) = V^T A V.
double extension_energy_error(const CsrMatrix &a, const FieldVector &load, const FieldVector &v, double ds_fu);

/// ||u - tr V||_{H^s} with both sides expanded to u_exact.cutoff modes.
///
/// exact_tail_sq is the H^s mass of u beyond the cutoff when known; it is added to the
/// squared error (the trace modes there decay like k^-2 and are dropped).
TraceError trace_error_hs(const TensorMesh &mesh, const FieldVector &v, const SineExpansion &u_exact, double s,
                          double exact_tail_sq = 0.0);

/// sum_{k > cutoff} lambda_k^s u_k^2 for u = (-Δ)^(-s) 1 on (0,1), by Euler-Maclaurin.
double constant_one_solution_tail(int cutoff, double s);

} // namespace fracext
