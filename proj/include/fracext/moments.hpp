#pragma once

#include <array>
#include <vector>

namespace fracext {

/// ∫_a^b y^(alpha+m) dy for 0 <= a < b, alpha in (-1,1), m >= 0.
double weight_moment(double a, double b, double alpha, int m);

inline constexpr int kMaxMomentDegree = 4;

/// Local moments J_m = ∫_a^b y^alpha t^m dy with t = (y-a)/(b-a), m = 0..4.
///
/// Evaluated in closed form in the local coordinate so that narrow cells far from
/// y = 0 do not suffer the cancellation of global monomials.
struct CellMoments {
  std::array<double, kMaxMomentDegree + 1> j{};
  double width = 0.0;
};

CellMoments weighted_moments(double a, double b, double alpha);
/// Moments of the unit weight: J_m = h/(m+1).
CellMoments plain_moments(double a, double b);

/// Polynomial in the local coordinate t in [0,1], coefficients by increasing degree.
using LocalPoly = std::array<double, kMaxMomentDegree + 1>;

/// Lagrange basis of degree 1 or 2 on [0,1] with equispaced nodes.
std::vector<LocalPoly> lagrange_basis(int degree);
LocalPoly derivative(const LocalPoly &p);
LocalPoly product(const LocalPoly &p, const LocalPoly &q);
double integrate(const LocalPoly &p, const CellMoments &m);
double evaluate(const LocalPoly &p, double t);

/// 1D mass and stiffness between Lagrange bases of degree p (rows) and q (columns)
/// on one cell, for the weight encoded in the moments.
struct CellMatrices {
  int rows = 0;
  int cols = 0;
  std::array<double, 9> mass{};
  std::array<double, 9> stiffness{};
  double m(int i, int k) const { return mass[i * cols + k]; }
  double k(int i, int k) const { return stiffness[i * cols + k]; }
};

CellMatrices cell_matrices(int p, int q, const CellMoments &moments);

} // namespace fracext
