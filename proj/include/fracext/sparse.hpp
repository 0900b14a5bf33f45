#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fracext {

/// Coefficient vector over the free DoFs of a TensorMesh.
using FieldVector = std::vector<double>;

/// Compressed sparse row matrix with sorted column indices per row.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_offsets{0};
  std::vector<int> col_indices;
  std::vector<double> values;

  std::size_t nnz() const { return values.size(); }
  /// Entry (i, j), zero when not stored.
  double at(std::size_t i, std::size_t j) const;
  /// Index into values of entry (i, j), or -1.
  long find(std::size_t i, std::size_t j) const;
  double max_abs() const;
};

/// Accumulates (row, col, value) triplets; duplicates are summed in insertion order.
class CsrBuilder {
public:
  CsrBuilder(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {}
  void add(std::size_t i, std::size_t j, double v) { entries_.push_back({i, j, v}); }
  void reserve(std::size_t n) { entries_.reserve(n); }
  CsrMatrix build() const;

private:
  struct Entry {
    std::size_t i, j;
    double v;
  };
  std::size_t rows_, cols_;
  std::vector<Entry> entries_;
};

CsrMatrix transpose(const CsrMatrix &a);
CsrMatrix multiply(const CsrMatrix &a, const CsrMatrix &b);
/// C = alpha*A + beta*B (patterns may differ).
CsrMatrix add(double alpha, const CsrMatrix &a, double beta, const CsrMatrix &b);
/// Kronecker product; row (i, p) of the result is i * B.rows + p.
CsrMatrix kronecker(const CsrMatrix &a, const CsrMatrix &b);
/// max |A_ij - A_ji| over stored entries.
double max_asymmetry(const CsrMatrix &a);

/// Vector kernels.  The `serial` versions are plain reference loops kept for testing;
/// the default versions are OpenMP-parallel.  Reductions use fixed-size blocks whose
/// partial sums are combined in block order, so results do not depend on the thread count.
namespace kernels {

inline constexpr std::size_t kReductionBlock = 4096;

namespace serial {
void spmv(const CsrMatrix &a, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
} // namespace serial

void spmv(const CsrMatrix &a, std::span<const double> x, std::span<double> y);
/// y = b - A x
void residual(const CsrMatrix &a, std::span<const double> x, std::span<const double> b, std::span<double> r);
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
/// y = x + beta * y
void xpby(std::span<const double> x, double beta, std::span<double> y);

/// Number of OpenMP threads used by the parallel kernels (1 without OpenMP).
int max_threads();
void set_threads(int n);

} // namespace kernels

/// x^T A y
double quadratic_form(const CsrMatrix &a, std::span<const double> x, std::span<const double> y);

} // namespace fracext
