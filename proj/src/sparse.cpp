#include "fracext/sparse.hpp"

#include "fracext/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fracext {

double CsrMatrix::at(std::size_t i, std::size_t j) const {
  const long k = find(i, j);
  return k < 0 ? 0.0 : values[k];
}

long CsrMatrix::find(std::size_t i, std::size_t j) const {
  const auto first = col_indices.begin() + static_cast<long>(row_offsets[i]);
  const auto last = col_indices.begin() + static_cast<long>(row_offsets[i + 1]);
  const auto it = std::lower_bound(first, last, static_cast<int>(j));
  if (it == last || *it != static_cast<int>(j))
    return -1;
  return it - col_indices.begin();
}

double CsrMatrix::max_abs() const {
  double m = 0.0;
  for (double v : values)
    m = std::max(m, std::abs(v));
  return m;
}

CsrMatrix CsrBuilder::build() const {
  CsrMatrix out;
  out.rows = rows_;
  out.cols = cols_;
  out.row_offsets.assign(rows_ + 1, 0);

  // Stable counting sort by row, then a stable sort by column within each row.
  std::vector<std::size_t> count(rows_ + 1, 0);
  for (const auto &e : entries_) {
    detail::require(e.i < rows_ && e.j < cols_, "CsrBuilder: entry out of range");
    ++count[e.i + 1];
  }
  for (std::size_t i = 0; i < rows_; ++i)
    count[i + 1] += count[i];
  std::vector<std::size_t> order(entries_.size());
  {
    std::vector<std::size_t> next(count.begin(), count.end() - 1);
    for (std::size_t k = 0; k < entries_.size(); ++k)
      order[next[entries_[k].i]++] = k;
  }

  out.col_indices.reserve(entries_.size());
  out.values.reserve(entries_.size());
  for (std::size_t i = 0; i < rows_; ++i) {
    auto first = order.begin() + static_cast<long>(count[i]);
    auto last = order.begin() + static_cast<long>(count[i + 1]);
    std::stable_sort(first, last, [&](std::size_t a, std::size_t b) { return entries_[a].j < entries_[b].j; });
    for (auto it = first; it != last; ++it) {
      const auto &e = entries_[*it];
      if (out.col_indices.size() > out.row_offsets[i] && out.col_indices.back() == static_cast<int>(e.j))
        out.values.back() += e.v;
      else {
        out.col_indices.push_back(static_cast<int>(e.j));
        out.values.push_back(e.v);
      }
    }
    out.row_offsets[i + 1] = out.values.size();
  }
  return out;
}

CsrMatrix transpose(const CsrMatrix &a) {
  CsrMatrix t;
  t.rows = a.cols;
  t.cols = a.rows;
  t.row_offsets.assign(a.cols + 1, 0);
  for (int j : a.col_indices)
    ++t.row_offsets[j + 1];
  for (std::size_t i = 0; i < a.cols; ++i)
    t.row_offsets[i + 1] += t.row_offsets[i];
  t.col_indices.resize(a.nnz());
  t.values.resize(a.nnz());
  std::vector<std::size_t> next(t.row_offsets.begin(), t.row_offsets.end() - 1);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k) {
      const std::size_t dst = next[a.col_indices[k]]++;
      t.col_indices[dst] = static_cast<int>(i);
      t.values[dst] = a.values[k];
    }
  return t;
}

CsrMatrix multiply(const CsrMatrix &a, const CsrMatrix &b) {
  detail::require(a.cols == b.rows, "multiply: dimension mismatch");
  CsrMatrix c;
  c.rows = a.rows;
  c.cols = b.cols;
  c.row_offsets.assign(a.rows + 1, 0);
  std::vector<double> acc(b.cols, 0.0);
  std::vector<long> marker(b.cols, -1);
  std::vector<int> pattern;
  for (std::size_t i = 0; i < a.rows; ++i) {
    pattern.clear();
    for (std::size_t ka = a.row_offsets[i]; ka < a.row_offsets[i + 1]; ++ka) {
      const int k = a.col_indices[ka];
      for (std::size_t kb = b.row_offsets[k]; kb < b.row_offsets[k + 1]; ++kb) {
        const int j = b.col_indices[kb];
        if (marker[j] != static_cast<long>(i)) {
          marker[j] = static_cast<long>(i);
          acc[j] = 0.0;
          pattern.push_back(j);
        }
        acc[j] += a.values[ka] * b.values[kb];
      }
    }
    std::sort(pattern.begin(), pattern.end());
    for (int j : pattern) {
      c.col_indices.push_back(j);
      c.values.push_back(acc[j]);
    }
    c.row_offsets[i + 1] = c.values.size();
  }
  return c;
}

CsrMatrix add(double alpha, const CsrMatrix &a, double beta, const CsrMatrix &b) {
  detail::require(a.rows == b.rows && a.cols == b.cols, "add: dimension mismatch");
  CsrMatrix c;
  c.rows = a.rows;
  c.cols = a.cols;
  c.row_offsets.assign(a.rows + 1, 0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    std::size_t ka = a.row_offsets[i], kb = b.row_offsets[i];
    const std::size_t ea = a.row_offsets[i + 1], eb = b.row_offsets[i + 1];
    while (ka < ea || kb < eb) {
      const int ja = ka < ea ? a.col_indices[ka] : static_cast<int>(a.cols);
      const int jb = kb < eb ? b.col_indices[kb] : static_cast<int>(b.cols);
      if (ja == jb) {
        c.col_indices.push_back(ja);
        c.values.push_back(alpha * a.values[ka++] + beta * b.values[kb++]);
      } else if (ja < jb) {
        c.col_indices.push_back(ja);
        c.values.push_back(alpha * a.values[ka++]);
      } else {
        c.col_indices.push_back(jb);
        c.values.push_back(beta * b.values[kb++]);
      }
    }
    c.row_offsets[i + 1] = c.values.size();
  }
  return c;
}

CsrMatrix kronecker(const CsrMatrix &a, const CsrMatrix &b) {
  CsrMatrix c;
  c.rows = a.rows * b.rows;
  c.cols = a.cols * b.cols;
  c.row_offsets.assign(c.rows + 1, 0);
  c.col_indices.reserve(a.nnz() * b.nnz());
  c.values.reserve(a.nnz() * b.nnz());
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t p = 0; p < b.rows; ++p) {
      for (std::size_t ka = a.row_offsets[i]; ka < a.row_offsets[i + 1]; ++ka)
        for (std::size_t kb = b.row_offsets[p]; kb < b.row_offsets[p + 1]; ++kb) {
          c.col_indices.push_back(static_cast<int>(a.col_indices[ka] * b.cols + b.col_indices[kb]));
          c.values.push_back(a.values[ka] * b.values[kb]);
        }
      c.row_offsets[i * b.rows + p + 1] = c.values.size();
    }
  return c;
}

double max_asymmetry(const CsrMatrix &a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
      m = std::max(m, std::abs(a.values[k] - a.at(a.col_indices[k], i)));
  return m;
}

namespace kernels {

namespace serial {

void spmv(const CsrMatrix &a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    double sum = 0.0;
    for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
      sum += a.values[k] * x[a.col_indices[k]];
    y[i] = sum;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    sum += a[i] * b[i];
  return sum;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] += alpha * x[i];
}

} // namespace serial

void spmv(const CsrMatrix &a, std::span<const double> x, std::span<double> y) {
  const long rows = static_cast<long>(a.rows);
#pragma omp parallel for schedule(static) if (rows > 2048)
  for (long i = 0; i < rows; ++i) {
    double sum = 0.0;
    for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
      sum += a.values[k] * x[a.col_indices[k]];
    y[i] = sum;
  }
}

void residual(const CsrMatrix &a, std::span<const double> x, std::span<const double> b, std::span<double> r) {
  const long rows = static_cast<long>(a.rows);
#pragma omp parallel for schedule(static) if (rows > 2048)
  for (long i = 0; i < rows; ++i) {
    double sum = b[i];
    for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
      sum -= a.values[k] * x[a.col_indices[k]];
    r[i] = sum;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const long blocks = static_cast<long>((n + kReductionBlock - 1) / kReductionBlock);
  std::vector<double> partial(blocks, 0.0);
#pragma omp parallel for schedule(static) if (blocks > 1)
  for (long blk = 0; blk < blocks; ++blk) {
    const std::size_t first = static_cast<std::size_t>(blk) * kReductionBlock;
    const std::size_t last = std::min(n, first + kReductionBlock);
    double sum = 0.0;
    for (std::size_t i = first; i < last; ++i)
      sum += a[i] * b[i];
    partial[blk] = sum;
  }
  return std::accumulate(partial.begin(), partial.end(), 0.0);
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const long n = static_cast<long>(x.size());
#pragma omp parallel for schedule(static) if (n > 8192)
  for (long i = 0; i < n; ++i)
    y[i] += alpha * x[i];
}

void xpby(std::span<const double> x, double beta, std::span<double> y) {
  const long n = static_cast<long>(x.size());
#pragma omp parallel for schedule(static) if (n > 8192)
  for (long i = 0; i < n; ++i)
    y[i] = x[i] + beta * y[i];
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0)
    omp_set_num_threads(n);
#else
  (void)n;
#endif
}

} // namespace kernels

double quadratic_form(const CsrMatrix &a, std::span<const double> x, std::span<const double> y) {
  std::vector<double> ay(a.rows);
  kernels::spmv(a, y, ay);
  return kernels::dot(x, ay);
}

} // namespace fracext
