#include "pgrid/dense.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "pgrid/error.hpp"
#include "pgrid/waveform.hpp"

namespace pgrid {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

std::vector<double> DenseMatrix::multiply(std::span<const double> x) const {
  if (x.size() != cols_) {
    throw std::invalid_argument("matrix-vector size mismatch");
  }
  std::vector<double> y(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    const double* row = &data_[i * cols_];
    double sum = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) sum += row[j] * x[j];
    y[i] = sum;
  }
  return y;
}

double DenseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double DenseMatrix::norm_inf() const {
  double m = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) sum += std::abs((*this)(i, j));
    m = std::max(m, sum);
  }
  return m;
}

namespace {

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("matrix shapes differ");
  }
}

}  // namespace

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b);
  DenseMatrix r(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = a(i, j) + b(i, j);
  return r;
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b);
  DenseMatrix r(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = a(i, j) - b(i, j);
  return r;
}

DenseMatrix operator*(double s, const DenseMatrix& a) {
  DenseMatrix r(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = s * a(i, j);
  return r;
}

Cholesky::Cholesky(const DenseMatrix& a, double pivot_floor) : l_(a.rows(), a.rows()) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("Cholesky needs a square matrix");
  }
  const std::size_t n = a.rows();
  min_pivot_ = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = a(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= l_(j, k) * l_(j, k);
    min_pivot_ = std::min(min_pivot_, pivot);
    if (!(pivot > pivot_floor)) {
      ok_ = false;
      failed_at_ = j;
      return;
    }
    const double ljj = std::sqrt(pivot);
    l_(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double sum = a(i, j);
      const double* li = &l_(i, 0);
      const double* lj = &l_(j, 0);
      for (std::size_t k = 0; k < j; ++k) sum -= li[k] * lj[k];
      l_(i, j) = sum / ljj;
    }
  }
  if (n == 0) min_pivot_ = 0.0;
}

std::vector<double> Cholesky::solve(std::span<const double> b) const {
  if (!ok_) {
    throw CircuitError("matrix is not positive definite");
  }
  const std::size_t n = l_.rows();
  if (b.size() != n) {
    throw std::invalid_argument("right-hand side size mismatch");
  }
  std::vector<double> y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    double sum = y[i];
    for (std::size_t k = 0; k < i; ++k) sum -= l_(i, k) * y[k];
    y[i] = sum / l_(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double sum = y[i];
    for (std::size_t k = i + 1; k < n; ++k) sum -= l_(k, i) * y[k];
    y[i] = sum / l_(i, i);
  }
  return y;
}

std::vector<double> solve_lu(DenseMatrix a, std::vector<double> b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n) {
    throw std::invalid_argument("LU solve size mismatch");
  }
  const double scale = std::max(a.max_abs(), 1e-300);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    }
    if (std::abs(a(pivot, col)) <= 1e-14 * scale) {
      throw CircuitError("singular system in direct solve");
    }
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(pivot, j));
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double sum = b[i];
    for (std::size_t j = i + 1; j < n; ++j) sum -= a(i, j) * x[j];
    x[i] = sum / a(i, i);
  }
  return x;
}

void write_matrix_market(const DenseMatrix& a, std::ostream& out) {
  std::size_t nnz = 0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (a(i, j) != 0.0) ++nnz;
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << nnz << '\n';
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (a(i, j) != 0.0) out << i + 1 << ' ' << j + 1 << ' ' << format_double(a(i, j)) << '\n';
}

}  // namespace pgrid
