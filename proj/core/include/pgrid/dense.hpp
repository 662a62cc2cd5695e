#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace pgrid {

/// Row-major dense matrix for the reference path.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::vector<double> multiply(std::span<const double> x) const;
  double max_abs() const;
  // max_i sum_j |a_ij|
  double norm_inf() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(double s, const DenseMatrix& a);

/// Cholesky factorization A = L L^T. Stops at the first pivot not above
/// `pivot_floor` and records failure instead of throwing.
class Cholesky {
 public:
  explicit Cholesky(const DenseMatrix& a, double pivot_floor = 0.0);

  bool ok() const noexcept { return ok_; }
  std::size_t failed_at() const noexcept { return failed_at_; }
  // Smallest pivot seen, i.e. min_i L_ii^2.
  double min_pivot() const noexcept { return min_pivot_; }

  std::vector<double> solve(std::span<const double> b) const;

 private:
  DenseMatrix l_;
  bool ok_ = true;
  std::size_t failed_at_ = 0;
  double min_pivot_ = 0.0;
};

/// Gaussian elimination with partial pivoting, for the indefinite
/// operating-point system. Throws CircuitError on a singular matrix.
std::vector<double> solve_lu(DenseMatrix a, std::vector<double> b);

/// Coordinate-format text, 1-based, MatrixMarket header. Zeros are skipped.
void write_matrix_market(const DenseMatrix& a, std::ostream& out);

}  // namespace pgrid
