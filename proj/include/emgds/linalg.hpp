#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace emgds {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }

  Matrix transpose() const;
  std::vector<double> multiply(std::span<const double> v) const;
  Matrix multiply(const Matrix& other) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct SymmetricEigen {
  std::vector<double> values;  // non-increasing
  Matrix vectors;              // row i is the unit eigenvector of values[i]
  int sweeps = 0;
};

/// Cyclic Jacobi rotations on a symmetric matrix until the off-diagonal
/// Frobenius norm drops below `rel_tol * |trace|` (or an absolute floor
/// when the trace vanishes). Eigenpairs come back sorted by value, ties kept
/// in diagonal order.
SymmetricEigen jacobi_eigen(const Matrix& symmetric, double rel_tol = 1e-12, int max_sweeps = 100);

/// Lower-triangular Cholesky factor. Returns an empty matrix (rows() == 0)
/// when a pivot is not above `min_pivot`.
Matrix cholesky(const Matrix& spd, double min_pivot = 0.0);

/// Solves L y = b for lower-triangular L.
std::vector<double> forward_substitute(const Matrix& lower, std::span<const double> b);

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace emgds
