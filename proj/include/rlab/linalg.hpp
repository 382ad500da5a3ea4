#pragma once

#include <cstddef>
#include <vector>

namespace rlab {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  Matrix transposed() const;

  /// y = A x
  std::vector<double> multiply(const std::vector<double>& x) const;
  /// y = A' x
  std::vector<double> multiply_transposed(const std::vector<double>& x) const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

/// LU factorization with partial pivoting. Throws NumericError on exact
/// singularity.
class LuSolver {
 public:
  explicit LuSolver(Matrix a);
  std::vector<double> solve(std::vector<double> b) const;

 private:
  Matrix lu_;
  std::vector<int> piv_;
};

struct PowerIterationResult {
  double eigenvalue = 0.0;
  std::vector<double> vec;  // entrywise nonnegative, sums to one
  int iterations = 0;
};

/// Dominant left eigenpair of a nonnegative matrix q: rho psi = q' psi.
/// Power iteration on q'; stops once successive eigenvalue estimates agree
/// to eval_tol and the vector moves less than vec_tol in the max norm.
PowerIterationResult dominant_left_eigenpair(const Matrix& q, double eval_tol = 1e-13,
                                             double vec_tol = 1e-12, int max_iterations = 100000);

}  // namespace rlab
