#include "rlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "rlab/errors.hpp"

namespace rlab {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

std::vector<double> Matrix::multiply(const std::vector<double>& x) const {
  if (x.size() != cols_) throw std::invalid_argument("Matrix::multiply: dimension mismatch");
  std::vector<double> y(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    const double* r = row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) acc += r[j] * x[j];
    y[i] = acc;
  }
  return y;
}

std::vector<double> Matrix::multiply_transposed(const std::vector<double>& x) const {
  if (x.size() != rows_) throw std::invalid_argument("Matrix::multiply_transposed: dimension mismatch");
  std::vector<double> y(cols_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* r = row(i);
    for (std::size_t j = 0; j < cols_; ++j) y[j] += xi * r[j];
  }
  return y;
}

LuSolver::LuSolver(Matrix a) : lu_(std::move(a)) {
  if (lu_.rows() != lu_.cols()) throw std::invalid_argument("LuSolver: matrix must be square");
  const std::size_t n = lu_.rows();
  piv_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::fabs(lu_(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double v = std::fabs(lu_(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (best == 0.0) throw NumericError("LuSolver: singular matrix");
    piv_[k] = static_cast<int>(p);
    if (p != k) std::swap_ranges(lu_.row(k), lu_.row(k) + n, lu_.row(p));
    const double pivot = lu_(k, k);
    const double* rk = lu_.row(k);
    for (std::size_t i = k + 1; i < n; ++i) {
      double* ri = lu_.row(i);
      const double f = ri[k] / pivot;
      ri[k] = f;
      if (f == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) ri[j] -= f * rk[j];
    }
  }
}

std::vector<double> LuSolver::solve(std::vector<double> b) const {
  const std::size_t n = lu_.rows();
  if (b.size() != n) throw std::invalid_argument("LuSolver::solve: dimension mismatch");
  // Row interchanges first: the stored multipliers reflect all of them.
  for (std::size_t k = 0; k < n; ++k) std::swap(b[k], b[static_cast<std::size_t>(piv_[k])]);
  for (std::size_t k = 0; k < n; ++k) {
    const double bk = b[k];
    if (bk == 0.0) continue;
    for (std::size_t i = k + 1; i < n; ++i) b[i] -= lu_(i, k) * bk;
  }
  for (std::size_t k = n; k-- > 0;) {
    double acc = b[k];
    const double* rk = lu_.row(k);
    for (std::size_t j = k + 1; j < n; ++j) acc -= rk[j] * b[j];
    b[k] = acc / rk[k];
  }
  return b;
}

PowerIterationResult dominant_left_eigenpair(const Matrix& q, double eval_tol, double vec_tol,
                                             int max_iterations) {
  if (q.rows() != q.cols()) throw std::invalid_argument("dominant_left_eigenpair: matrix must be square");
  const std::size_t n = q.rows();
  const Matrix qt = q.transposed();
  std::vector<double> v(n, 1.0 / static_cast<double>(n));
  std::vector<double> w;
  double rho_prev = -1.0;
  for (int it = 1; it <= max_iterations; ++it) {
    w = qt.multiply(v);
    double s = 0.0;
    for (double x : w) s += x;
    if (!(s > 0.0)) throw NonAbsorbingChainError("dominant_left_eigenpair: iterate collapsed to zero");
    double dv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] /= s;
      dv = std::max(dv, std::fabs(w[i] - v[i]));
    }
    v.swap(w);
    if (std::fabs(s - rho_prev) < eval_tol && dv < vec_tol) {
      return {s, std::move(v), it};
    }
    rho_prev = s;
  }
  throw NoConvergenceError("dominant_left_eigenpair: iteration budget exhausted");
}

}  // namespace rlab
