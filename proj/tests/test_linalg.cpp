#include <doctest.h>

#include <cmath>
#include <random>

#include "rlab/errors.hpp"
#include "rlab/linalg.hpp"

using namespace rlab;

TEST_CASE("lu solves a known system") {
  Matrix a(3, 3);
  a(0, 0) = 2;  a(0, 1) = 1;  a(0, 2) = -1;
  a(1, 0) = -3; a(1, 1) = -1; a(1, 2) = 2;
  a(2, 0) = -2; a(2, 1) = 1;  a(2, 2) = 2;
  LuSolver lu(a);
  const auto x = lu.solve({8, -11, -3});
  CHECK(x[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(x[1] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(x[2] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("lu flags singular input") {
  Matrix a(2, 2);
  a(0, 0) = 1; a(0, 1) = 2;
  a(1, 0) = 2; a(1, 1) = 4;
  CHECK_THROWS_AS(LuSolver{a}, NumericError);
}

TEST_CASE("lu residuals on random diagonally dominant systems") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(trial) * 7;
    Matrix a(n, n);
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) {
      double rowsum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        a(i, j) = u(rng);
        rowsum += std::fabs(a(i, j));
      }
      a(i, i) += rowsum;
      b[i] = u(rng);
    }
    LuSolver lu(a);
    const auto x = lu.solve(b);
    const auto ax = a.multiply(x);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::fabs(ax[i] - b[i]) < 1e-11);
  }
}

TEST_CASE("lu residuals on random pivot-exercising systems") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 3 + static_cast<std::size_t>(trial);
    Matrix a(n, n);
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) a(i, j) = u(rng);
      b[i] = u(rng);
    }
    LuSolver lu(a);
    const auto x = lu.solve(b);
    const auto ax = a.multiply(x);
    double xmax = 0.0;
    for (double v : x) xmax = std::max(xmax, std::fabs(v));
    for (std::size_t i = 0; i < n; ++i) CHECK(std::fabs(ax[i] - b[i]) < 1e-10 * std::max(1.0, xmax));
  }
}

TEST_CASE("power iteration on a scalar") {
  Matrix q(1, 1);
  q(0, 0) = 0.42;
  const auto r = dominant_left_eigenpair(q);
  CHECK(r.eigenvalue == doctest::Approx(0.42).epsilon(1e-13));
  CHECK(r.vec[0] == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("power iteration matches a hand eigenpair") {
  // two-state chain with known left eigenvector
  Matrix q(2, 2);
  q(0, 0) = 0.5; q(0, 1) = 0.3;
  q(1, 0) = 0.2; q(1, 1) = 0.6;
  const auto r = dominant_left_eigenpair(q);
  // rho psi = Q' psi and normalization
  const auto lhs = q.multiply_transposed(r.vec);
  for (std::size_t i = 0; i < 2; ++i) CHECK(lhs[i] == doctest::Approx(r.eigenvalue * r.vec[i]).epsilon(1e-11));
  CHECK(r.vec[0] + r.vec[1] == doctest::Approx(1.0).epsilon(1e-13));
}
