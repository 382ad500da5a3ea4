#pragma once

#include <stdexcept>
#include <string>

namespace rlab {

/// Base for all numerical failures (solver breakdown, non-convergence, ...).
/// Contract violations (bad arguments) use std::invalid_argument instead.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// (I - Q) is singular or the solution is not a valid ARL vector,
/// i.e. the chain does not absorb with probability one.
class NonAbsorbingChainError : public NumericError {
 public:
  using NumericError::NumericError;
};

class NoConvergenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

class GridTooCoarseError : public NumericError {
 public:
  using NumericError::NumericError;
};

class BracketError : public NumericError {
 public:
  using NumericError::NumericError;
};

class InfeasibleComboError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Conditioning starvation in Monte-Carlo CED estimation.
class StarvationError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace rlab
