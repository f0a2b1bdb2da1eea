#pragma once

#include <stdexcept>
#include <string>

namespace qo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(const std::string& what, long expected, long actual)
      : Error(what + ": expected dimension " + std::to_string(expected) + ", got " +
              std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  long expected() const noexcept { return expected_; }
  long actual() const noexcept { return actual_; }

 private:
  long expected_;
  long actual_;
};

/// A stationary method met a zero on the diagonal.
class ZeroDiagonal : public Error {
 public:
  explicit ZeroDiagonal(long row)
      : Error("zero diagonal entry at row " + std::to_string(row)), row_(row) {}
  long row() const noexcept { return row_; }

 private:
  long row_;
};

/// A CG curvature term p'Mp was not positive: the matrix is not SPD.
class BreakdownDetected : public Error {
 public:
  BreakdownDetected(int iteration, double curvature)
      : Error("conjugate gradient breakdown at iteration " + std::to_string(iteration) +
              " (p'Mp = " + std::to_string(curvature) + "); system is not positive definite"),
        iteration_(iteration),
        curvature_(curvature) {}

  int iteration() const noexcept { return iteration_; }
  double curvature() const noexcept { return curvature_; }

 private:
  int iteration_;
  double curvature_;
};

}  // namespace qo
