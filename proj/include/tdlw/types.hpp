#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace tdlw {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using RowVec = Eigen::RowVectorXd;

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched or invalid dimensions, non-finite entries, bad arguments.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of the requested operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Linear solve rejected because the matrix is singular to working precision.
class SingularMatrixError : public Error {
 public:
  SingularMatrixError(const std::string& msg, double condition)
      : Error(msg), condition(condition) {}
  double condition;
};

/// An iterative method failed to converge within its iteration budget.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& msg, int iterations)
      : Error(msg), iterations(iterations) {}
  int iterations;
};

/// The pair (A, b) is not controllable; carries the achieved rank.
class UncontrollableError : public Error {
 public:
  UncontrollableError(const std::string& msg, int rank, int order)
      : Error(msg), rank(rank), order(order) {}
  int rank;
  int order;
};

/// Malformed descriptor file.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line = 0) : Error(msg), line(line) {}
  int line;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw DimensionError(msg);
}

inline void require_square(const Mat& m, const std::string& who) {
  if (m.rows() != m.cols())
    throw DimensionError(who + ": matrix must be square, got " +
                         std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
}

inline void require_finite(const Mat& m, const std::string& who) {
  if (!m.allFinite()) throw DimensionError(who + ": non-finite entries");
}

}  // namespace detail

}  // namespace tdlw
