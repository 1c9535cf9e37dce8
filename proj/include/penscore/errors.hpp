#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace penscore {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NonFiniteInput : public Error {
 public:
  NonFiniteInput(std::size_t row, std::size_t col)
      : Error("non-finite input at row " + std::to_string(row) + ", column " +
              std::to_string(col)),
        row_(row),
        col_(col) {}
  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

class ZeroVarianceColumn : public Error {
 public:
  explicit ZeroVarianceColumn(std::size_t col)
      : Error("column " + std::to_string(col) + " has zero variance"), col_(col) {}
  std::size_t column() const { return col_; }

 private:
  std::size_t col_;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

class SolverNotConverged : public Error {
 public:
  explicit SolverNotConverged(long sweeps)
      : Error("coordinate descent did not converge after " + std::to_string(sweeps) +
              " sweeps"),
        sweeps_(sweeps) {}
  long sweeps() const { return sweeps_; }

 private:
  long sweeps_;
};

// Active-set Gram matrix is singular or the active set is at least as large as n.
class RankDeficientActiveSet : public Error {
 public:
  using Error::Error;
};

class RankDeficient : public Error {
 public:
  using Error::Error;
};

class Underdetermined : public Error {
 public:
  using Error::Error;
};

class DegenerateZeroVariance : public Error {
 public:
  using Error::Error;
};

class SelectedSetTooLarge : public Error {
 public:
  using Error::Error;
};

class QuadratureNotConverged : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace penscore
