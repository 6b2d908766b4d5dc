#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace qnpg {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class RowSumError : public Error {
 public:
  RowSumError(std::size_t state, std::size_t action, double sum);

  std::size_t state;
  std::size_t action;
  double sum;
};

class DiscountRangeError : public Error {
 public:
  explicit DiscountRangeError(double discount);

  double discount;
};

class NegativeProbabilityError : public Error {
 public:
  NegativeProbabilityError(std::size_t state, std::size_t action,
                           std::size_t target, double value);
};

class TangentError : public Error {
 public:
  TangentError(std::size_t state, double row_sum);
};

/// Bi-CGSTAB hit its iteration cap (or broke down) before reaching the
/// requested tolerance.
class IterativeSolveFailure : public Error {
 public:
  IterativeSolveFailure(int steps, double best_residual);

  int steps;
  double best_residual;
};

/// Bisection for the simplex multiplier did not meet the residual tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(int steps, double residual);

  int steps;
  double residual;
};

class StepSizeError : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// Invalid generator or solver settings.
class SpecError : public Error {
 public:
  using Error::Error;
};

/// Malformed model file. `offset` is the byte position where reading failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset);

  std::uint64_t offset;
};

}  // namespace qnpg
