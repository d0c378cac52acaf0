#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace voliv {

// Root of every error raised by the library. Callers that only need to
// distinguish "numeric" from "usage" failures can catch the two branches.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input outside an operation's mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

class UnsupportedDegreeError : public DomainError {
 public:
  using DomainError::DomainError;
};

// The implied-vol expansion only exists for sqrt(theta) scaling.
class UnsupportedScalingError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Root finder called on an interval without a sign change.
class BracketError : public Error {
 public:
  using Error::Error;
};

// Quadrature could not reach the requested tolerance. The best estimate is
// kept so callers may decide whether it is usable.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double best_estimate, double error_estimate)
      : Error(what), best_estimate_(best_estimate), error_estimate_(error_estimate) {}

  [[nodiscard]] double best_estimate() const noexcept { return best_estimate_; }
  [[nodiscard]] double error_estimate() const noexcept { return error_estimate_; }

 private:
  double best_estimate_;
  double error_estimate_;
};

// Option price outside the no-arbitrage interior.
class BoundsError : public Error {
 public:
  enum class Bound { lower, upper };

  BoundsError(const std::string& what, Bound violated) : Error(what), violated_(violated) {}

  [[nodiscard]] Bound violated() const noexcept { return violated_; }

 private:
  Bound violated_;
};

// Contour shift outside the characteristic function's analyticity strip.
class StripError : public Error {
 public:
  using Error::Error;
};

// Non-finite values fed into (or produced by) a smile-derivative computation.
class PropagationError : public Error {
 public:
  using Error::Error;
};

class SmileQualityError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  enum class Kind { count, ordering, sign };

  FitError(const std::string& what, Kind kind) : Error(what), kind_(kind) {}

  [[nodiscard]] Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Malformed input file. Row is 1-based counting the header as row 1; 0 means
// the file has no header line.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& what, std::size_t row, std::string column)
      : Error(what), row_(row), column_(std::move(column)) {}

  [[nodiscard]] std::size_t row() const noexcept { return row_; }
  [[nodiscard]] const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace voliv
