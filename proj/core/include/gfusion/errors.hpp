#pragma once

#include <stdexcept>
#include <string>

namespace gfusion {

// Error taxonomy. The CLI maps these onto exit codes:
// ConfigError -> 1, DataError family -> 2, NumericError family -> 3.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input value outside the domain of a conversion (bad latitude, pressure <= 0).
class DomainError : public DataError {
 public:
  using DataError::DataError;
};

/// Operation requires state that has not been initialized yet.
class StateError : public DataError {
 public:
  using DataError::DataError;
};

/// Timestamps out of order.
class OrderingError : public DataError {
 public:
  using DataError::DataError;
};

/// Malformed file content; carries the offending line number when known.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, int line = 0)
      : DataError(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Trajectory association or alignment failed.
class EvaluationError : public DataError {
 public:
  using DataError::DataError;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The least-squares problem has unconstrained directions.
class GaugeError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace gfusion
