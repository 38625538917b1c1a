#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lmselect {

/// Base class for every failure raised by the library that is not a plain
/// argument/precondition violation (those use std::invalid_argument).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data. Line and column are 1-based; 0 means
/// "not applicable".
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t line = 0, std::size_t column = 0);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// A response pattern has probability zero under the current parameters.
class ZeroProbabilityPattern : public Error {
 public:
  explicit ZeroProbabilityPattern(std::size_t pattern_index);

  std::size_t pattern_index() const noexcept { return pattern_index_; }

 private:
  std::size_t pattern_index_;
};

/// Exact entropy by enumeration was requested above the enumeration cap.
class EnumerationCapExceeded : public Error {
 public:
  EnumerationCapExceeded(double configurations, double cap);
};

/// Every EM start failed.
class FitFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace lmselect
