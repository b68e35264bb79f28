#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace slsm {

// Error categories map one-to-one onto CLI exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed files, invalid configuration values.
class DataError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

// Factorization or optimization failed even after jitter escalation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public DataError {
 public:
  DimensionError(std::size_t expected, std::size_t actual, const std::string& what)
      : DataError(what + ": expected dimension " + std::to_string(expected) + ", got " +
                  std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  [[nodiscard]] std::size_t expected() const { return expected_; }
  [[nodiscard]] std::size_t actual() const { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

}  // namespace slsm
