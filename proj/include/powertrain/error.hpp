#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace powertrain {

// Base of every library error. The CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data does not satisfy a contract (bad grid, malformed file, wrong
// dimensions, zero actual in a percentage error, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : DataError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

// Power trace never settled into a stable window.
class StabilizationError : public DataError {
 public:
  using DataError::DataError;
};

class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, const std::string& what)
      : Error("training diverged at epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}

  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

// No candidate satisfies the power budget.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace powertrain
