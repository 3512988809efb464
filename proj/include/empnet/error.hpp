#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace empnet {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Bad input data: schema violations, out-of-range labels, invalid config.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed file content; carries the 1-based line number when known.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& msg, std::size_t line)
      : ValidationError(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Non-finite values where finiteness is required (diverged training, bad gradients).
class NumericError : public Error {
 public:
  using Error::Error;
};

// backward() called on a tape that was already consumed.
class StaleTapeError : public Error {
 public:
  using Error::Error;
};

// A forward functional that was required to be deterministic produced
// two different values for the same inputs.
class DeterminismError : public Error {
 public:
  using Error::Error;
};

}  // namespace empnet
