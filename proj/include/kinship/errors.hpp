#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kinship {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based; 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A well-formed record that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// NaN or infinity produced inside a computation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Model file rejected: bad magic, version, truncation or checksum.
class ModelFormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace kinship
