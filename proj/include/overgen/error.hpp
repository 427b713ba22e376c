#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace overgen {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, or 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A well-formed value that violates a domain constraint.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class RangeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Index outside the sequence it refers to.
class BoundsError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IoError : public Error {
 public:
  IoError(const std::string& what, std::string path)
      : Error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace overgen
