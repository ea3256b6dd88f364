#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tacclust {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed dataset or record file. Carries the 1-based line number (0 when
/// the problem is not tied to a line, e.g. an empty file).
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A covariance (or other SPD matrix) that stays singular after jitter.
class DegenerateCovariance : public Error {
 public:
  using Error::Error;
};

}  // namespace tacclust
