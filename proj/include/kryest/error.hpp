#pragma once

/// \file kryest/error.hpp
/// \brief Exception types shared by every kryest module.

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kryest {

/// Base class of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the documented domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed Matrix Market input; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed file describing an inconsistent structure (index out of bounds, ...).
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Valid Matrix Market file of a kind we do not ingest (complex, pattern, ...).
class UnsupportedFormat : public Error {
 public:
  using Error::Error;
};

/// Matrix singular to working precision.
class SingularMatrix : public Error {
 public:
  using Error::Error;
};

/// Problem generation failed (e.g. the direct solve of the generated system).
class GenerationError : public Error {
 public:
  using Error::Error;
};

/// Solver breakdown; records the iteration at which it occurred.
class Breakdown : public Error {
 public:
  enum class Kind { indefinite, serious, lanczos, numerical };

  Breakdown(Kind kind, std::size_t iteration, const std::string& what)
      : Error(what + " (iteration " + std::to_string(iteration) + ")"),
        kind_(kind),
        iteration_(iteration) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  Kind kind_;
  std::size_t iteration_;
};

/// Gauss quadrature recurrences hit a non-positive pivot.
class QuadratureBreakdown : public Error {
 public:
  using Error::Error;
};

/// Not enough iterations recorded to evaluate a metric.
class InsufficientTrace : public Error {
 public:
  using Error::Error;
};

}  // namespace kryest
