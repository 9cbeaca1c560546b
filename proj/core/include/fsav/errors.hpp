#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace fsav {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidGrid : public Error {
 public:
  using Error::Error;
};

class InvalidField : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class MeanNotZero : public Error {
 public:
  using Error::Error;
};

class DomainMismatch : public Error {
 public:
  using Error::Error;
};

/// Raised when the solution stops being finite or exceeds the blow-up threshold.
class BlowUp : public Error {
 public:
  BlowUp(double t, std::uint64_t step, const std::string& what)
      : Error(what), t_(t), step_(step) {}

  double time() const noexcept { return t_; }
  std::uint64_t step() const noexcept { return step_; }

 private:
  double t_;
  std::uint64_t step_;
};

/// The scalar update denominator went nonpositive. Signals a bug: the
/// Helmholtz inverse is positive definite so this cannot happen in exact
/// arithmetic.
class DenominatorNonpositive : public Error {
 public:
  using Error::Error;
};

class DivergenceViolation : public Error {
 public:
  using Error::Error;
};

class NonIntegralHorizon : public Error {
 public:
  using Error::Error;
};

class ModeOutOfRange : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class NonUniformSampling : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  /// 1-based line of the offending entry; 0 when the error is not tied to a line.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class CorruptCheckpoint : public Error {
 public:
  using Error::Error;
};

}  // namespace fsav
