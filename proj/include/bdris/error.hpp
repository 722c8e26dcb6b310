#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bdris {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: wrong shapes, out-of-range arguments, malformed files. CLI exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A computation could not be carried out on otherwise valid input. CLI exit code 2.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A matrix expected to have orthonormal columns does not.
class InvalidFrame : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IoError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DegenerateChannel : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularMap : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// I + Theta is (numerically) singular. Rotating Theta by a global phase moves the
/// offending eigenvalue away from -1 without changing |det(F Theta G^H)|.
class CayleySingularity : public NumericalError {
 public:
  CayleySingularity(const std::string& what, double suggested_phase)
      : NumericalError(what), suggested_phase_(suggested_phase) {}

  double suggested_phase() const noexcept { return suggested_phase_; }

 private:
  double suggested_phase_;
};

}  // namespace bdris
