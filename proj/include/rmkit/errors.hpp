#pragma once

#include <stdexcept>
#include <string>

namespace rmkit {

/// Base class for all errors raised by the toolkit.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Mismatched lengths or malformed inputs.
class StructuralError : public Error {
public:
  using Error::Error;
};

/// Arguments outside the supported domain (e.g. L < 2, subsystem larger than L).
class DomainError : public Error {
public:
  using Error::Error;
};

/// A numerical contract did not hold (non-Hermitian residue, normalization <= 0).
class NumericalContractError : public Error {
public:
  using Error::Error;
};

class ConvergenceError : public Error {
public:
  using Error::Error;
};

/// Lowest eigenvalue is degenerate within the requested gap threshold.
class DegeneracyError : public Error {
public:
  DegeneracyError(const std::string& what, double gap) : Error(what), gap_(gap) {}
  double gap() const noexcept { return gap_; }

private:
  double gap_;
};

/// Pulse schedule violates slew or amplitude limits.
class ConstraintError : public Error {
public:
  using Error::Error;
};

class CalibrationError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace rmkit
