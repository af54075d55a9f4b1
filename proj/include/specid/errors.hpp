#pragma once

#include <stdexcept>
#include <string>

namespace specid {

/// Invalid argument or configuration value.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

/// Eigensolver failure, non-finite results, and similar numerical breakdowns.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Simulated state grew beyond the representable range.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, long step) : NumericalError(what), step_(step) {}

  long step() const { return step_; }

 private:
  long step_;
};

/// Trajectory too short for the requested embedding.
class DataLengthError : public ParameterError {
 public:
  DataLengthError(const std::string& what, long required)
      : ParameterError(what), required_(required) {}

  long required() const { return required_; }

 private:
  long required_;
};

/// Regression data lies in a proper subspace (e.g. zero trajectory).
class DegenerateDataError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// mu coincides with an eigenvalue of A, or the unit transfer value vanishes.
class MappingError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Scenario document failed schema validation. `path` names the offending field.
class ValidationError : public ParameterError {
 public:
  ValidationError(const std::string& path, const std::string& what)
      : ParameterError(path + ": " + what), path_(path) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// mu is an eigenvalue of A, where the transfer function has a pole.
class ExcludedEigenvalueError : public MappingError {
 public:
  using MappingError::MappingError;
};

}  // namespace specid
