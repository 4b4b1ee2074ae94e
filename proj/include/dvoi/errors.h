#pragma once

#include <stdexcept>
#include <string>

namespace dvoi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or configuration value (exit code 1).
class ArgumentError : public Error {
  public:
    using Error::Error;
};

/// Input file does not follow the expected layout.
class SchemaError : public Error {
  public:
    using Error::Error;
};

/// Input data violates a domain invariant (negative load, bad probability, ...).
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// Requested key missing from a dataset.
class LookupError : public Error {
  public:
    using Error::Error;
};

/// Posterior inference failed (likelihood inconsistent with prior support, ...).
class InferenceError : public Error {
  public:
    using Error::Error;
};

/// LP solver did not return an optimal solution.
class SolverError : public Error {
  public:
    using Error::Error;
};

/// Receding-horizon simulation failed at a given step.
class SimulationError : public Error {
  public:
    SimulationError(const std::string &what, std::size_t step) : Error(what), step_{step} {}
    std::size_t step() const noexcept { return step_; }

  private:
    std::size_t step_;
};

class IoError : public Error {
  public:
    using Error::Error;
};

} // namespace dvoi
