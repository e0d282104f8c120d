#pragma once

#include <stdexcept>
#include <string>

namespace pzo {

// Dimension or precondition mismatch detected at an API boundary.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Solver parameters that cannot be used (e.g. a scaling Gram that fails A'A + G >= I).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A diagnostic needs a hook (exact gradient, smoothed value) that the problem does not provide.
class CapabilityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Test oracles (brute-force prox, Monte-Carlo references) that did not converge.
class OracleFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double last_residual = 0.0)
      : std::runtime_error(what), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pzo
