#pragma once

#include <stdexcept>
#include <string>

namespace pmh {

/// A parameter bundle lies outside the model's domain.
class ParameterDomainError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid sampler, proposal or experiment configuration.
class ConfigurationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Every particle weight collapsed (underflow or NaN) at some filter step.
class DegeneracyError : public std::runtime_error {
public:
  explicit DegeneracyError(const std::string& message, int step = -1)
      : std::runtime_error(step >= 0 ? message + " (step " + std::to_string(step) + ")"
                                     : message),
        step_(step) {}

  /// Filter step at which the weights collapsed, -1 if not applicable.
  int step() const noexcept { return step_; }

private:
  int step_;
};

/// A post-processing quantity is undefined for the given trace.
class DiagnosticsError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unreadable input file.
class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace pmh
