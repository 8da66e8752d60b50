#pragma once

#include <stdexcept>
#include <string>

namespace evtrack {

/// Invalid or inconsistent configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A run cannot continue: integrator blow-up, clock regression, geometry
/// bug. Maps to CLI exit code 1.
class FaultError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An offline analysis was handed data it cannot work with.
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller broke a documented precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace evtrack
