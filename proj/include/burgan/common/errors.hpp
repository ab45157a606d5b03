#pragma once

#include <stdexcept>
#include <string>

namespace burgan {

/// Invalid dimensions, bad settings, malformed config files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A NaN or Inf showed up where finite values are required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller broke a precondition (wrong sample count, non-scalar loss node, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IntegrationDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Metric has no meaning for the given input (zero-norm reference, constant field).
class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace burgan
