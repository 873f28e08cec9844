#pragma once

#include <stdexcept>
#include <string>

namespace horolab {

// Bad arguments: non-finite times, points off the upper half-plane, malformed specs.
class InvalidInput : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A numerical procedure failed to produce a trustworthy result
// (non-convergence, singular denominators, bracket failure, ...).
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class SingularTime : public NumericError {
public:
  using NumericError::NumericError;
};

class DomainError : public NumericError {
public:
  using NumericError::NumericError;
};

// Spec/config files that fail to parse or are inconsistent.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace horolab
