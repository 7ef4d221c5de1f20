#pragma once

#include <stdexcept>

namespace sparsid {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Vector/matrix sizes that must agree do not.
struct DimensionError : Error {
  using Error::Error;
};

// Normal-equation system is not positive definite (e.g. rank-deficient data
// with zero regularization). Distinct from DimensionError on purpose.
struct SingularSystemError : Error {
  using Error::Error;
};

// Malformed data file (impulse response, PCM). Messages carry line numbers
// where they make sense.
struct ParseError : Error {
  using Error::Error;
};

// Bad configuration: unparseable config text, unknown or out-of-range keys.
// The CLI maps this to exit code 1.
struct ConfigError : Error {
  using Error::Error;
};

// Input file missing or unreadable.
struct IoError : Error {
  using Error::Error;
};

// Output destination cannot be written. The CLI maps this to exit code 3.
struct OutputError : Error {
  using Error::Error;
};

// A documented precondition of an operation does not hold (e.g. the proxy
// diagnostic needs white input). The CLI maps this to exit code 2.
struct PreconditionError : Error {
  using Error::Error;
};

}  // namespace sparsid
