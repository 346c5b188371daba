#pragma once

#include <stdexcept>
#include <string>

namespace mlpsel {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An input vector does not match the network's input dimension.
struct ShapeError : Error {
  using Error::Error;
};

// sigma^2 <= 0 (or non-finite) where a Gaussian density is required.
struct InvalidNoiseError : Error {
  using Error::Error;
};

// Empty dataset, bad grid, out-of-range argument, and similar misuse.
struct InvalidInputError : Error {
  using Error::Error;
};

// Every restart of the optimizer diverged; the message carries diagnostics.
struct OptimizationError : Error {
  using Error::Error;
};

// The candidate parameter realizes the true regression function, so the
// normalized score direction is undefined.
struct DegenerateDirectionError : Error {
  using Error::Error;
};

// Two reference units are closer than twice the clustering tolerance.
struct AmbiguousClusterError : Error {
  using Error::Error;
};

// A (phi, psi) split violates its internal constraints (cluster weights
// not summing to one, empty cluster, size mismatch).
struct InvalidDecompositionError : Error {
  using Error::Error;
};

// A member of the Gram function family has (numerically) zero norm.
struct DegenerateFunctionError : Error {
  using Error::Error;
};

// Malformed configuration or input file.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace mlpsel
