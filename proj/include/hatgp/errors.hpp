#pragma once

#include <stdexcept>
#include <string>

namespace hatgp {

// Error hierarchy shared by the library and the command-line tool.  The CLI
// maps each branch to a distinct exit code: configuration problems -> 2,
// data/ingestion problems -> 3, infeasible constraint systems -> 4 and
// numerical failures -> 5.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid argument values or configuration (bad knot ordering, out-of-range
// options, unknown config keys, ...).
struct ConfigError : Error {
  using Error::Error;
};

// Malformed or inconsistent input data (CSV parse failures, out-of-range
// inputs, dimension mismatches between files and config).
struct DataError : Error {
  using Error::Error;
};

// The requested constraint system admits no solution.
struct InfeasibleError : Error {
  using Error::Error;
};

// Numerical breakdown that survives the built-in safeguards (Cholesky failure
// past the jitter ladder, optimizer divergence, sampler starvation, ...).
struct NumericalError : Error {
  using Error::Error;
};

}  // namespace hatgp
