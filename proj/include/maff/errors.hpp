#ifndef MAFF_ERRORS_HPP
#define MAFF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace maff {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

// File could not be opened, read, or written.
struct IoError : Error {
  using Error::Error;
};

// Malformed input file (carries a 1-based line number when known).
struct ParseError : Error {
  ParseError(const std::string &msg, std::size_t line = 0)
      : Error(line ? msg + " (line " + std::to_string(line) + ")" : msg),
        line_number(line) {}
  std::size_t line_number;
};

// Structurally valid input that violates a documented precondition.
struct ValidationError : Error {
  using Error::Error;
};

// Bad argument to an estimation routine (out-of-range probability, etc).
struct ArgumentError : Error {
  using Error::Error;
};

// Numerical estimation failed (non-convergence, separation, ...).
struct EstimationError : Error {
  using Error::Error;
};

// An observation has zero mixture probability under every latent grid
// point, so the log likelihood is -inf for all parameter values.
struct InfeasibleSupportError : EstimationError {
  using EstimationError::EstimationError;
};

// Data carry no information about the requested parameter.
struct NonIdentifiableError : EstimationError {
  using EstimationError::EstimationError;
};

}  // namespace maff

#endif
