#pragma once

#include <stdexcept>
#include <string>

namespace ammi {

/// Base for every error raised by the library. `kind()` is a stable,
/// machine-parsable tag used by the CLI when reporting failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// Malformed input: bad CSV, duplicate cells, non-finite values, bad flags.
class ValidationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "validation"; }
};

/// Two objects that should describe the same problem disagree on I, J or Q.
class DimensionMismatchError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "dimension"; }
};

/// Rank deficiency, singular designs, constant chains.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "degenerate"; }
};

/// Non-finite ELBO or sampler state.
class DivergenceError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "divergence"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

}  // namespace ammi
