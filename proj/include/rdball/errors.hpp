#pragma once

#include <stdexcept>
#include <string>

namespace rdball {

/// Base class of all library exceptions.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Input data failed a structural or range check. Recoverable by fixing the input.
struct ValidationError : Error {
  using Error::Error;
};

/// A numerical procedure could not produce a trustworthy result.
struct NumericalError : Error {
  using Error::Error;
};

struct NonPositiveDiffusion : ValidationError {
  explicit NonPositiveDiffusion(double value)
      : ValidationError("diffusion coefficient must be positive, got " +
                        std::to_string(value)) {}
};

/// A coefficient list meant to be even in r has a nonzero odd entry.
struct EvennessViolation : ValidationError {
  long offending_index;
  EvennessViolation(long index, double value)
      : ValidationError("odd-power coefficient at index " + std::to_string(index) +
                        " is nonzero (" + std::to_string(value) +
                        "); the method requires an even reaction profile"),
        offending_index(index) {}
};

struct DomainViolation : ValidationError {
  using ValidationError::ValidationError;
};

struct GridMismatch : ValidationError {
  using ValidationError::ValidationError;
};

struct OrderOverflow : ValidationError {
  OrderOverflow(long requested_order, long order_cap)
      : ValidationError("series order " + std::to_string(requested_order) +
                        " exceeds the configured cap " +
                        std::to_string(order_cap)),
        requested(requested_order),
        cap(order_cap) {}
  long requested;
  long cap;
};

struct LinearSolveFailure : NumericalError {
  using NumericalError::NumericalError;
};

struct MissingKernel : ValidationError {
  explicit MissingKernel(long l)
      : ValidationError("no kernel supplied for controlled degree l = " +
                        std::to_string(l)) {}
};

struct BandLimitMismatch : ValidationError {
  using ValidationError::ValidationError;
};

struct UnderResolvedGrid : ValidationError {
  using ValidationError::ValidationError;
};

}  // namespace rdball
