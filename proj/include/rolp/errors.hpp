#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rolp {

/// Base class for all recoverable library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file; the message carries the offending field path.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A parameter or derived quantity is outside its mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A probability row does not describe a sub-distribution.
class DistributionError : public Error {
 public:
  using Error::Error;
};

/// An exhaustive routine was asked to enumerate an instance that is too big.
class SizeLimitError : public Error {
 public:
  using Error::Error;
};

/// The simplex solver ran out of pivots.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::size_t pivot_limit, double last_objective)
      : Error(what + " (pivot limit " + std::to_string(pivot_limit) + ", last objective " +
              std::to_string(last_objective) + ")"),
        pivot_limit_(pivot_limit),
        last_objective_(last_objective) {}

  std::size_t pivot_limit() const noexcept { return pivot_limit_; }
  double last_objective() const noexcept { return last_objective_; }

 private:
  std::size_t pivot_limit_;
  double last_objective_;
};

}  // namespace rolp
