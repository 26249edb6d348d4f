#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kirchhoff {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the arguments of an operation does not hold.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An iterative method (CG, Newton, Picard, bisection, quadrature) did not
/// reach its tolerance within the allowed budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A proven postcondition was violated beyond tolerance. Indicates a bug or a
/// coefficient that does not satisfy its declared hypotheses.
class PostconditionError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Domain error while evaluating an expression (log of a non-positive number,
/// division by zero, ...). Never silently replaced by NaN.
class EvalError : public Error {
 public:
  using Error::Error;
};

}  // namespace kirchhoff
