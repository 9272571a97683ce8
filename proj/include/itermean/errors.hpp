#pragma once

#include <stdexcept>
#include <string>

namespace itermean {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input lies outside the domain of the operation (non-positive scalar,
/// non-SPD matrix, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration: bad mean spec, degenerate sampling box, n too small.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation was violated by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// An inner (recursive) extension failed to converge within its budget.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, int depth, std::string sub_input)
      : Error(what + " (depth " + std::to_string(depth) + ", input " + sub_input + ")"),
        depth_(depth),
        sub_input_(std::move(sub_input)) {}

  int depth() const noexcept { return depth_; }
  const std::string& sub_input() const noexcept { return sub_input_; }

 private:
  int depth_;
  std::string sub_input_;
};

/// An n-variable evaluator threw while being probed by the axiom checker.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, std::string input)
      : Error(what + " at input " + input), input_(std::move(input)) {}

  const std::string& input() const noexcept { return input_; }

 private:
  std::string input_;
};

}  // namespace itermean
