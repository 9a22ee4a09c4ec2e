#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jetgf {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Syntax error in a Hamiltonian expression; offset is a byte position in the source.
struct ParseError : Error {
  std::size_t offset;
  ParseError(const std::string& msg, std::size_t off)
      : Error(msg + " (at byte " + std::to_string(off) + ")"), offset(off) {}
};

// Evaluation hit an undefined value (log of a non-positive number, division by
// zero, ...); offset points at the offending sub-expression in the source.
struct EvalDomainError : Error {
  std::size_t offset;
  EvalDomainError(const std::string& msg, std::size_t off)
      : Error(msg + " (sub-expression at byte " + std::to_string(off) + ")"), offset(off) {}
};

struct ConfigError : Error {
  using Error::Error;
};

// Flow state became non-finite during integration.
struct FlowBlowupError : Error {
  double last_valid_time;
  FlowBlowupError(const std::string& msg, double t)
      : Error(msg + " (last valid time t=" + std::to_string(t) + ")"), last_valid_time(t) {}
};

// Newton-type iteration failed to reach its tolerance.
struct ConvergenceError : Error {
  double residual;
  int iterations;
  ConvergenceError(const std::string& msg, double res, int iters)
      : Error(msg + " (residual " + std::to_string(res) + " after " + std::to_string(iters) +
              " iterations)"),
        residual(res),
        iterations(iters) {}
};

// An internal identity that should hold to roundoff was violated.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace jetgf
