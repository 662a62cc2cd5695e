#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pgrid {

// Malformed netlist text. Line and column are 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// A configuration value outside its admissible range.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The circuit is structurally unusable for the requested analysis
// (wrong mode, zero diagonal, unsupported initial condition).
class CircuitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iterative solve ran out of iterations.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(std::size_t step, std::size_t iterations, double residual,
                   const std::string& context);

  std::size_t step() const noexcept { return step_; }
  std::size_t iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  std::size_t step_;
  std::size_t iterations_;
  double residual_;
};

}  // namespace pgrid
