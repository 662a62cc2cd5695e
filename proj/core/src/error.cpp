#include "pgrid/error.hpp"

#include <sstream>

namespace pgrid {

namespace {

std::string located(std::size_t line, std::size_t column, const std::string& what) {
  std::ostringstream os;
  os << "line " << line << ", column " << column << ": " << what;
  return os.str();
}

std::string unconverged(std::size_t step, std::size_t iterations, double residual,
                        const std::string& context) {
  std::ostringstream os;
  os << context << " did not converge at step " << step << " after " << iterations
     << " iterations (last update " << residual << " V)";
  return os.str();
}

}  // namespace

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& what)
    : std::runtime_error(located(line, column, what)), line_(line), column_(column) {}

ConvergenceError::ConvergenceError(std::size_t step, std::size_t iterations, double residual,
                                   const std::string& context)
    : std::runtime_error(unconverged(step, iterations, residual, context)),
      step_(step),
      iterations_(iterations),
      residual_(residual) {}

}  // namespace pgrid
