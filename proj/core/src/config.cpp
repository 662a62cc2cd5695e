#include "pgrid/config.hpp"

#include <cmath>
#include <string>

#include "pgrid/error.hpp"

namespace pgrid {

Relaxation::Relaxation(double omega) : omega_(omega) {
  if (!(omega > 0.0 && omega < 2.0)) {
    throw ConfigError("relaxation factor must lie in (0, 2), got " + std::to_string(omega));
  }
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::rc_first_order:
      return "rc";
    case Mode::rlc_second_order:
      return "rlc";
    case Mode::automatic:
      return "auto";
  }
  return "auto";
}

std::optional<Mode> parse_mode(std::string_view text) {
  if (text == "rc") return Mode::rc_first_order;
  if (text == "rlc") return Mode::rlc_second_order;
  if (text == "auto") return Mode::automatic;
  return std::nullopt;
}

SolveConfig::SolveConfig(const SolveOptions& options)
    : options_(options), omega_(options.omega) {
  if (!(std::isfinite(options.step) && options.step > 0.0)) {
    throw ConfigError("time step must be positive");
  }
  if (options.steps < 2) {
    throw ConfigError("at least two time steps are required");
  }
  if (!(std::isfinite(options.tol) && options.tol > 0.0)) {
    throw ConfigError("tolerance must be positive");
  }
  if (options.max_inner < 1) {
    throw ConfigError("max inner iterations must be at least 1");
  }
}

}  // namespace pgrid
