#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

namespace pgrid {

/// SOR relaxation factor, restricted to the open interval (0, 2).
class Relaxation {
 public:
  explicit Relaxation(double omega);

  static Relaxation gauss_seidel() { return Relaxation(1.0); }

  double value() const noexcept { return omega_; }

 private:
  double omega_;
};

enum class Mode { rc_first_order, rlc_second_order, automatic };

std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view text);

struct SolveOptions {
  double step = 0.0;       // h, seconds
  std::size_t steps = 0;   // s_total
  double tol = 1e-10;      // volts, infinity norm of a sweep's update
  double omega = 1.0;
  std::size_t max_inner = 100000;
  Mode mode = Mode::automatic;
};

/// Validated solver settings. Construction throws ConfigError when any
/// option is out of range.
class SolveConfig {
 public:
  explicit SolveConfig(const SolveOptions& options);

  double step() const noexcept { return options_.step; }
  std::size_t steps() const noexcept { return options_.steps; }
  double tol() const noexcept { return options_.tol; }
  Relaxation omega() const noexcept { return omega_; }
  std::size_t max_inner() const noexcept { return options_.max_inner; }
  Mode mode() const noexcept { return options_.mode; }

  const SolveOptions& options() const noexcept { return options_; }

 private:
  SolveOptions options_;
  Relaxation omega_;
};

}  // namespace pgrid
