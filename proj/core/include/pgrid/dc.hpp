#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pgrid/config.hpp"
#include "pgrid/netlist.hpp"

namespace pgrid {

/// Resistive network over the trivial nodes of one circuit. Sources and
/// ground are folded into per-node rail terms; pinned nodes are held fixed.
struct DcProblem {
  struct Link {
    std::size_t node = 0;
    double conductance = 0.0;
  };

  std::vector<std::vector<Link>> links;
  std::vector<double> rail_conductance;  // sum of g to sources and ground
  std::vector<double> rail_current;      // sum of g * V_rail
  std::vector<double> drawn;             // current drawn out of each node
  std::vector<std::optional<double>> pinned;

  std::size_t size() const noexcept { return links.size(); }

  // Current leaving node i through resistors and loads at voltages v.
  double outflow(std::size_t i, std::span<const double> v) const;
};

struct DcResult {
  std::vector<double> voltages;
  std::size_t iterations = 0;
  double last_update = 0.0;
};

/// Builds the resistive problem at time t. Inductors become current sources
/// carrying `inductor_currents[e]` for element e (a to b); capacitors are open.
DcProblem make_dc_problem(const Circuit& c, double t,
                          std::span<const std::optional<double>> pins,
                          std::span<const double> inductor_currents);

/// Gauss-Seidel / SOR sweeps in ascending node order until the largest
/// per-node update drops below tol.
DcResult dc_solve(const DcProblem& p, double tol, Relaxation omega, std::size_t max_iter,
                  std::span<const double> initial = {});

/// Resolved t = 0 state: which nodes are held by grounded capacitors and at
/// what voltage, plus each element's initial capacitor voltage / inductor
/// current (indexed by element, zero for other kinds).
struct InitialConditions {
  std::vector<std::optional<double>> pinned;
  std::vector<double> inductor_current;
  std::vector<std::vector<std::size_t>> pinning_caps;  // per trivial node
};

InitialConditions resolve_initial_conditions(const Circuit& c);

struct InitState {
  std::vector<double> v0;
  std::vector<double> v1;
  std::vector<double> cap_voltage;        // v_c(0), per element
  std::vector<double> cap_current;        // i_c(0), per element
  std::vector<double> inductor_voltage;   // v_l(0), per element
  std::vector<double> cap_voltage_h;      // v_c(h), per element
  std::vector<double> inductor_current_h; // i_l(h), per element
  std::size_t iterations0 = 0;
  std::size_t iterations1 = 0;
};

/// Step one only: the pinned DC solve at t = 0. Enough for the first-order
/// recurrence, which needs no V(1).
DcResult initial_operating_point(const Circuit& c, const SolveConfig& cfg);

/// Three-step start-up: pinned DC solve at 0, explicit element update to h,
/// pinned DC solve at h.
InitState initialize(const Circuit& c, double h, const SolveConfig& cfg);

}  // namespace pgrid
