#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "pgrid/config.hpp"
#include "pgrid/netlist.hpp"
#include "pgrid/topology.hpp"
#include "pgrid/waveform.hpp"

namespace pgrid {

struct SolveReport {
  Mode mode = Mode::automatic;
  std::vector<std::size_t> iterations;  // per step; steps 0/1 report DC sweeps
  std::vector<double> residuals;        // final sweep update per step
  double wall_seconds = 0.0;
  std::vector<double> v0;
  std::vector<double> v1;

  std::size_t total_iterations() const;
};

struct TransientResult {
  WaveformSet waves;
  SolveReport report;
};

/// Resolves `automatic` to rc_first_order when the circuit has no inductors.
Mode resolve_mode(const Circuit& c, Mode requested);

/// One ascending SOR sweep over all trivial nodes; returns the largest
/// absolute change. `k` holds the per-node constants K_i.
double step_update(const StencilSet& s, std::span<double> v, std::span<const double> k,
                   Relaxation omega);

/// The same sweep without relaxation blending.
double gauss_seidel_update(const StencilSet& s, std::span<double> v, std::span<const double> k);

struct MarchHooks {
  // Called after every inner sweep of every step s >= first recurrence step.
  std::function<void(std::size_t step, std::size_t sweep, std::span<const double> v,
                     std::span<const double> k)>
      on_sweep;
  // Start each step's inner loop from zeros instead of V(s-1).
  bool cold_start = false;
};

/// Time-marches from given starting voltages. RC mode needs only v0; RLC
/// mode needs v0 and v1.
TransientResult march(const StencilSet& s, const SolveConfig& cfg, Mode mode,
                      std::vector<double> v0, std::optional<std::vector<double>> v1,
                      const MarchHooks& hooks = {});

/// Single-component transient solve, initial state from `initialize`.
TransientResult run(const Circuit& c, const SolveConfig& cfg, const MarchHooks& hooks = {});
TransientResult run_rc(const Circuit& c, const SolveConfig& cfg, const MarchHooks& hooks = {});
TransientResult run_rlc(const Circuit& c, const SolveConfig& cfg, const MarchHooks& hooks = {});

/// Solves an inductor-free circuit with both recurrences from the same
/// V(0) and V(1); the second-order run starts from the first-order V(1).
struct ModeComparison {
  TransientResult first_order;
  TransientResult second_order;
  double max_difference = 0.0;
};

ModeComparison compare_modes(const Circuit& c, const SolveConfig& cfg);

/// Decomposes, solves the parts concurrently and merges the node columns
/// back into netlist order. Reports are concatenated per component.
struct CircuitResult {
  WaveformSet waves;
  std::vector<SolveReport> reports;
  std::vector<std::string> warnings;
};

CircuitResult run_circuit(const Circuit& c, const SolveConfig& cfg);

}  // namespace pgrid
