#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "pgrid/netlist.hpp"

namespace pgrid {

/// Rectangular power-grid mesh. Every node gets a capacitor to ground
/// (unless c_node is 0); every via_pitch-th boundary node is tied to the
/// rail through an inductor (l_via > 0) or a resistor of r_wire ohms.
struct GridSpec {
  std::size_t rows = 4;
  std::size_t cols = 4;
  double r_wire = 1.0;
  double c_node = 1e-12;
  double l_via = 0.0;
  std::size_t via_pitch = 4;
  double vdd = 1.0;
  double load_density = 0.25;
  double load_peak = 1e-3;
  std::uint64_t seed = 1;
  double step = 1e-12;
  std::size_t steps = 100;
  bool dc_loads = false;  // constant loads at load_peak instead of pulses
};

// Throws ConfigError when the GridSpec cannot produce a valid grid.
void check_spec(const GridSpec& spec);

std::string generate_netlist(const GridSpec& spec);
Circuit generate(const GridSpec& spec);

}  // namespace pgrid
