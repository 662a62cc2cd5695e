#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pgrid/netlist.hpp"
#include "pgrid/waveform.hpp"

namespace pgrid {

/// Merged coupling to another trivial node. Parallel branches are summed:
/// conductances, inverse inductances and capacitances add.
struct NeighborCoupling {
  std::size_t node = 0;
  double conductance = 0.0;     // S
  double inv_inductance = 0.0;  // 1/H
  double capacitance = 0.0;     // F, trivial-to-trivial capacitors
  double weight = 0.0;          // (g + h/L + c/h) / diag
};

/// Merged coupling to a fixed-voltage source node.
struct SourceCoupling {
  std::size_t source = 0;
  double volts = 0.0;
  double conductance = 0.0;
  double inv_inductance = 0.0;
};

struct LoadAttachment {
  std::size_t load = 0;  // index into StencilSet::loads()
  double sign = 1.0;     // +1 when the source draws current out of this node
};

/// Everything a sweep needs to update one trivial node without a matrix.
struct NodeStencil {
  double diag = 0.0;  // cap/h + g_row_sum + h * inv_l_row_sum
  std::vector<NeighborCoupling> lower;  // neighbours with smaller index
  std::vector<NeighborCoupling> upper;  // neighbours with larger index
  std::vector<SourceCoupling> sources;
  double src_inject = 0.0;      // sum of (h/L) * V_src over inductors to sources
  double cap = 0.0;             // diagonal of the capacitance matrix
  double g_row_sum = 0.0;       // every resistor at the node, ground included
  double inv_l_row_sum = 0.0;   // every inductor at the node, ground included
  std::vector<LoadAttachment> loads;
};

/// Per-node update data for one single-component circuit at step h.
/// Raw element values are kept so the step can be changed in place.
class StencilSet {
 public:
  StencilSet() = default;

  double step() const noexcept { return step_; }
  void set_step(double h);

  std::size_t size() const noexcept { return nodes_.size(); }
  const NodeStencil& operator[](std::size_t i) const { return nodes_[i]; }
  NodeStencil& node(std::size_t i) { return nodes_[i]; }
  std::span<const NodeStencil> nodes() const noexcept { return nodes_; }

  std::span<const std::string> node_names() const noexcept { return names_; }
  std::span<const PwlWaveform> loads() const noexcept { return loads_; }

  bool has_inductors() const noexcept { return has_inductors_; }
  bool has_coupling_capacitors() const noexcept { return has_coupling_caps_; }

  // Current drawn out of each node at time t, I_i(t).
  void node_currents(double t, std::span<double> out) const;

 private:
  friend StencilSet build_stencils(const Circuit& c, double h);

  double step_ = 0.0;
  std::vector<NodeStencil> nodes_;
  std::vector<std::string> names_;
  std::vector<PwlWaveform> loads_;
  bool has_inductors_ = false;
  bool has_coupling_caps_ = false;
};

StencilSet build_stencils(const Circuit& c, double h);

/// K_i for the second-order recurrence: the part of node i's update that
/// does not depend on the unknowns at t+h.
double rhs_constant(const StencilSet& s, std::size_t i, std::span<const double> v_t,
                    std::span<const double> v_tmh, double current_tph, double current_t);

/// K_i for the first-order backward Euler recurrence.
double rc_rhs_constant(const StencilSet& s, std::size_t i, std::span<const double> v_t,
                       double current_tph);

}  // namespace pgrid
