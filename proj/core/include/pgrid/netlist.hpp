#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pgrid/waveform.hpp"

namespace pgrid {

enum class NodeKind { ground, source, trivial };

/// A node reference: its kind plus a dense 0-based index within that kind.
/// Ground always has index 0.
struct NodeRef {
  NodeKind kind = NodeKind::ground;
  std::size_t index = 0;

  static NodeRef ground() { return {}; }
  static NodeRef source(std::size_t i) { return {NodeKind::source, i}; }
  static NodeRef trivial(std::size_t i) { return {NodeKind::trivial, i}; }

  bool is_ground() const noexcept { return kind == NodeKind::ground; }
  bool is_source() const noexcept { return kind == NodeKind::source; }
  bool is_trivial() const noexcept { return kind == NodeKind::trivial; }

  friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

enum class ElementKind { voltage_source, resistor, capacitor, inductor, current_source };

char element_letter(ElementKind kind);

/// One netlist element. `a` is the branch source end and `b` the sink end;
/// current sources draw `waveform(t)` amperes from a to b. For voltage
/// sources `a` is the positive terminal and `value` is in volts.
struct Element {
  std::string name;
  ElementKind kind = ElementKind::resistor;
  NodeRef a;
  NodeRef b;
  double value = 0.0;
  PwlWaveform waveform;

  bool is_branch() const noexcept { return kind != ElementKind::voltage_source; }

  friend bool operator==(const Element&, const Element&) = default;
};

struct TranDirective {
  double step = 0.0;
  double stop = 0.0;

  std::size_t steps() const;

  friend bool operator==(const TranDirective&, const TranDirective&) = default;
};

/// Parsed circuit. Elements keep their file order; node indices follow the
/// order of first appearance.
struct Circuit {
  std::vector<std::string> trivial_names;
  std::vector<std::string> source_names;
  std::vector<Element> elements;
  std::map<std::string, double> node_ic;      // .ic V(node)=volts
  std::map<std::string, double> inductor_ic;  // .ic I(Lname)=amps
  TranDirective tran;

  std::size_t trivial_count() const noexcept { return trivial_names.size(); }
  std::size_t source_count() const noexcept { return source_names.size(); }
  std::size_t branch_count() const;

  std::string node_name(NodeRef ref) const;
  double source_voltage(std::size_t source) const;
  std::vector<double> source_voltages() const;  // indexed by source node
  // Voltage of a fixed node (ground or source). Trivial refs are rejected.
  double fixed_voltage(NodeRef ref) const;
  // First source voltage, or zero when the circuit has no sources.
  double rail_voltage() const;

  bool has_inductors() const;

  friend bool operator==(const Circuit&, const Circuit&) = default;
};

/// Number with an optional SPICE scale suffix (f p n u m k meg g t).
double parse_value(std::string_view token);

Circuit parse(std::string_view text);
Circuit parse_file(const std::filesystem::path& path);

std::string serialize(const Circuit& c);

enum class Assumption {
  grounded_sources = 1,     // every V element has its negative terminal at ground
  node_attachment = 2,      // no trivial node is attached by current sources alone
  trivial_connectivity = 3  // trivial nodes of one part reach each other directly
};

struct Violation {
  Assumption assumption;
  std::string subject;  // element or node name
  std::string message;
};

std::vector<Violation> validate(const Circuit& c);
std::string describe(const Violation& v);

/// A connected group of trivial nodes with everything needed to solve it on
/// its own. `trivial_map[k]` is the parent index of the k-th trivial node.
struct Component {
  Circuit circuit;
  std::vector<std::size_t> trivial_map;
};

struct Decomposition {
  std::vector<Component> components;
  std::vector<std::string> warnings;
};

Decomposition decompose(const Circuit& c);

}  // namespace pgrid
