#include "pgrid/topology.hpp"

#include <cmath>
#include <map>

#include "pgrid/error.hpp"

namespace pgrid {

StencilSet build_stencils(const Circuit& c, double h) {
  const std::size_t n = c.trivial_count();
  StencilSet set;
  set.names_ = c.trivial_names;
  set.nodes_.resize(n);

  std::vector<std::map<std::size_t, NeighborCoupling>> neighbors(n);
  std::vector<std::map<std::size_t, SourceCoupling>> sources(n);
  const auto source_volts = c.source_voltages();

  auto couple = [&](std::size_t i, std::size_t j) -> NeighborCoupling& {
    auto [it, fresh] = neighbors[i].try_emplace(j);
    it->second.node = j;
    return it->second;
  };
  auto couple_source = [&](std::size_t i, std::size_t s) -> SourceCoupling& {
    auto [it, fresh] = sources[i].try_emplace(s);
    if (fresh) {
      it->second.source = s;
      it->second.volts = source_volts[s];
    }
    return it->second;
  };

  for (const auto& e : c.elements) {
    if (!e.is_branch()) continue;
    const NodeRef a = e.a;
    const NodeRef b = e.b;
    if (!a.is_trivial() && !b.is_trivial()) continue;

    switch (e.kind) {
      case ElementKind::resistor:
      case ElementKind::inductor: {
        const bool is_r = e.kind == ElementKind::resistor;
        const double y = 1.0 / e.value;
        if (!is_r) set.has_inductors_ = true;
        for (auto [self, other] : {std::pair{a, b}, std::pair{b, a}}) {
          if (!self.is_trivial()) continue;
          NodeStencil& st = set.nodes_[self.index];
          (is_r ? st.g_row_sum : st.inv_l_row_sum) += y;
          if (other.is_trivial()) {
            auto& nb = couple(self.index, other.index);
            (is_r ? nb.conductance : nb.inv_inductance) += y;
          } else if (other.is_source()) {
            auto& sc = couple_source(self.index, other.index);
            (is_r ? sc.conductance : sc.inv_inductance) += y;
          }
        }
        break;
      }
      case ElementKind::capacitor: {
        for (auto [self, other] : {std::pair{a, b}, std::pair{b, a}}) {
          if (!self.is_trivial()) continue;
          set.nodes_[self.index].cap += e.value;
          if (other.is_trivial()) {
            couple(self.index, other.index).capacitance += e.value;
            set.has_coupling_caps_ = true;
          }
        }
        break;
      }
      case ElementKind::current_source: {
        const std::size_t load = set.loads_.size();
        set.loads_.push_back(e.waveform);
        if (a.is_trivial()) set.nodes_[a.index].loads.push_back({load, 1.0});
        if (b.is_trivial()) set.nodes_[b.index].loads.push_back({load, -1.0});
        break;
      }
      case ElementKind::voltage_source:
        break;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    NodeStencil& st = set.nodes_[i];
    for (const auto& [j, nb] : neighbors[i]) {
      (j < i ? st.lower : st.upper).push_back(nb);
    }
    for (const auto& [s, sc] : sources[i]) {
      st.sources.push_back(sc);
    }
  }
  set.set_step(h);
  return set;
}

void StencilSet::set_step(double h) {
  if (!(h > 0.0)) {
    throw ConfigError("time step must be positive");
  }
  step_ = h;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    NodeStencil& st = nodes_[i];
    st.diag = st.cap / h + st.g_row_sum + h * st.inv_l_row_sum;
    if (!(st.diag > 0.0)) {
      throw CircuitError("node " + names_[i] +
                         " has a zero diagonal: no resistor, capacitor or inductor attached");
    }
    for (auto* group : {&st.lower, &st.upper}) {
      for (auto& nb : *group) {
        nb.weight = (nb.conductance + h * nb.inv_inductance + nb.capacitance / h) / st.diag;
      }
    }
    st.src_inject = 0.0;
    for (const auto& sc : st.sources) {
      st.src_inject += h * sc.inv_inductance * sc.volts;
    }
  }
}

void StencilSet::node_currents(double t, std::span<double> out) const {
  std::vector<double> load_value(loads_.size());
  for (std::size_t k = 0; k < loads_.size(); ++k) {
    load_value[k] = loads_[k].eval(t);
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    double sum = 0.0;
    for (const auto& att : nodes_[i].loads) {
      sum += att.sign * load_value[att.load];
    }
    out[i] = sum;
  }
}

double rhs_constant(const StencilSet& s, std::size_t i, std::span<const double> v_t,
                    std::span<const double> v_tmh, double current_tph, double current_t) {
  const NodeStencil& st = s[i];
  const double h = s.step();
  double sum = st.src_inject + (2.0 * st.cap / h + st.g_row_sum) * v_t[i];
  for (const auto* group : {&st.lower, &st.upper}) {
    for (const auto& nb : *group) {
      sum -= nb.conductance * v_t[nb.node];
      if (nb.capacitance != 0.0) {
        sum -= nb.capacitance / h * (2.0 * v_t[nb.node] - v_tmh[nb.node]);
      }
    }
  }
  // resistors to sources contribute g * V_src at both t+h and t, which cancel
  sum += -current_tph + current_t - st.cap / h * v_tmh[i];
  return sum / st.diag;
}

double rc_rhs_constant(const StencilSet& s, std::size_t i, std::span<const double> v_t,
                       double current_tph) {
  const NodeStencil& st = s[i];
  const double h = s.step();
  double sum = st.cap / h * v_t[i];
  for (const auto* group : {&st.lower, &st.upper}) {
    for (const auto& nb : *group) {
      if (nb.capacitance != 0.0) {
        sum -= nb.capacitance / h * v_t[nb.node];
      }
    }
  }
  for (const auto& sc : st.sources) {
    sum += sc.conductance * sc.volts;
  }
  sum -= current_tph;
  return sum / st.diag;
}

}  // namespace pgrid
