#include "pgrid/dc.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pgrid/error.hpp"

namespace pgrid {

double DcProblem::outflow(std::size_t i, std::span<const double> v) const {
  double sum = rail_conductance[i] * v[i] - rail_current[i] + drawn[i];
  for (const auto& link : links[i]) {
    sum += link.conductance * (v[i] - v[link.node]);
  }
  return sum;
}

DcProblem make_dc_problem(const Circuit& c, double t,
                          std::span<const std::optional<double>> pins,
                          std::span<const double> inductor_currents) {
  const std::size_t n = c.trivial_count();
  const auto source_volts = c.source_voltages();
  DcProblem p;
  p.links.resize(n);
  p.rail_conductance.assign(n, 0.0);
  p.rail_current.assign(n, 0.0);
  p.drawn.assign(n, 0.0);
  p.pinned.assign(pins.begin(), pins.end());
  p.pinned.resize(n);

  std::vector<std::map<std::size_t, double>> merged(n);
  auto draw = [&](const Element& e, double amps) {
    if (e.a.is_trivial()) p.drawn[e.a.index] += amps;
    if (e.b.is_trivial()) p.drawn[e.b.index] -= amps;
  };

  for (std::size_t k = 0; k < c.elements.size(); ++k) {
    const Element& e = c.elements[k];
    switch (e.kind) {
      case ElementKind::resistor: {
        const double g = 1.0 / e.value;
        for (auto [self, other] : {std::pair{e.a, e.b}, std::pair{e.b, e.a}}) {
          if (!self.is_trivial()) continue;
          if (other.is_trivial()) {
            merged[self.index][other.index] += g;
          } else {
            p.rail_conductance[self.index] += g;
            if (other.is_source()) p.rail_current[self.index] += g * source_volts[other.index];
          }
        }
        break;
      }
      case ElementKind::current_source:
        draw(e, e.waveform.eval(t));
        break;
      case ElementKind::inductor:
        draw(e, inductor_currents.empty() ? 0.0 : inductor_currents[k]);
        break;
      case ElementKind::capacitor:
      case ElementKind::voltage_source:
        break;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, g] : merged[i]) {
      p.links[i].push_back({j, g});
    }
  }
  return p;
}

DcResult dc_solve(const DcProblem& p, double tol, Relaxation omega, std::size_t max_iter,
                  std::span<const double> initial) {
  const std::size_t n = p.size();
  DcResult r;
  r.voltages.assign(n, 0.0);
  if (!initial.empty()) {
    std::copy_n(initial.begin(), std::min(n, initial.size()), r.voltages.begin());
  }

  std::vector<double> diag(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (p.pinned[i]) {
      r.voltages[i] = *p.pinned[i];
      continue;
    }
    diag[i] = p.rail_conductance[i];
    for (const auto& link : p.links[i]) diag[i] += link.conductance;
    if (!(diag[i] > 0.0)) {
      throw CircuitError("DC analysis: node " + std::to_string(i) +
                         " has no resistive path and is not held by a capacitor");
    }
  }

  const double w = omega.value();
  auto& v = r.voltages;
  do {
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (p.pinned[i]) continue;
      double sum = p.rail_current[i] - p.drawn[i];
      for (const auto& link : p.links[i]) {
        sum += link.conductance * v[link.node];
      }
      const double updated = w * (sum / diag[i]) + (1.0 - w) * v[i];
      delta = std::max(delta, std::abs(updated - v[i]));
      v[i] = updated;
    }
    ++r.iterations;
    r.last_update = delta;
  } while (r.last_update >= tol && r.iterations < max_iter);

  if (r.last_update >= tol) {
    throw ConvergenceError(0, r.iterations, r.last_update, "DC analysis");
  }
  return r;
}

InitialConditions resolve_initial_conditions(const Circuit& c) {
  const std::size_t n = c.trivial_count();
  const auto source_volts = c.source_voltages();
  InitialConditions ic;
  ic.pinned.assign(n, std::nullopt);
  ic.inductor_current.assign(c.elements.size(), 0.0);
  ic.pinning_caps.resize(n);

  std::vector<bool> floating_cap(n, false);
  std::vector<std::optional<double>> source_side(n);
  for (std::size_t k = 0; k < c.elements.size(); ++k) {
    const Element& e = c.elements[k];
    if (e.kind == ElementKind::inductor) {
      if (auto it = c.inductor_ic.find(e.name); it != c.inductor_ic.end()) {
        ic.inductor_current[k] = it->second;
      }
      continue;
    }
    if (e.kind != ElementKind::capacitor) continue;
    if (e.a.is_trivial() && e.b.is_trivial()) {
      floating_cap[e.a.index] = floating_cap[e.b.index] = true;
      continue;
    }
    for (auto [self, other] : {std::pair{e.a, e.b}, std::pair{e.b, e.a}}) {
      if (!self.is_trivial()) continue;
      ic.pinning_caps[self.index].push_back(k);
      if (other.is_source() && !source_side[self.index]) {
        source_side[self.index] = source_volts[other.index];
      }
    }
  }

  const double rail = c.rail_voltage();
  for (std::size_t i = 0; i < n; ++i) {
    const auto explicit_ic = c.node_ic.find(c.trivial_names[i]);
    if (ic.pinning_caps[i].empty()) {
      if (explicit_ic == c.node_ic.end()) continue;
      if (floating_cap[i]) {
        throw CircuitError("initial voltage on node " + c.trivial_names[i] +
                           " would pin a capacitor between two trivial nodes; "
                           "only capacitors to ground or a source can be pinned");
      }
      throw CircuitError("initial voltage on node " + c.trivial_names[i] +
                         " has no capacitor to hold it");
    }
    if (explicit_ic != c.node_ic.end()) {
      ic.pinned[i] = explicit_ic->second;
    } else {
      // precharged grid: capacitors start at the rail (or their own source)
      ic.pinned[i] = source_side[i] ? *source_side[i] : rail;
    }
  }
  return ic;
}

DcResult initial_operating_point(const Circuit& c, const SolveConfig& cfg) {
  const InitialConditions ic = resolve_initial_conditions(c);
  const DcProblem p0 = make_dc_problem(c, 0.0, ic.pinned, ic.inductor_current);
  std::vector<double> guess(c.trivial_count(), c.rail_voltage());
  try {
    return dc_solve(p0, cfg.tol(), cfg.omega(), cfg.max_inner(), guess);
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(0, e.iterations(), e.residual(), "initial DC analysis");
  }
}

InitState initialize(const Circuit& c, double h, const SolveConfig& cfg) {
  const std::size_t n = c.trivial_count();
  const std::size_t m = c.elements.size();
  const auto source_volts = c.source_voltages();
  const InitialConditions ic = resolve_initial_conditions(c);

  auto solve = [&](const DcProblem& p, std::span<const double> guess, std::size_t step) {
    try {
      return dc_solve(p, cfg.tol(), cfg.omega(), cfg.max_inner(), guess);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError(step, e.iterations(), e.residual(), "initial DC analysis");
    }
  };

  // step 1: capacitors as voltage sources, inductors as current sources
  std::vector<double> guess(n, c.rail_voltage());
  const DcProblem p0 = make_dc_problem(c, 0.0, ic.pinned, ic.inductor_current);
  DcResult r0 = solve(p0, guess, 0);

  InitState st;
  st.v0 = std::move(r0.voltages);
  st.iterations0 = r0.iterations;
  st.cap_voltage.assign(m, 0.0);
  st.cap_current.assign(m, 0.0);
  st.inductor_voltage.assign(m, 0.0);
  st.cap_voltage_h.assign(m, 0.0);
  st.inductor_current_h.assign(m, 0.0);

  auto volt = [&](NodeRef r, std::span<const double> v) {
    if (r.is_trivial()) return v[r.index];
    return r.is_source() ? source_volts[r.index] : 0.0;
  };

  for (std::size_t k = 0; k < m; ++k) {
    const Element& e = c.elements[k];
    if (e.kind == ElementKind::capacitor) {
      st.cap_voltage[k] = volt(e.a, st.v0) - volt(e.b, st.v0);
    } else if (e.kind == ElementKind::inductor) {
      st.inductor_voltage[k] = volt(e.a, st.v0) - volt(e.b, st.v0);
    }
  }

  // i_c(0) is whatever the rest of the network pushes into the pinned node;
  // parallel pinning capacitors share it in proportion to capacitance
  for (std::size_t i = 0; i < n; ++i) {
    if (!ic.pinned[i]) continue;
    const double into_caps = -p0.outflow(i, st.v0);
    double total = 0.0;
    for (std::size_t k : ic.pinning_caps[i]) total += c.elements[k].value;
    for (std::size_t k : ic.pinning_caps[i]) {
      const Element& e = c.elements[k];
      const double share = into_caps * (e.value / total);
      st.cap_current[k] = e.a == NodeRef::trivial(i) ? share : -share;
    }
  }

  // step 2: explicit update of element states to t = h
  for (std::size_t k = 0; k < m; ++k) {
    const Element& e = c.elements[k];
    if (e.kind == ElementKind::capacitor) {
      st.cap_voltage_h[k] = st.cap_voltage[k] + h / e.value * st.cap_current[k];
    } else if (e.kind == ElementKind::inductor) {
      st.inductor_current_h[k] = ic.inductor_current[k] + h / e.value * st.inductor_voltage[k];
    }
  }

  // step 3: pinned DC solve at t = h
  std::vector<std::optional<double>> pins1(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!ic.pinned[i]) continue;
    const std::size_t k = ic.pinning_caps[i].front();
    const Element& e = c.elements[k];
    pins1[i] = e.a == NodeRef::trivial(i) ? st.cap_voltage_h[k] + volt(e.b, st.v0)
                                          : volt(e.a, st.v0) - st.cap_voltage_h[k];
  }
  const DcProblem p1 = make_dc_problem(c, h, pins1, st.inductor_current_h);
  DcResult r1 = solve(p1, st.v0, 1);
  st.v1 = std::move(r1.voltages);
  st.iterations1 = r1.iterations;
  return st;
}

}  // namespace pgrid
