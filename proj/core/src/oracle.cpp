#include "pgrid/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "pgrid/dc.hpp"
#include "pgrid/error.hpp"
#include "pgrid/transient.hpp"

namespace pgrid::oracle {

DenseMatrix Incidence::dense() const {
  DenseMatrix d(rows(), cols_);
  for (std::size_t r = 0; r < rows(); ++r) {
    for (const auto& [col, sign] : rows_[r]) d(r, col) = sign;
  }
  return d;
}

Incidence Incidence::slice(std::size_t first, std::size_t count) const {
  Incidence out(cols_);
  for (std::size_t r = first; r < first + count; ++r) out.rows_.push_back(rows_.at(r));
  return out;
}

DenseMatrix congruence(const Incidence& left, std::span<const double> weights,
                       const Incidence& right) {
  if (left.rows() != right.rows() || weights.size() != left.rows()) {
    throw std::invalid_argument("incidence row counts differ");
  }
  DenseMatrix out(left.cols(), right.cols());
  for (std::size_t r = 0; r < left.rows(); ++r) {
    for (const auto& [p, sp] : left.row(r)) {
      for (const auto& [q, sq] : right.row(r)) {
        out(p, q) += weights[r] * static_cast<double>(sp * sq);
      }
    }
  }
  return out;
}

IncidenceSet build_incidence(const Circuit& c) {
  IncidenceSet inc;
  inc.a = Incidence(c.trivial_count());
  inc.a_s = Incidence(c.source_count());
  inc.v_d = c.source_voltages();

  auto add = [&](std::size_t k) {
    const Element& e = c.elements[k];
    std::vector<Incidence::Entry> trivial;
    std::vector<Incidence::Entry> source;
    for (auto [end, sign] : {std::pair{e.a, +1}, std::pair{e.b, -1}}) {
      if (end.is_trivial()) trivial.emplace_back(end.index, sign);
      if (end.is_source()) source.emplace_back(end.index, sign);
    }
    inc.a.add_row(std::move(trivial));
    inc.a_s.add_row(std::move(source));
    inc.element.push_back(k);
  };

  for (ElementKind kind : {ElementKind::resistor, ElementKind::capacitor, ElementKind::inductor,
                           ElementKind::current_source}) {
    for (std::size_t k = 0; k < c.elements.size(); ++k) {
      const Element& e = c.elements[k];
      if (e.kind != kind) continue;
      add(k);
      switch (kind) {
        case ElementKind::resistor:
          ++inc.resistors;
          inc.conductance.push_back(1.0 / e.value);
          break;
        case ElementKind::capacitor:
          ++inc.capacitors;
          inc.capacitance.push_back(e.value);
          break;
        case ElementKind::inductor:
          ++inc.inductors;
          inc.inductance.push_back(e.value);
          break;
        default:
          ++inc.current_sources;
          break;
      }
    }
  }
  return inc;
}

namespace {

std::vector<double> reciprocal(std::span<const double> v) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](double x) { return 1.0 / x; });
  return out;
}

// A_i^T I_s(t): current drawn out of each trivial node
std::vector<double> drawn_currents(const Circuit& c, const IncidenceSet& inc, double t) {
  std::vector<double> out(c.trivial_count(), 0.0);
  const std::size_t first = inc.resistors + inc.capacitors + inc.inductors;
  for (std::size_t r = 0; r < inc.current_sources; ++r) {
    const double amps = c.elements[inc.element[first + r]].waveform.eval(t);
    for (const auto& [col, sign] : inc.a.row(first + r)) out[col] += sign * amps;
  }
  return out;
}

// A_l^T i_l for per-element inductor currents
std::vector<double> inductor_outflow(const Circuit& c, const IncidenceSet& inc,
                                     std::span<const double> per_element) {
  std::vector<double> out(c.trivial_count(), 0.0);
  const std::size_t first = inc.resistors + inc.capacitors;
  for (std::size_t r = 0; r < inc.inductors; ++r) {
    const double amps = per_element[inc.element[first + r]];
    for (const auto& [col, sign] : inc.a.row(first + r)) out[col] += sign * amps;
  }
  return out;
}

// G v_P-restricted DC solve: unknowns are the unpinned nodes, pinned nodes
// move to the right-hand side. Returns the full voltage vector.
std::vector<double> pinned_solve(const DenseSystem& sys, std::span<const std::optional<double>> pins,
                                 std::span<const double> rhs) {
  const std::size_t n = rhs.size();
  std::vector<std::size_t> free;
  std::vector<double> v(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (pins[i]) v[i] = *pins[i];
    else free.push_back(i);
  }
  if (free.empty()) return v;
  DenseMatrix gff(free.size(), free.size());
  std::vector<double> b(free.size());
  for (std::size_t a = 0; a < free.size(); ++a) {
    const std::size_t i = free[a];
    b[a] = rhs[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (pins[j]) b[a] -= sys.g(i, j) * v[j];
    }
    for (std::size_t bb = 0; bb < free.size(); ++bb) gff(a, bb) = sys.g(i, free[bb]);
  }
  Cholesky chol(gff);
  if (!chol.ok()) {
    throw CircuitError("reference DC solve: free-node conductance matrix is singular");
  }
  const auto x = chol.solve(b);
  for (std::size_t a = 0; a < free.size(); ++a) v[free[a]] = x[a];
  return v;
}

struct DenseStart {
  std::vector<double> v0;
  std::vector<double> v1;
};

DenseStart dense_initialize(const Circuit& c, const DenseSystem& sys, const IncidenceSet& inc,
                            double h, bool need_v1) {
  const std::size_t n = c.trivial_count();
  const InitialConditions ic = resolve_initial_conditions(c);
  const auto gs_vd = sys.g_s.multiply(sys.v_d);

  auto dc_rhs = [&](double t, std::span<const double> inductor_current) {
    const auto drawn = drawn_currents(c, inc, t);
    const auto lflow = inductor_outflow(c, inc, inductor_current);
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = -gs_vd[i] - drawn[i] - lflow[i];
    return rhs;
  };

  DenseStart out;
  const auto rhs0 = dc_rhs(0.0, ic.inductor_current);
  out.v0 = pinned_solve(sys, ic.pinned, rhs0);
  if (!need_v1) return out;

  auto volt = [&](NodeRef r) {
    if (r.is_trivial()) return out.v0[r.index];
    return r.is_source() ? sys.v_d[r.index] : 0.0;
  };

  // residual of G v = rhs at pinned nodes is the current taken by the capacitors
  const auto gv = sys.g.multiply(out.v0);
  std::vector<double> cap_voltage_h(c.elements.size(), 0.0);
  std::vector<double> inductor_h(c.elements.size(), 0.0);
  for (std::size_t k = 0; k < c.elements.size(); ++k) {
    const Element& e = c.elements[k];
    if (e.kind == ElementKind::inductor) {
      inductor_h[k] = ic.inductor_current[k] + h / e.value * (volt(e.a) - volt(e.b));
    } else if (e.kind == ElementKind::capacitor) {
      cap_voltage_h[k] = volt(e.a) - volt(e.b);
    }
  }
  std::vector<std::optional<double>> pins1(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!ic.pinned[i]) continue;
    const double into_caps = rhs0[i] - gv[i];
    double total = 0.0;
    for (std::size_t k : ic.pinning_caps[i]) total += c.elements[k].value;
    // every pinning capacitor sees the same dv/dt, so v_c(h) moves by h * i / C_total
    for (std::size_t k : ic.pinning_caps[i]) {
      const Element& e = c.elements[k];
      const double dv = h * into_caps / total;
      cap_voltage_h[k] += e.a == NodeRef::trivial(i) ? dv : -dv;
    }
    const std::size_t k = ic.pinning_caps[i].front();
    const Element& e = c.elements[k];
    pins1[i] = e.a == NodeRef::trivial(i) ? cap_voltage_h[k] + volt(e.b)
                                          : volt(e.a) - cap_voltage_h[k];
  }
  out.v1 = pinned_solve(sys, pins1, dc_rhs(h, inductor_h));
  return out;
}

}  // namespace

DenseSystem assemble(const Circuit& c, double h) {
  if (!(h > 0.0)) {
    throw ConfigError("time step must be positive");
  }
  const IncidenceSet inc = build_incidence(c);
  const Incidence a_g = inc.a_g();
  const Incidence a_c = inc.a_c();
  const Incidence a_l = inc.a_l();
  const auto inv_l = reciprocal(inc.inductance);

  DenseSystem sys;
  sys.step = h;
  sys.g = congruence(a_g, inc.conductance, a_g);
  sys.c = congruence(a_c, inc.capacitance, a_c);
  sys.l = congruence(a_l, inv_l, a_l);
  sys.g_s = congruence(a_g, inc.conductance, inc.a_gs());
  sys.l_s = congruence(a_l, inv_l, inc.a_ls());
  sys.a_i = inc.a_i().dense();
  sys.v_d = inc.v_d;

  const std::size_t n = c.trivial_count();
  sys.m = DenseMatrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      sys.m(i, j) = sys.c(i, j) / h + sys.g(i, j) + h * sys.l(i, j);
    }
  }
  return sys;
}

WaveformSet direct_transient(const Circuit& c, const SolveConfig& cfg) {
  const Mode mode = resolve_mode(c, cfg.mode());
  if (mode == Mode::rc_first_order && c.has_inductors()) {
    throw CircuitError("first-order RC mode cannot solve a circuit with inductors");
  }
  const double h = cfg.step();
  const std::size_t n = c.trivial_count();
  const IncidenceSet inc = build_incidence(c);
  const DenseSystem sys = assemble(c, h);

  DenseMatrix lhs = sys.m;
  if (mode == Mode::rc_first_order) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) lhs(i, j) = sys.c(i, j) / h + sys.g(i, j);
  }
  const Cholesky chol(lhs);
  if (!chol.ok()) {
    throw CircuitError("system matrix is not positive definite (pivot " +
                       std::to_string(chol.failed_at()) + ")");
  }

  const DenseStart start = dense_initialize(c, sys, inc, h, mode == Mode::rlc_second_order);

  WaveformSet ws;
  ws.node_names = c.trivial_names;
  ws.times.resize(cfg.steps() + 1);
  for (std::size_t s = 0; s <= cfg.steps(); ++s) ws.times[s] = static_cast<double>(s) * h;
  ws.values.push_back(start.v0);

  const auto gs_vd = sys.g_s.multiply(sys.v_d);
  const auto ls_vd = sys.l_s.multiply(sys.v_d);
  std::size_t first = 1;
  if (mode == Mode::rlc_second_order) {
    ws.values.push_back(start.v1);
    first = 2;
  }

  std::vector<double> rhs(n);
  for (std::size_t s = first; s <= cfg.steps(); ++s) {
    const auto& prev = ws.values[s - 1];
    const auto i_next = drawn_currents(c, inc, ws.times[s]);
    const auto cv = sys.c.multiply(prev);
    if (mode == Mode::rc_first_order) {
      // (C/h + G) v(t+h) = C/h v(t) - G_s v_d - A_i^T I(t+h)
      for (std::size_t i = 0; i < n; ++i) rhs[i] = cv[i] / h - gs_vd[i] - i_next[i];
    } else {
      // M v(t+h) = (2C/h + G) v(t) - C/h v(t-h) - h L_s v_d - A_i^T (I(t+h) - I(t))
      const auto& prev2 = ws.values[s - 2];
      const auto gv = sys.g.multiply(prev);
      const auto cv2 = sys.c.multiply(prev2);
      const auto i_now = drawn_currents(c, inc, ws.times[s - 1]);
      for (std::size_t i = 0; i < n; ++i) {
        rhs[i] = 2.0 * cv[i] / h + gv[i] - cv2[i] / h - h * ls_vd[i] - (i_next[i] - i_now[i]);
      }
    }
    ws.values.push_back(chol.solve(rhs));
  }
  return ws;
}

PdReport check_pd(const DenseSystem& sys) {
  const DenseMatrix& m = sys.m;
  const std::size_t n = m.rows();
  PdReport r;

  r.symmetric = true;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = std::abs(m(i, j) - m(j, i));
      r.max_asymmetry = std::max(r.max_asymmetry, d);
      if (m(i, j) != m(j, i)) r.symmetric = false;
    }
  }

  // equality rows are decided up to a few ulps of accumulated rounding
  constexpr double eps = std::numeric_limits<double>::epsilon();
  r.diagonally_dominant = true;
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) off += std::abs(m(i, j));
    }
    const double diag = std::abs(m(i, i));
    max_diag = std::max(max_diag, diag);
    const double slack = 64.0 * eps * (diag + off);
    if (diag + slack < off) {
      r.weak_rows.push_back(i);
      r.diagonally_dominant = false;
    } else if (diag > off + slack) {
      r.strict_rows.push_back(i);
    }
  }
  if (r.strict_rows.empty()) {
    r.diagonally_dominant = r.diagonally_dominant && n == 0;
  }

  std::vector<std::size_t> block(n, n);
  for (std::size_t root = 0; root < n; ++root) {
    if (block[root] != n) continue;
    block[root] = r.blocks;
    std::vector<std::size_t> stack{root};
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i && block[j] == n && (m(i, j) != 0.0 || m(j, i) != 0.0)) {
          block[j] = r.blocks;
          stack.push_back(j);
        }
      }
    }
    ++r.blocks;
  }
  r.irreducible = r.blocks == 1;

  const Cholesky chol(m, 1e-12 * max_diag);
  r.positive_definite = chol.ok() && n > 0;
  r.min_pivot = chol.min_pivot();
  r.failed_pivot = chol.failed_at();
  return r;
}

std::string describe(const PdReport& r) {
  std::ostringstream os;
  os << "symmetric: " << (r.symmetric ? "yes" : "no") << " (max asymmetry " << r.max_asymmetry
     << ")\n";
  os << "weakly diagonally dominant: " << (r.diagonally_dominant ? "yes" : "no") << " ("
     << r.strict_rows.size() << " strict rows, " << r.weak_rows.size() << " violating rows)\n";
  os << "irreducible: " << (r.irreducible ? "yes" : "no") << " (" << r.blocks << " block"
     << (r.blocks == 1 ? "" : "s") << ")\n";
  os << "positive definite: " << (r.positive_definite ? "yes" : "no") << " (min pivot "
     << r.min_pivot << ")\n";
  return os.str();
}

double gs_matrix_equivalence(const DenseSystem& sys, const StencilSet& stencils) {
  const std::size_t n = sys.m.rows();
  if (stencils.size() != n) {
    throw std::invalid_argument("stencil set and system matrix have different dimensions");
  }
  if (stencils.step() != sys.step) {
    throw std::invalid_argument("stencil set and system matrix use different time steps");
  }
  DenseMatrix implied(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const NodeStencil& st = stencils[i];
    implied(i, i) = st.diag;
    for (const auto* group : {&st.lower, &st.upper}) {
      for (const auto& nb : *group) implied(i, nb.node) = -st.diag * nb.weight;
    }
  }
  return (implied - sys.m).max_abs();
}

OperatingPoint operating_point(const Circuit& c, double t) {
  const std::size_t n = c.trivial_count();
  const IncidenceSet inc = build_incidence(c);
  const Incidence a_g = inc.a_g();
  const Incidence a_l = inc.a_l();
  const DenseMatrix g = congruence(a_g, inc.conductance, a_g);
  const auto gs_vd = congruence(a_g, inc.conductance, inc.a_gs()).multiply(inc.v_d);
  const auto drawn = drawn_currents(c, inc, t);
  const std::size_t nl = inc.inductors;

  // [ G    A_l^T ] [v  ]   [ -G_s v_d - A_i^T I ]
  // [ A_l  0     ] [i_l] = [ -A_ls v_d          ]
  DenseMatrix k(n + nl, n + nl);
  std::vector<double> rhs(n + nl, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) k(i, j) = g(i, j);
    rhs[i] = -gs_vd[i] - drawn[i];
  }
  const Incidence a_ls = inc.a_ls();
  for (std::size_t r = 0; r < nl; ++r) {
    for (const auto& [col, sign] : a_l.row(r)) {
      k(col, n + r) = sign;
      k(n + r, col) = sign;
    }
    for (const auto& [col, sign] : a_ls.row(r)) rhs[n + r] -= sign * inc.v_d[col];
  }
  const auto x = solve_lu(std::move(k), std::move(rhs));

  OperatingPoint op;
  op.voltages.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
  op.branch_current.assign(c.elements.size(), 0.0);
  auto volt = [&](NodeRef ref) {
    if (ref.is_trivial()) return op.voltages[ref.index];
    return ref.is_source() ? inc.v_d[ref.index] : 0.0;
  };
  const std::size_t first_l = inc.resistors + inc.capacitors;
  for (std::size_t r = 0; r < inc.element.size(); ++r) {
    const std::size_t k_el = inc.element[r];
    const Element& e = c.elements[k_el];
    switch (e.kind) {
      case ElementKind::resistor:
        op.branch_current[k_el] = (volt(e.a) - volt(e.b)) / e.value;
        break;
      case ElementKind::inductor:
        op.branch_current[k_el] = x[n + (r - first_l)];
        break;
      case ElementKind::current_source:
        op.branch_current[k_el] = e.waveform.eval(t);
        break;
      default:
        break;
    }
  }
  return op;
}

std::vector<double> kcl_residual(const Circuit& c, std::span<const double> branch_current,
                                 double t) {
  (void)t;
  std::vector<double> res(c.trivial_count(), 0.0);
  for (std::size_t k = 0; k < c.elements.size(); ++k) {
    const Element& e = c.elements[k];
    if (!e.is_branch()) continue;
    if (e.a.is_trivial()) res[e.a.index] += branch_current[k];
    if (e.b.is_trivial()) res[e.b.index] -= branch_current[k];
  }
  return res;
}

std::optional<DenseMatrix> literal_source_inductance(const IncidenceSet& inc) {
  const DenseMatrix a_l = inc.a_l().dense();    // m_l x n
  const DenseMatrix a_ls = inc.a_ls().dense();  // m_l x p
  const std::size_t ml = inc.inductors;
  if (a_l.cols() != ml) {
    return std::nullopt;
  }
  DenseMatrix out(ml, a_ls.cols());
  for (std::size_t i = 0; i < ml; ++i) {
    for (std::size_t j = 0; j < a_ls.cols(); ++j) {
      double sum = 0.0;
      for (std::size_t k = 0; k < ml; ++k) sum += a_l(i, k) / inc.inductance[k] * a_ls(k, j);
      out(i, j) = sum;
    }
  }
  return out;
}

}  // namespace pgrid::oracle
