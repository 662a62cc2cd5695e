#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "pgrid/config.hpp"
#include "pgrid/dense.hpp"
#include "pgrid/error.hpp"
#include "pgrid/gridgen.hpp"
#include "pgrid/netlist.hpp"
#include "pgrid/oracle.hpp"
#include "pgrid/topology.hpp"
#include "pgrid/transient.hpp"
#include "pgrid/waveform.hpp"

using namespace pgrid;

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kTol = 1e-10;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

SolveConfig config(const Circuit& c, double tol = kTol, double omega = 1.0,
                   Mode mode = Mode::automatic) {
  SolveOptions o;
  o.step = c.tran.step;
  o.steps = c.tran.steps();
  o.tol = tol;
  o.omega = omega;
  o.mode = mode;
  return SolveConfig(o);
}

// Twenty grids from 4x4 to 32x32, alternating rail ties through resistors
// and through via inductors.
std::vector<GridSpec> oracle_grids() {
  std::vector<GridSpec> out;
  for (std::size_t i = 0; i < 20; ++i) {
    GridSpec g;
    g.rows = 4 + (28 * i + 9) / 19;
    g.cols = g.rows;
    g.l_via = i % 2 == 1 ? 1e-10 : 0.0;
    g.seed = 100 + i;
    out.push_back(g);
  }
  return out;
}

// The 16x16 grid used for the sweep-level checks: low wire resistance so
// the per-step system is far from trivially dominant.
GridSpec sweep_grid() {
  GridSpec g;
  g.rows = 16;
  g.cols = 16;
  g.r_wire = 0.05;
  g.l_via = 1e-10;
  g.load_peak = 20e-3;
  g.seed = 16;
  return g;
}

Verdict oracle_equivalence() {
  const auto started = Clock::now();
  double worst = 0.0;
  double worst_rc = 0.0;
  double worst_rlc = 0.0;
  std::string where;
  for (const GridSpec& g : oracle_grids()) {
    const Circuit c = generate(g);
    const SolveConfig cfg = config(c);
    const TransientResult mf = run(c, cfg);
    const WaveformSet direct = oracle::direct_transient(c, cfg);
    const double d = max_abs_difference(mf.waves, direct);
    (g.l_via > 0.0 ? worst_rlc : worst_rc) = std::max(g.l_via > 0.0 ? worst_rlc : worst_rc, d);
    if (d > worst) {
      worst = d;
      where = std::to_string(g.rows) + "x" + std::to_string(g.cols) +
              (g.l_via > 0.0 ? " with vias" : " resistive ties");
    }
  }
  const double seconds = std::chrono::duration<double>(Clock::now() - started).count();
  return {worst < 1e-8 && seconds < 60.0,
          "max difference " + sci(worst) + " V at " + where + " (rc grids " + sci(worst_rc) +
              ", rlc grids " + sci(worst_rlc) + "), limit 1e-8; " + sci(seconds) +
              " s, limit 60 s"};
}

GridSpec random_valid_grid(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t lo, std::size_t hi) { return lo + rng() % (hi - lo + 1); };
  auto log_uniform = [&](double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo * std::pow(hi / lo, u);
  };
  GridSpec g;
  g.rows = pick(1, 12);
  g.cols = pick(1, 12);
  g.r_wire = log_uniform(1e-2, 1e2);
  g.c_node = log_uniform(1e-15, 1e-11);
  g.l_via = rng() % 2 ? log_uniform(1e-12, 1e-9) : 0.0;
  g.via_pitch = pick(1, 6);
  g.load_density = 0.5;
  g.seed = seed;
  return g;
}

Verdict positive_definiteness() {
  std::size_t checked = 0;
  std::size_t failed = 0;
  std::string first;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const Circuit c = generate(random_valid_grid(seed));
    if (!validate(c).empty()) {
      ++failed;
      if (first.empty()) first = "seed " + std::to_string(seed) + " is not a valid grid";
      continue;
    }
    for (double h : {1e-13, 1e-12, 1e-11}) {
      ++checked;
      const auto report = oracle::check_pd(oracle::assemble(c, h));
      if (!report.all_hold()) {
        ++failed;
        if (first.empty()) first = "seed " + std::to_string(seed) + ", h " + sci(h);
      }
    }
  }
  return {failed == 0, std::to_string(checked) + " systems checked, " + std::to_string(failed) +
                           " failed" + (first.empty() ? "" : " (first: " + first + ")")};
}

Verdict stencil_identity() {
  double worst = 0.0;
  for (const GridSpec& g : oracle_grids()) {
    const Circuit c = generate(g);
    const auto sys = oracle::assemble(c, g.step);
    const auto stencils = build_stencils(c, g.step);
    double diag = 0.0;
    for (std::size_t i = 0; i < sys.m.rows(); ++i) diag = std::max(diag, std::abs(sys.m(i, i)));
    worst = std::max(worst, oracle::gs_matrix_equivalence(sys, stencils) / diag);
  }
  return {worst < 1e-14, "max relative difference " + sci(worst) + ", limit 1e-14"};
}

Verdict energy_norm_monotonic() {
  const Circuit c = generate(sweep_grid());
  const SolveConfig cfg = config(c);
  const auto sys = oracle::assemble(c, cfg.step());
  const Cholesky chol(sys.m, 0.0);
  const auto stencils = build_stencils(c, cfg.step());
  const std::size_t n = stencils.size();

  // Every row of the sweep equation times its diagonal is the dense row, so
  // the exact step solution is M^-1 (d .* K).
  std::size_t current_step = 0;
  std::vector<double> exact;
  double previous = 0.0;
  double worst_rise = 0.0;
  std::size_t rises = 0;
  std::size_t sweeps = 0;

  MarchHooks hooks;
  hooks.on_sweep = [&](std::size_t step, std::size_t, std::span<const double> v,
                       std::span<const double> k) {
    if (step != current_step) {
      current_step = step;
      std::vector<double> rhs(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& st = stencils[i];
        rhs[i] = k[i] * (st.cap / cfg.step() + st.g_row_sum + cfg.step() * st.inv_l_row_sum);
      }
      exact = chol.solve(rhs);
      previous = std::numeric_limits<double>::infinity();
    }
    std::vector<double> e(n);
    for (std::size_t i = 0; i < n; ++i) e[i] = v[i] - exact[i];
    const auto me = sys.m.multiply(e);
    double energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) energy += e[i] * me[i];
    const double norm = std::sqrt(std::max(energy, 0.0));
    if (norm > previous) {
      ++rises;
      worst_rise = std::max(worst_rise, norm - previous);
    }
    previous = norm;
    ++sweeps;
  };
  run(c, cfg, hooks);
  return {rises == 0, std::to_string(sweeps) + " sweeps over " + std::to_string(cfg.steps()) +
                          " steps, " + std::to_string(rises) + " increases" + (rises ? ", largest " + sci(worst_rise) : "")};
}

Verdict sor_contract() {
  const Circuit c = generate(sweep_grid());
  std::string detail;
  bool ok = true;

  std::size_t unit_total = 0;
  for (double omega : {0.5, 1.0, 1.5, 1.9}) {
    try {
      const auto r = run(c, config(c, kTol, omega));
      if (omega == 1.0) unit_total = r.report.total_iterations();
      detail += "w=" + sci(omega) + ": " + std::to_string(r.report.total_iterations()) + " sweeps; ";
    } catch (const ConvergenceError& e) {
      ok = false;
      detail += "w=" + sci(omega) + " did not converge; ";
    }
  }

  // Replay every recorded ω = 1 sweep through the plain Gauss-Seidel update.
  const SolveConfig unit = config(c);
  const auto stencils = build_stencils(c, unit.step());
  struct Sweep {
    std::size_t step;
    std::vector<double> v;
    std::vector<double> k;
  };
  std::vector<Sweep> recorded;
  MarchHooks hooks;
  hooks.on_sweep = [&](std::size_t step, std::size_t, std::span<const double> v,
                       std::span<const double> k) {
    recorded.push_back({step, {v.begin(), v.end()}, {k.begin(), k.end()}});
  };
  const auto base = run(c, unit, hooks);
  std::size_t mismatched = 0;
  std::vector<double> shadow;
  for (std::size_t r = 0; r < recorded.size(); ++r) {
    if (r == 0 || recorded[r].step != recorded[r - 1].step) {
      shadow = base.waves.values[recorded[r].step - 1];
    }
    gauss_seidel_update(stencils, shadow, recorded[r].k);
    if (shadow != recorded[r].v) ++mismatched;
  }
  ok = ok && mismatched == 0;
  detail += std::to_string(recorded.size()) + " sweeps replayed, " + std::to_string(mismatched) +
            " not bitwise equal; ";

  double best_omega = 0.0;
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (int tenth = 11; tenth <= 19; ++tenth) {
    const double omega = tenth / 10.0;
    try {
      const std::size_t total = run(c, config(c, kTol, omega)).report.total_iterations();
      if (total < best) {
        best = total;
        best_omega = omega;
      }
    } catch (const ConvergenceError&) {
    }
  }
  const bool found = best <= unit_total;
  ok = ok && found;
  detail += "best over-relaxation w=" + sci(best_omega) + " with " +
            (best == std::numeric_limits<std::size_t>::max() ? std::string("none")
                                                             : std::to_string(best)) +
            " sweeps vs " + std::to_string(unit_total);
  return {ok, detail};
}

Circuit charging_node(double h, std::size_t steps) {
  return parse("V1 vdd 0 1\nR1 vdd n 1k\nC1 n 0 1p\n.ic V(n)=0\n.tran " + format_double(h) + " " +
               format_double(h * static_cast<double>(steps)) + "\n");
}

double charging_error(double h, std::size_t steps) {
  const Circuit c = charging_node(h, steps);
  const auto r = run(c, config(c));
  const double tau = 1e-12 / 1e-3;
  double worst = 0.0;
  for (std::size_t s = 0; s < r.waves.times.size(); ++s) {
    const double exact = 1.0 - std::exp(-r.waves.times[s] / tau);
    worst = std::max(worst, std::abs(r.waves.values[s][0] - exact));
  }
  return worst;
}

Verdict backward_euler_order() {
  const double window = 5.0 * 1e-12 / 1e-3;
  const double coarse = charging_error(window / 100.0, 100);
  const double fine = charging_error(window / 200.0, 200);
  const double ratio = coarse / fine;
  return {ratio >= 1.7 && ratio <= 2.3, "error " + sci(coarse) + " at T/100, " + sci(fine) +
                                            " at T/200, ratio " + sci(ratio) +
                                            ", accepted [1.7, 2.3]"};
}

Verdict mode_equivalence() {
  double worst = 0.0;
  std::size_t circuits = 0;
  std::string where;
  auto check = [&](const Circuit& c, const std::string& name) {
    const double d = compare_modes(c, config(c)).max_difference;
    ++circuits;
    if (d > worst || where.empty()) {
      worst = std::max(worst, d);
      where = name;
    }
  };
  check(charging_node(5e-11, 100), "single node");
  for (const GridSpec& g : oracle_grids()) {
    if (g.l_via > 0.0) continue;
    check(generate(g), std::to_string(g.rows) + "x" + std::to_string(g.cols));
  }
  return {worst < 10.0 * kTol, std::to_string(circuits) + " circuits, max difference " + sci(worst) +
                                   " V at " + where + ", limit " + sci(10.0 * kTol)};
}

Verdict damped_oscillation() {
  const double l = 1e-9;
  const double cap = 1e-12;
  const double r = 100.0;
  const double alpha = 1.0 / (2.0 * r * cap);
  const double omega_d = std::sqrt(1.0 / (l * cap) - alpha * alpha);
  const double period = 2.0 * std::numbers::pi / omega_d;
  const double h = period / 200.0;
  const std::size_t steps = 600;
  const Circuit c = parse("V1 vdd 0 1\nL1 vdd n 1n\nC1 n 0 1p\nR1 n 0 100\n.ic V(n)=0 I(L1)=0\n.tran " +
                          format_double(h) + " " + format_double(h * steps) + "\n");
  const auto res = run(c, config(c, 1e-12));

  // The inductor shorts the node to the rail at DC.
  const double settled = 1.0;
  std::vector<double> crossings;
  const auto& t = res.waves.times;
  const auto& v = res.waves.values;
  for (std::size_t s = 1; s < t.size(); ++s) {
    const double a = v[s - 1][0] - settled;
    const double b = v[s][0] - settled;
    if ((a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0)) {
      crossings.push_back(t[s - 1] + h * a / (a - b));
    }
  }
  double worst = 0.0;
  for (std::size_t k = 1; k < crossings.size(); ++k) {
    const double spacing = crossings[k] - crossings[k - 1];
    worst = std::max(worst, std::abs(spacing - period / 2.0) / (period / 2.0));
  }
  const bool enough = crossings.size() >= 4;
  return {enough && worst < 0.05,
          std::to_string(crossings.size()) + " crossings, worst half-period deviation " +
              sci(100.0 * worst) + "% of " + sci(period / 2.0) + " s, limit 5%"};
}

Circuit with_steady_state(Circuit c) {
  const auto op = oracle::operating_point(c);
  for (std::size_t i = 0; i < c.trivial_count(); ++i) c.node_ic[c.trivial_names[i]] = op.voltages[i];
  for (std::size_t e = 0; e < c.elements.size(); ++e) {
    if (c.elements[e].kind == ElementKind::inductor) {
      c.inductor_ic[c.elements[e].name] = op.branch_current[e];
    }
  }
  return c;
}

Verdict initialization_fixed_point() {
  double worst = 0.0;
  std::string detail;
  for (double l_via : {0.0, 1e-10}) {
    GridSpec g;
    g.rows = 16;
    g.cols = 16;
    g.l_via = l_via;
    g.dc_loads = true;
    g.load_density = 0.5;
    const Circuit c = with_steady_state(generate(g));
    const auto r = run(c, config(c));
    double drift = 0.0;
    for (const auto& row : r.waves.values)
      for (std::size_t i = 0; i < row.size(); ++i)
        drift = std::max(drift, std::abs(row[i] - r.waves.values[0][i]));
    worst = std::max(worst, drift);
    detail += std::string(l_via > 0.0 ? "rlc" : "rc") + " grid drift " + sci(drift) + " V; ";
  }
  return {worst < 10.0 * kTol, detail + "limit " + sci(10.0 * kTol)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"oracle equivalence", oracle_equivalence},
      {"positive definiteness", positive_definiteness},
      {"stencil/matrix identity", stencil_identity},
      {"energy-norm monotonicity", energy_norm_monotonic},
      {"relaxation contract", sor_contract},
      {"backward Euler order", backward_euler_order},
      {"mode equivalence", mode_equivalence},
      {"second-order dynamics", damped_oscillation},
      {"initialization fixed point", initialization_fixed_point},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("criterion %zu: %s  %s: %s\n", i + 1, v.pass ? "PASS" : "FAIL",
                criteria[i].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
