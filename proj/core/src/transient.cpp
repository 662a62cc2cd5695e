#include "pgrid/transient.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <numeric>

#include "pgrid/dc.hpp"
#include "pgrid/error.hpp"

namespace pgrid {

std::size_t SolveReport::total_iterations() const {
  return std::accumulate(iterations.begin(), iterations.end(), std::size_t{0});
}

Mode resolve_mode(const Circuit& c, Mode requested) {
  if (requested != Mode::automatic) {
    return requested;
  }
  return c.has_inductors() ? Mode::rlc_second_order : Mode::rc_first_order;
}

double step_update(const StencilSet& s, std::span<double> v, std::span<const double> k,
                   Relaxation omega) {
  const double w = omega.value();
  double delta = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const NodeStencil& st = s[i];
    double target = k[i];
    for (const auto& nb : st.lower) target += nb.weight * v[nb.node];  // already updated
    for (const auto& nb : st.upper) target += nb.weight * v[nb.node];  // previous sweep
    const double updated = w * target + (1.0 - w) * v[i];
    delta = std::max(delta, std::abs(updated - v[i]));
    v[i] = updated;
  }
  return delta;
}

double gauss_seidel_update(const StencilSet& s, std::span<double> v, std::span<const double> k) {
  double delta = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const NodeStencil& st = s[i];
    double target = k[i];
    for (const auto& nb : st.lower) target += nb.weight * v[nb.node];
    for (const auto& nb : st.upper) target += nb.weight * v[nb.node];
    delta = std::max(delta, std::abs(target - v[i]));
    v[i] = target;
  }
  return delta;
}

namespace {

using Clock = std::chrono::steady_clock;

struct InnerResult {
  std::size_t sweeps = 0;
  double delta = 0.0;
};

InnerResult inner_solve(const StencilSet& s, const SolveConfig& cfg, std::size_t step,
                        std::span<double> v, std::span<const double> k, const MarchHooks& hooks) {
  InnerResult r;
  do {
    r.delta = step_update(s, v, k, cfg.omega());
    ++r.sweeps;
    if (hooks.on_sweep) hooks.on_sweep(step, r.sweeps, v, k);
  } while (r.delta >= cfg.tol() && r.sweeps < cfg.max_inner());
  if (r.delta >= cfg.tol()) {
    throw ConvergenceError(step, r.sweeps, r.delta, "transient inner loop");
  }
  return r;
}

}  // namespace

TransientResult march(const StencilSet& s, const SolveConfig& cfg, Mode mode,
                      std::vector<double> v0, std::optional<std::vector<double>> v1,
                      const MarchHooks& hooks) {
  const auto started = Clock::now();
  const std::size_t n = s.size();
  const double h = s.step();
  if (h != cfg.step()) {
    throw ConfigError("stencils were built for a different time step");
  }
  if (mode == Mode::automatic) {
    mode = s.has_inductors() ? Mode::rlc_second_order : Mode::rc_first_order;
  }
  if (v0.size() != n || (v1 && v1->size() != n)) {
    throw std::invalid_argument("initial voltage vectors must have one entry per trivial node");
  }
  if (mode == Mode::rlc_second_order && !v1) {
    throw std::invalid_argument("second-order recurrence needs V(1)");
  }

  TransientResult out;
  WaveformSet& ws = out.waves;
  SolveReport& rep = out.report;
  rep.mode = mode;
  ws.node_names.assign(s.node_names().begin(), s.node_names().end());
  ws.times.resize(cfg.steps() + 1);
  for (std::size_t step = 0; step <= cfg.steps(); ++step) {
    ws.times[step] = static_cast<double>(step) * h;
  }
  ws.values.reserve(cfg.steps() + 1);
  rep.iterations.reserve(cfg.steps() + 1);
  rep.residuals.reserve(cfg.steps() + 1);

  rep.v0 = v0;
  ws.values.push_back(std::move(v0));
  rep.iterations.push_back(1);
  rep.residuals.push_back(0.0);

  std::size_t first = 1;
  if (mode == Mode::rlc_second_order) {
    rep.v1 = *v1;
    ws.values.push_back(std::move(*v1));
    rep.iterations.push_back(1);
    rep.residuals.push_back(0.0);
    first = 2;
  }

  std::vector<double> k(n);
  std::vector<double> i_next(n);
  std::vector<double> i_now(n);
  for (std::size_t step = first; step <= cfg.steps(); ++step) {
    const double t_next = ws.times[step];
    const auto& prev = ws.values[step - 1];
    s.node_currents(t_next, i_next);
    if (mode == Mode::rc_first_order) {
      for (std::size_t i = 0; i < n; ++i) {
        k[i] = rc_rhs_constant(s, i, prev, i_next[i]);
      }
    } else {
      const auto& prev2 = ws.values[step - 2];
      s.node_currents(ws.times[step - 1], i_now);
      for (std::size_t i = 0; i < n; ++i) {
        k[i] = rhs_constant(s, i, prev, prev2, i_next[i], i_now[i]);
      }
    }
    std::vector<double> v = hooks.cold_start ? std::vector<double>(n, 0.0) : prev;
    const InnerResult r = inner_solve(s, cfg, step, v, k, hooks);
    rep.iterations.push_back(r.sweeps);
    rep.residuals.push_back(r.delta);
    ws.values.push_back(std::move(v));
  }
  rep.wall_seconds = std::chrono::duration<double>(Clock::now() - started).count();
  return out;
}

TransientResult run_rc(const Circuit& c, const SolveConfig& cfg, const MarchHooks& hooks) {
  const auto started = Clock::now();
  if (c.has_inductors()) {
    throw CircuitError("first-order RC mode cannot solve a circuit with inductors");
  }
  const StencilSet s = build_stencils(c, cfg.step());
  DcResult dc = initial_operating_point(c, cfg);
  TransientResult r = march(s, cfg, Mode::rc_first_order, std::move(dc.voltages), std::nullopt, hooks);
  r.report.iterations[0] = dc.iterations;
  r.report.residuals[0] = dc.last_update;
  r.report.wall_seconds = std::chrono::duration<double>(Clock::now() - started).count();
  return r;
}

TransientResult run_rlc(const Circuit& c, const SolveConfig& cfg, const MarchHooks& hooks) {
  const auto started = Clock::now();
  const StencilSet s = build_stencils(c, cfg.step());
  if (s.has_coupling_capacitors()) {
    throw CircuitError(
        "second-order mode supports only capacitors to ground or a source; "
        "use RC mode for capacitors between trivial nodes");
  }
  InitState init = initialize(c, cfg.step(), cfg);
  TransientResult r =
      march(s, cfg, Mode::rlc_second_order, std::move(init.v0), std::move(init.v1), hooks);
  r.report.iterations[0] = init.iterations0;
  r.report.iterations[1] = init.iterations1;
  r.report.wall_seconds = std::chrono::duration<double>(Clock::now() - started).count();
  return r;
}

TransientResult run(const Circuit& c, const SolveConfig& cfg, const MarchHooks& hooks) {
  return resolve_mode(c, cfg.mode()) == Mode::rc_first_order ? run_rc(c, cfg, hooks)
                                                             : run_rlc(c, cfg, hooks);
}

ModeComparison compare_modes(const Circuit& c, const SolveConfig& cfg) {
  if (c.has_inductors()) {
    throw CircuitError("mode comparison needs an inductor-free circuit");
  }
  ModeComparison out;
  out.first_order = run_rc(c, cfg);
  const auto& values = out.first_order.waves.values;
  const StencilSet s = build_stencils(c, cfg.step());
  out.second_order = march(s, cfg, Mode::rlc_second_order, values[0], values[1]);
  out.max_difference = max_abs_difference(out.first_order.waves, out.second_order.waves);
  return out;
}

CircuitResult run_circuit(const Circuit& c, const SolveConfig& cfg) {
  Decomposition parts = decompose(c);
  if (parts.components.empty()) {
    throw CircuitError("circuit has no trivial nodes to solve");
  }

  std::vector<std::future<TransientResult>> pending;
  pending.reserve(parts.components.size());
  for (const auto& comp : parts.components) {
    pending.push_back(std::async(std::launch::async,
                                 [&comp, &cfg] { return run(comp.circuit, cfg); }));
  }
  std::vector<TransientResult> solved;
  solved.reserve(pending.size());
  for (auto& f : pending) {
    solved.push_back(f.get());
  }

  CircuitResult out;
  out.warnings = std::move(parts.warnings);
  out.waves.node_names = c.trivial_names;
  out.waves.times = solved.front().waves.times;
  out.waves.values.assign(out.waves.times.size(), std::vector<double>(c.trivial_count(), 0.0));
  for (std::size_t p = 0; p < solved.size(); ++p) {
    const auto& map = parts.components[p].trivial_map;
    const auto& vals = solved[p].waves.values;
    for (std::size_t step = 0; step < vals.size(); ++step) {
      for (std::size_t local = 0; local < map.size(); ++local) {
        out.waves.values[step][map[local]] = vals[step][local];
      }
    }
    out.reports.push_back(std::move(solved[p].report));
  }
  return out;
}

}  // namespace pgrid
