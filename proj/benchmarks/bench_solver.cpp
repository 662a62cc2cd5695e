#include <benchmark/benchmark.h>

#include <vector>

#include "pgrid/config.hpp"
#include "pgrid/gridgen.hpp"
#include "pgrid/oracle.hpp"
#include "pgrid/topology.hpp"
#include "pgrid/transient.hpp"

using namespace pgrid;

namespace {

GridSpec square(std::size_t n, double l_via) {
  GridSpec g;
  g.rows = n;
  g.cols = n;
  g.l_via = l_via;
  return g;
}

SolveConfig config_for(const Circuit& c) {
  SolveOptions o;
  o.step = c.tran.step;
  o.steps = c.tran.steps();
  return SolveConfig(o);
}

void BM_Sweep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Circuit c = generate(square(n, 1e-10));
  const StencilSet s = build_stencils(c, c.tran.step);
  std::vector<double> v(s.size(), 0.0);
  std::vector<double> k(s.size(), 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(step_update(s, v, k, Relaxation::gauss_seidel()));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.size()));
}
BENCHMARK(BM_Sweep)->Arg(32)->Arg(128)->Arg(512);

void BM_Transient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Circuit c = generate(square(n, state.range(1) ? 1e-10 : 0.0));
  const SolveConfig cfg = config_for(c);
  std::size_t sweeps = 0;
  for (auto _ : state) {
    const auto r = run(c, cfg);
    sweeps = r.report.total_iterations();
    benchmark::DoNotOptimize(r.waves.values.back().data());
  }
  state.counters["sweeps"] = static_cast<double>(sweeps);
}
BENCHMARK(BM_Transient)->Args({32, 0})->Args({32, 1})->Args({128, 0})->Args({128, 1})
    ->Unit(benchmark::kMillisecond);

void BM_DirectTransient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Circuit c = generate(square(n, 1e-10));
  const SolveConfig cfg = config_for(c);
  for (auto _ : state) {
    const auto w = oracle::direct_transient(c, cfg);
    benchmark::DoNotOptimize(w.values.back().data());
  }
}
BENCHMARK(BM_DirectTransient)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
