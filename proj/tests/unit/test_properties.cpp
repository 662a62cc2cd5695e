#include <gtest/gtest.h>

#include <cmath>

#include "pgrid/gridgen.hpp"
#include "pgrid/oracle.hpp"
#include "pgrid/topology.hpp"
#include "pgrid/transient.hpp"

using namespace pgrid;

namespace {

GridSpec random_spec(std::uint64_t seed) {
  GridSpec spec;
  spec.seed = seed;
  spec.rows = 1 + seed % 9;
  spec.cols = 1 + (seed * 5) % 11;
  spec.via_pitch = 1 + seed % 6;
  spec.r_wire = 0.05 * static_cast<double>(1 + seed % 13);
  spec.c_node = 1e-13 * static_cast<double>(1 + seed % 17);
  spec.l_via = seed % 2 ? 1e-11 * static_cast<double>(1 + seed % 19) : 0.0;
  spec.load_density = 0.1 * static_cast<double>(seed % 11);
  return spec;
}

}  // namespace

TEST(Properties, GeneratedGridsArePositiveDefinite) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const Circuit c = generate(random_spec(seed));
    ASSERT_TRUE(validate(c).empty());
    for (double h : {1e-13, 1e-12, 1e-11}) {
      const auto sys = oracle::assemble(c, h);
      const auto report = oracle::check_pd(sys);
      EXPECT_TRUE(report.all_hold()) << "seed " << seed << " h " << h << '\n'
                                     << oracle::describe(report);
      for (std::size_t i = 0; i < sys.m.rows(); ++i) EXPECT_GT(sys.m(i, i), 0.0);
    }
  }
}

TEST(Properties, StencilsMatchMatrixForAnyStep) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const Circuit c = generate(random_spec(seed));
    StencilSet s = build_stencils(c, 1e-12);
    for (double h : {1e-13, 7e-13, 1e-11}) {
      s.set_step(h);
      const auto sys = oracle::assemble(c, h);
      double diag = 0.0;
      for (std::size_t i = 0; i < sys.m.rows(); ++i) diag = std::max(diag, sys.m(i, i));
      EXPECT_LT(oracle::gs_matrix_equivalence(sys, s), 1e-14 * diag) << "seed " << seed;
    }
  }
}

TEST(Properties, RoundTripThroughText) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const Circuit c = generate(random_spec(seed));
    EXPECT_EQ(parse(serialize(c)), c);
  }
}

TEST(Properties, MatrixFreeMatchesDirectOnSmallGrids) {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    GridSpec spec = random_spec(seed);
    spec.steps = 30;
    const Circuit c = generate(spec);
    SolveOptions o;
    o.step = spec.step;
    o.steps = spec.steps;
    o.tol = 1e-13;
    const SolveConfig cfg(o);
    const auto mf = run(c, cfg);
    const auto direct = oracle::direct_transient(c, cfg);
    EXPECT_LT(max_abs_difference(mf.waves, direct), 1e-9) << "seed " << seed;
  }
}
