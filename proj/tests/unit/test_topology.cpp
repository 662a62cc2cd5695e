#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pgrid/error.hpp"
#include "pgrid/gridgen.hpp"
#include "pgrid/netlist.hpp"
#include "pgrid/topology.hpp"
#include "reference.hpp"

using namespace pgrid;

namespace {

const char* kRcNode = "V1 vdd 0 1\nR1 vdd n 1\nC1 n 0 1e-12\n.tran 1e-12 1e-11\n";

std::vector<Circuit> sample_grids() {
  std::vector<Circuit> out;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    GridSpec spec;
    spec.rows = 3 + seed % 3;
    spec.cols = 2 + seed % 4;
    spec.seed = seed;
    spec.l_via = seed % 2 ? 2e-10 : 0.0;
    spec.r_wire = 0.3 * static_cast<double>(seed);
    out.push_back(generate(spec));
  }
  // coupling capacitor and parallel elements
  out.push_back(parse(
      "V1 vdd 0 1.1\nR1 vdd a 2\nR2 a b 1\nR3 a b 3\nC1 a b 2p\nC2 b 0 1p\nC3 a 0 1p\n"
      "I1 b 0 PWL(0 0 5p 1m)\n.tran 1p 20p\n"));
  return out;
}

double max_abs_entry(const ref::Matrix& m) {
  double v = 0.0;
  for (const auto& row : m)
    for (double x : row) v = std::max(v, std::abs(x));
  return v;
}

}  // namespace

TEST(Stencil, SingleRcNode) {
  const StencilSet s = build_stencils(parse(kRcNode), 1e-12);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s[0].diag, 2.0);
  EXPECT_EQ(s[0].g_row_sum, 1.0);
  EXPECT_TRUE(s[0].lower.empty());
  EXPECT_TRUE(s[0].upper.empty());
  EXPECT_EQ(s[0].src_inject, 0.0);
  ASSERT_EQ(s[0].sources.size(), 1u);
  EXPECT_EQ(s[0].sources[0].conductance, 1.0);
  EXPECT_EQ(s[0].sources[0].volts, 1.0);
}

TEST(Stencil, InductorToRail) {
  const StencilSet s =
      build_stencils(parse("V1 vdd 0 1.2\nL1 vdd n 1e-9\n.tran 1e-12 1e-11\n"), 1e-12);
  EXPECT_DOUBLE_EQ(s[0].diag, 1e-3);
  EXPECT_DOUBLE_EQ(s[0].src_inject, 1e-3 * 1.2);
  EXPECT_TRUE(s.has_inductors());
}

TEST(Stencil, ParallelResistorsMerge) {
  const StencilSet s = build_stencils(
      parse("V1 vdd 0 1\nR1 n1 n2 2\nR2 n1 n2 2\nR3 vdd n1 1\nC1 n2 0 1p\n.tran 1p 2p\n"), 1e-12);
  ASSERT_EQ(s[0].upper.size(), 1u);
  EXPECT_EQ(s[0].upper[0].node, 1u);
  EXPECT_EQ(s[0].upper[0].conductance, 1.0);
  ASSERT_EQ(s[1].lower.size(), 1u);
  EXPECT_EQ(s[1].lower[0].conductance, 1.0);
}

TEST(Stencil, LowerAndUpperSplitByIndex) {
  const Circuit c = generate(GridSpec{});
  const StencilSet s = build_stencils(c, 1e-12);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (const auto& nb : s[i].lower) EXPECT_LT(nb.node, i);
    for (const auto& nb : s[i].upper) EXPECT_GT(nb.node, i);
  }
}

TEST(Stencil, MatchesStampedMatrix) {
  for (const Circuit& c : sample_grids()) {
    for (double h : {1e-13, 1e-12, 1e-11}) {
      const StencilSet s = build_stencils(c, h);
      const ref::Matrix m = ref::system_matrix(ref::stamp(c), h);
      const double scale = max_abs_entry(m);
      for (std::size_t i = 0; i < s.size(); ++i) {
        ref::Matrix::value_type row(s.size(), 0.0);
        row[i] = s[i].diag;
        for (const auto* g : {&s[i].lower, &s[i].upper})
          for (const auto& nb : *g) row[nb.node] = -s[i].diag * nb.weight;
        for (std::size_t j = 0; j < s.size(); ++j)
          EXPECT_LE(std::abs(row[j] - m[i][j]), 1e-14 * scale) << "row " << i << " col " << j;
      }
    }
  }
}

TEST(Stencil, WeightSymmetryAndRowSums) {
  for (const Circuit& c : sample_grids()) {
    const StencilSet s = build_stencils(c, 1e-12);
    for (std::size_t i = 0; i < s.size(); ++i) {
      double weight_sum = 0.0;
      for (const auto* g : {&s[i].lower, &s[i].upper}) {
        for (const auto& nb : *g) {
          weight_sum += nb.weight;
          const auto& back = nb.node < i ? s[nb.node].upper : s[nb.node].lower;
          const auto it = std::find_if(back.begin(), back.end(),
                                       [&](const NeighborCoupling& x) { return x.node == i; });
          ASSERT_NE(it, back.end());
          EXPECT_EQ(it->conductance, nb.conductance);
          EXPECT_EQ(it->inv_inductance, nb.inv_inductance);
          EXPECT_NEAR(s[i].diag * nb.weight, s[nb.node].diag * it->weight,
                      1e-15 * s[i].diag);
        }
      }
      EXPECT_LE(weight_sum, 1.0 + 1e-15);
      const bool anchored = !s[i].sources.empty() || s[i].cap > 0.0;
      if (anchored) EXPECT_LT(weight_sum, 1.0);
    }
  }
}

TEST(Stencil, SetStepRecomputes) {
  const Circuit c = sample_grids()[1];
  StencilSet s = build_stencils(c, 1e-12);
  s.set_step(3e-12);
  const StencilSet fresh = build_stencils(c, 3e-12);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(s[i].diag, fresh[i].diag);
    EXPECT_EQ(s[i].src_inject, fresh[i].src_inject);
  }
  EXPECT_THROW(s.set_step(0.0), std::exception);
}

TEST(Stencil, NodeCurrentsUseLoadConvention) {
  const StencilSet s = build_stencils(
      parse("V1 vdd 0 1\nR1 vdd a 1\nR2 a b 1\nC1 b 0 1p\nI1 a b 2m\nI2 b 0 PWL(0 0 1n 1m)\n"
            ".tran 1p 2p\n"),
      1e-12);
  std::vector<double> i(2);
  s.node_currents(0.5e-9, i);
  EXPECT_DOUBLE_EQ(i[0], 2e-3);
  EXPECT_DOUBLE_EQ(i[1], -2e-3 + 0.5e-3);
}

TEST(RhsConstant, ZeroHistoryIsZero) {
  const StencilSet s = build_stencils(parse("V1 vdd 0 1\nR1 n 0 1\nC1 n 0 1p\nR2 n m 1\n"
                                            "R3 m vdd 1\n.tran 1p 2p\n"),
                                      1e-12);
  std::vector<double> z(2, 0.0);
  EXPECT_EQ(rhs_constant(s, 0, z, z, 0.0, 0.0), 0.0);
}

TEST(RhsConstant, SteadyRcNodeIsFixedPoint) {
  const StencilSet s = build_stencils(parse(kRcNode), 1e-12);
  const std::vector<double> one{1.0};
  // (2C/h + g) * 1 - (C/h) * 1 over d = 2, the resistor to the rail cancels
  EXPECT_DOUBLE_EQ(rhs_constant(s, 0, one, one, 0.0, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(rc_rhs_constant(s, 0, one, 0.0), 1.0);
}

TEST(RhsConstant, CurrentStep) {
  const StencilSet s = build_stencils(parse(kRcNode), 1e-12);
  const std::vector<double> z{0.0};
  EXPECT_DOUBLE_EQ(rhs_constant(s, 0, z, z, 1e-3, 0.0), -1e-3 / 2.0);
}

TEST(RhsConstant, MatchesStampedRightHandSide) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (const Circuit& c : sample_grids()) {
    const double h = 1e-12;
    const StencilSet s = build_stencils(c, h);
    const ref::Stamped st = ref::stamp(c);
    const std::size_t n = c.trivial_count();
    std::vector<double> v(n), vp(n);
    for (auto& x : v) x = u(rng);
    for (auto& x : vp) x = u(rng);
    const auto now = ref::loads(c, 4 * h);
    const auto next = ref::loads(c, 5 * h);
    const auto cv = ref::multiply(st.c, v);
    const auto gv = ref::multiply(st.g, v);
    const auto cvp = ref::multiply(st.c, vp);
    for (std::size_t i = 0; i < n; ++i) {
      const double k2 = rhs_constant(s, i, v, vp, next[i], now[i]);
      const double rhs2 =
          2.0 * cv[i] / h + gv[i] - cvp[i] / h + h * st.l_src[i] - (next[i] - now[i]);
      EXPECT_NEAR(k2 * s[i].diag, rhs2, 1e-12 * (std::abs(rhs2) + s[i].diag));
      if (!c.has_inductors()) {
        const double k1 = rc_rhs_constant(s, i, v, next[i]);
        const double rhs1 = cv[i] / h + st.g_src[i] - next[i];
        EXPECT_NEAR(k1 * s[i].diag, rhs1, 1e-12 * (std::abs(rhs1) + s[i].diag));
      }
    }
  }
}

TEST(Stencil, ZeroDiagonalIsReported) {
  // only a load: the node has no passive branch at all
  const Circuit c = parse("V1 vdd 0 1\nR1 vdd a 1\nI1 b 0 1m\nR2 a 0 1\n.tran 1p 2p\n");
  EXPECT_THROW(build_stencils(c, 1e-12), CircuitError);
}
