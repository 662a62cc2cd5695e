#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pgrid/config.hpp"
#include "pgrid/dense.hpp"
#include "pgrid/netlist.hpp"
#include "pgrid/topology.hpp"
#include "pgrid/waveform.hpp"

// Dense reference formulation. Slow on purpose: every matrix is built from
// incidence products so the matrix-free path can be checked against it.
namespace pgrid::oracle {

/// Incidence matrix with at most two {-1, +1} entries per row, stored by row.
class Incidence {
 public:
  Incidence() = default;
  explicit Incidence(std::size_t cols) : cols_(cols) {}

  using Entry = std::pair<std::size_t, int>;

  void add_row(std::vector<Entry> entries) { rows_.push_back(std::move(entries)); }

  std::size_t rows() const noexcept { return rows_.size(); }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const Entry> row(std::size_t r) const { return rows_[r]; }

  DenseMatrix dense() const;
  // Selects rows [first, first + count).
  Incidence slice(std::size_t first, std::size_t count) const;

 private:
  std::size_t cols_ = 0;
  std::vector<std::vector<Entry>> rows_;
};

/// left^T * diag(weights) * right, exploiting the row sparsity.
DenseMatrix congruence(const Incidence& left, std::span<const double> weights,
                       const Incidence& right);

/// Branch rows grouped resistors, capacitors, inductors, current sources.
struct IncidenceSet {
  Incidence a;         // m x n over trivial nodes
  Incidence a_s;       // m x p over source nodes
  std::size_t resistors = 0;
  std::size_t capacitors = 0;
  std::size_t inductors = 0;
  std::size_t current_sources = 0;
  std::vector<std::size_t> element;  // element index of each row
  std::vector<double> conductance;   // diag of the G-script matrix
  std::vector<double> capacitance;
  std::vector<double> inductance;
  std::vector<double> v_d;           // source voltages

  Incidence a_g() const { return a.slice(0, resistors); }
  Incidence a_c() const { return a.slice(resistors, capacitors); }
  Incidence a_l() const { return a.slice(resistors + capacitors, inductors); }
  Incidence a_i() const { return a.slice(resistors + capacitors + inductors, current_sources); }
  Incidence a_gs() const { return a_s.slice(0, resistors); }
  Incidence a_ls() const { return a_s.slice(resistors + capacitors, inductors); }
};

IncidenceSet build_incidence(const Circuit& c);

struct DenseSystem {
  double step = 0.0;
  DenseMatrix g;    // A_g^T G A_g
  DenseMatrix c;    // A_c^T C A_c
  DenseMatrix l;    // A_l^T L^-1 A_l
  DenseMatrix g_s;  // A_g^T G A_gs
  DenseMatrix l_s;  // A_l^T L^-1 A_ls
  DenseMatrix m;    // C/h + G + h L
  DenseMatrix a_i;  // current-source incidence, dense
  std::vector<double> v_d;
};

DenseSystem assemble(const Circuit& c, double h);

/// Reference transient waveforms from dense Cholesky solves of the same
/// recurrences (first order in RC mode, second order in RLC mode). The
/// start-up runs the three-step procedure with dense pinned solves.
WaveformSet direct_transient(const Circuit& c, const SolveConfig& cfg);

struct PdReport {
  bool symmetric = false;
  double max_asymmetry = 0.0;
  bool diagonally_dominant = false;
  std::vector<std::size_t> weak_rows;    // rows violating dominance
  std::vector<std::size_t> strict_rows;  // rows with strict dominance
  bool irreducible = false;
  std::size_t blocks = 0;  // connected blocks of the off-diagonal pattern
  bool positive_definite = false;
  double min_pivot = 0.0;
  std::size_t failed_pivot = 0;

  bool all_hold() const {
    return symmetric && diagonally_dominant && irreducible && positive_definite;
  }
};

PdReport check_pd(const DenseSystem& sys);
std::string describe(const PdReport& r);

/// Largest |entry| of (stencil-implied matrix - M).
double gs_matrix_equivalence(const DenseSystem& sys, const StencilSet& stencils);

/// Direct DC operating point with capacitors open and inductors shorted.
/// `branch_current` is indexed by element (a to b), zero for V elements.
struct OperatingPoint {
  std::vector<double> voltages;
  std::vector<double> branch_current;
};

OperatingPoint operating_point(const Circuit& c, double t = 0.0);

/// KCL residual A^T i_b at every trivial node for the given branch currents.
std::vector<double> kcl_residual(const Circuit& c, std::span<const double> branch_current,
                                 double t = 0.0);

/// The literal product A_l * L^-1 * A_ls, which only conforms when the
/// inductor count equals the trivial-node count. Returns nullopt otherwise.
std::optional<DenseMatrix> literal_source_inductance(const IncidenceSet& inc);

}  // namespace pgrid::oracle
