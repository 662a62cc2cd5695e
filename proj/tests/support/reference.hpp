#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pgrid/netlist.hpp"

// Independent helpers used as test oracles. Nothing here shares code with
// the library's dense path: matrices are stamped element by element.
namespace ref {

using Matrix = std::vector<std::vector<double>>;

Matrix zeros(std::size_t rows, std::size_t cols);

// Gaussian elimination with partial pivoting.
std::vector<double> gauss_solve(Matrix a, std::vector<double> b);

std::vector<double> multiply(const Matrix& a, std::span<const double> x);

struct Stamped {
  Matrix g;                    // conductance, trivial x trivial
  Matrix c;                    // capacitance
  Matrix l;                    // inverse inductance
  std::vector<double> g_src;   // sum of g * V_src per node
  std::vector<double> l_src;   // sum of V_src / L per node
};

Stamped stamp(const pgrid::Circuit& c);

// C/h + G + h L
Matrix system_matrix(const Stamped& s, double h);

// Current drawn out of each trivial node at time t.
std::vector<double> loads(const pgrid::Circuit& c, double t);

// Backward Euler on (C/h + G) v(t+h) = C/h v(t) + g_src - I(t+h).
std::vector<std::vector<double>> rc_march(const pgrid::Circuit& c, double h, std::size_t steps,
                                          std::vector<double> v0);

// Second-order recurrence from given v0, v1.
std::vector<std::vector<double>> rlc_march(const pgrid::Circuit& c, double h, std::size_t steps,
                                           std::vector<double> v0, std::vector<double> v1);

double max_abs_diff(std::span<const double> a, std::span<const double> b);

}  // namespace ref
