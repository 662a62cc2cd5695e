#include "pgrid/gridgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "pgrid/error.hpp"
#include "pgrid/waveform.hpp"

namespace pgrid {

namespace {

std::string node(std::size_t r, std::size_t c) {
  return "n_" + std::to_string(r) + "_" + std::to_string(c);
}

// Boundary nodes walked clockwise from the top-left corner.
std::vector<std::pair<std::size_t, std::size_t>> perimeter(std::size_t rows, std::size_t cols) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (rows == 1 || cols == 1) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) out.emplace_back(r, c);
    return out;
  }
  for (std::size_t c = 0; c < cols; ++c) out.emplace_back(0, c);
  for (std::size_t r = 1; r < rows; ++r) out.emplace_back(r, cols - 1);
  for (std::size_t c = cols - 1; c-- > 0;) out.emplace_back(rows - 1, c);
  for (std::size_t r = rows - 1; r-- > 1;) out.emplace_back(r, 0);
  return out;
}

double unit_interval(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

void check_spec(const GridSpec& spec) {
  auto finite_positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  auto finite_nonnegative = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (spec.rows == 0 || spec.cols == 0) {
    throw ConfigError("grid needs at least one row and one column");
  }
  if (!finite_positive(spec.r_wire)) throw ConfigError("r_wire must be positive");
  if (!finite_nonnegative(spec.c_node)) throw ConfigError("c_node must be non-negative");
  if (!finite_nonnegative(spec.l_via)) throw ConfigError("l_via must be non-negative");
  if (spec.via_pitch == 0) {
    throw ConfigError("via_pitch must be at least 1, otherwise the grid has no rail tie");
  }
  if (!std::isfinite(spec.vdd)) throw ConfigError("vdd must be finite");
  if (!(spec.load_density >= 0.0 && spec.load_density <= 1.0)) {
    throw ConfigError("load_density must lie in [0, 1]");
  }
  if (!finite_nonnegative(spec.load_peak)) throw ConfigError("load_peak must be non-negative");
  if (!finite_positive(spec.step)) throw ConfigError("step must be positive");
  if (spec.steps < 2) throw ConfigError("steps must be at least 2");
}

std::string generate_netlist(const GridSpec& spec) {
  check_spec(spec);
  const std::size_t rows = spec.rows;
  const std::size_t cols = spec.cols;
  const double window = spec.step * static_cast<double>(spec.steps);

  std::ostringstream out;
  out << "* " << rows << "x" << cols << " power grid, seed " << spec.seed << '\n';
  out << "V1 vdd 0 " << format_double(spec.vdd) << '\n';

  if (spec.c_node > 0.0) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        out << "C_" << r << '_' << c << ' ' << node(r, c) << " 0 " << format_double(spec.c_node)
            << '\n';
  }

  const std::string rw = format_double(spec.r_wire);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c + 1 < cols; ++c)
      out << "RH_" << r << '_' << c << ' ' << node(r, c) << ' ' << node(r, c + 1) << ' ' << rw
          << '\n';
    if (r + 1 < rows) {
      for (std::size_t c = 0; c < cols; ++c)
        out << "RV_" << r << '_' << c << ' ' << node(r, c) << ' ' << node(r + 1, c) << ' ' << rw
            << '\n';
    }
  }

  const auto ring = perimeter(rows, cols);
  for (std::size_t k = 0; k < ring.size(); k += spec.via_pitch) {
    const auto [r, c] = ring[k];
    if (spec.l_via > 0.0) {
      out << "LV_" << r << '_' << c << " vdd " << node(r, c) << ' ' << format_double(spec.l_via)
          << '\n';
    } else {
      out << "RT_" << r << '_' << c << " vdd " << node(r, c) << ' ' << rw << '\n';
    }
  }

  std::vector<std::size_t> pool;
  for (std::size_t r = 1; r + 1 < rows; ++r)
    for (std::size_t c = 1; c + 1 < cols; ++c) pool.push_back(r * cols + c);
  if (pool.empty()) {
    for (std::size_t i = 0; i < rows * cols; ++i) pool.push_back(i);
  }
  const auto count = static_cast<std::size_t>(
      std::llround(spec.load_density * static_cast<double>(pool.size())));

  // explicit Fisher-Yates, independent of std::shuffle
  std::mt19937_64 rng(spec.seed);
  for (std::size_t i = pool.size(); i > 1; --i) {
    std::swap(pool[i - 1], pool[rng() % i]);
  }
  pool.resize(count);
  std::vector<double> scale(count);
  for (double& s : scale) s = 0.5 + 0.5 * unit_interval(rng);

  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pool[a] < pool[b]; });
  for (std::size_t i : order) {
    const std::size_t r = pool[i] / cols;
    const std::size_t c = pool[i] % cols;
    const double amps = spec.load_peak * scale[i];
    out << "IL_" << r << '_' << c << ' ' << node(r, c) << " 0 ";
    if (spec.dc_loads) {
      out << format_double(amps) << '\n';
    } else {
      out << "PWL(0 0 " << format_double(window / 4.0) << ' ' << format_double(amps) << ' '
          << format_double(window / 2.0) << " 0)\n";
    }
  }

  out << ".tran " << format_double(spec.step) << ' ' << format_double(window) << '\n';
  out << ".end\n";
  return out.str();
}

Circuit generate(const GridSpec& spec) { return parse(generate_netlist(spec)); }

}  // namespace pgrid
