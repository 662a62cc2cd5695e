#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

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

constexpr int exit_ok = 0;
constexpr int exit_input = 1;
constexpr int exit_numeric = 2;

// Thrown for failures that map to exit code 2.
struct NumericFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolveFlags {
  std::optional<double> tol;
  std::optional<double> omega;
  std::optional<double> step;
  std::optional<std::size_t> steps;
  std::string mode = "auto";
  std::size_t max_inner = 100000;
};

void add_solve_flags(CLI::App& cmd, SolveFlags& f) {
  cmd.add_option("--tol", f.tol, "inner-loop tolerance on the largest node update (V)");
  cmd.add_option("--omega", f.omega, "SOR relaxation factor in (0, 2)");
  cmd.add_option("--step", f.step, "time step h (s), overrides .tran");
  cmd.add_option("--steps", f.steps, "number of steps, overrides .tran");
  cmd.add_option("--mode", f.mode, "recurrence: rc, rlc or auto")
      ->check(CLI::IsMember({"rc", "rlc", "auto"}));
  cmd.add_option("--max-inner", f.max_inner, "sweep cap per time step");
}

// Flag-only checks that must fail before any file is read.
void precheck(const SolveFlags& f) {
  if (f.omega) (void)Relaxation(*f.omega);
  if (f.tol && !(*f.tol > 0.0)) throw ConfigError("tolerance must be positive");
  if (f.step && !(*f.step > 0.0)) throw ConfigError("time step must be positive");
}

SolveConfig make_config(const Circuit& c, const SolveFlags& f) {
  SolveOptions o;
  o.step = f.step.value_or(c.tran.step);
  o.steps = f.steps ? *f.steps : static_cast<std::size_t>(c.tran.steps());
  if (f.step && !f.steps) {
    o.steps = static_cast<std::size_t>(std::llround(c.tran.stop / o.step));
  }
  if (f.tol) o.tol = *f.tol;
  if (f.omega) o.omega = *f.omega;
  o.max_inner = f.max_inner;
  o.mode = *parse_mode(f.mode);
  return SolveConfig(o);
}

Circuit load_valid(const std::string& path) {
  Circuit c = parse_file(path);
  const auto violations = validate(c);
  if (!violations.empty()) {
    std::string msg = std::to_string(violations.size()) + " assumption violation" +
                      (violations.size() == 1 ? "" : "s") + ":";
    for (const auto& v : violations) msg += "\n  " + describe(v);
    throw CircuitError(msg);
  }
  return c;
}

int cmd_run(const std::string& input, const std::string& out_path, const SolveFlags& flags,
            bool verbose) {
  const Circuit c = load_valid(input);
  const SolveConfig cfg = make_config(c, flags);
  const CircuitResult r = run_circuit(c, cfg);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';

  if (out_path.empty() || out_path == "-") {
    write_csv(r.waves, std::cout);
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open " + out_path + " for writing");
    write_csv(r.waves, out);
  }

  std::cerr << "components: " << r.reports.size() << ", steps: " << cfg.steps()
            << ", h: " << format_double(cfg.step()) << '\n';
  for (std::size_t p = 0; p < r.reports.size(); ++p) {
    const SolveReport& rep = r.reports[p];
    std::cerr << "component " << p << ": mode " << to_string(rep.mode) << ", sweeps "
              << rep.total_iterations() << ", time " << rep.wall_seconds << " s\n";
    if (verbose) {
      for (std::size_t s = 0; s < rep.iterations.size(); ++s)
        std::cerr << "  step " << s << ": " << rep.iterations[s] << " sweeps\n";
    }
  }
  return exit_ok;
}

int cmd_check(const std::string& input, bool dense, std::optional<double> step) {
  const Circuit c = parse_file(input);
  const auto violations = validate(c);
  for (int a = 1; a <= 3; ++a) {
    std::size_t count = 0;
    for (const auto& v : violations) count += static_cast<int>(v.assumption) == a;
    std::cout << "assumption " << a << ": " << (count == 0 ? "holds" : "violated") << '\n';
  }
  for (const auto& v : violations) std::cout << "  " << describe(v) << '\n';
  if (!violations.empty()) return exit_input;

  const Decomposition parts = decompose(c);
  std::cout << parts.components.size() << " component" << (parts.components.size() == 1 ? "" : "s")
            << '\n';
  for (const auto& w : parts.warnings) std::cout << "warning: " << w << '\n';
  int code = exit_ok;
  if (dense) {
    const double h = step.value_or(c.tran.step);
    for (std::size_t p = 0; p < parts.components.size(); ++p) {
      const auto sys = oracle::assemble(parts.components[p].circuit, h);
      const auto report = oracle::check_pd(sys);
      std::cout << "component " << p << " (" << sys.m.rows() << " nodes):\n"
                << oracle::describe(report);
      if (!report.all_hold()) code = exit_numeric;
    }
  }
  return code;
}

struct CompareFlags {
  double max_diff = 1e-8;
  std::size_t max_nodes = 2000;
  bool literal_ls = false;
  std::string dump_matrix;
};

int cmd_compare(const std::string& input, const SolveFlags& flags, const CompareFlags& cf,
                bool verbose) {
  const Circuit c = load_valid(input);
  if (c.trivial_count() > cf.max_nodes) {
    throw ConfigError("circuit has " + std::to_string(c.trivial_count()) +
                      " trivial nodes, above the dense limit of " + std::to_string(cf.max_nodes));
  }
  const SolveConfig cfg = make_config(c, flags);
  const Decomposition parts = decompose(c);
  double worst = 0.0;
  for (std::size_t p = 0; p < parts.components.size(); ++p) {
    const Circuit& part = parts.components[p].circuit;
    const TransientResult mf = run(part, cfg);
    const WaveformSet direct = oracle::direct_transient(part, cfg);
    const double diff = max_abs_difference(mf.waves, direct);
    worst = std::max(worst, diff);

    const auto sys = oracle::assemble(part, cfg.step());
    const auto stencils = build_stencils(part, cfg.step());
    double diag = 0.0;
    for (std::size_t i = 0; i < sys.m.rows(); ++i) diag = std::max(diag, std::abs(sys.m(i, i)));
    const double identity = oracle::gs_matrix_equivalence(sys, stencils) / diag;

    std::cout << "component " << p << " (" << part.trivial_count() << " nodes, "
              << to_string(mf.report.mode) << ")\n";
    std::cout << "  max waveform difference: " << format_double(diff) << " V\n";
    std::cout << "  stencil/matrix difference (relative): " << format_double(identity) << '\n';
    std::cout << "  total sweeps: " << mf.report.total_iterations() << '\n';
    if (verbose) {
      std::cout << "  sweeps per step:";
      for (auto it : mf.report.iterations) std::cout << ' ' << it;
      std::cout << '\n';
    }
    if (!part.has_inductors()) {
      const ModeComparison mc = compare_modes(part, cfg);
      std::cout << "  rc vs rlc recurrence difference: " << format_double(mc.max_difference)
                << " V\n";
    }
    if (cf.literal_ls) {
      const auto inc = oracle::build_incidence(part);
      const auto literal = oracle::literal_source_inductance(inc);
      if (!literal) {
        std::cout << "  literal A_l L^-1 A_ls: does not conform (" << inc.inductors
                  << " inductors, " << part.trivial_count() << " nodes)\n";
      } else {
        std::cout << "  literal A_l L^-1 A_ls is " << literal->rows() << "x" << literal->cols()
                  << ", differs from A_l^T L^-1 A_ls by "
                  << format_double((*literal - sys.l_s).max_abs()) << '\n';
      }
    }
    if (!cf.dump_matrix.empty()) {
      const std::string path =
          parts.components.size() == 1 ? cf.dump_matrix : cf.dump_matrix + "." + std::to_string(p);
      std::ofstream out(path);
      if (!out) throw std::runtime_error("cannot open " + path + " for writing");
      write_matrix_market(sys.m, out);
    }
  }
  std::cout << "max difference: " << format_double(worst) << " V (limit "
            << format_double(cf.max_diff) << ")\n";
  if (!(worst < cf.max_diff)) {
    throw NumericFailure("waveform difference " + format_double(worst) + " exceeds " +
                         format_double(cf.max_diff));
  }
  return exit_ok;
}

int cmd_gen(const GridSpec& spec, const std::string& out_path) {
  const std::string text = generate_netlist(spec);
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open " + out_path + " for writing");
    out << text;
  }
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matrix-free transient analysis of RC/RLC power grids"};
  app.require_subcommand(1);
  bool verbose = false;

  std::string input;
  std::string out_path;
  SolveFlags solve;

  auto* run = app.add_subcommand("run", "simulate a netlist and write node voltages as CSV");
  run->add_option("netlist", input, "netlist file")->required();
  run->add_option("-o,--out", out_path, "CSV output path (default: stdout)");
  add_solve_flags(*run, solve);
  run->add_flag("-v,--verbose", verbose, "per-step iteration counts");

  bool dense = false;
  std::optional<double> check_step;
  auto* check = app.add_subcommand("check", "report assumption verdicts and components");
  check->add_option("netlist", input, "netlist file")->required();
  check->add_flag("--dense", dense, "also assemble M and report the positive-definiteness checks");
  check->add_option("--step", check_step, "time step for --dense (default: .tran step)");

  CompareFlags cf;
  auto* compare = app.add_subcommand("compare", "check the matrix-free solver against dense solves");
  compare->add_option("netlist", input, "netlist file")->required();
  add_solve_flags(*compare, solve);
  compare->add_flag("-v,--verbose", verbose, "per-step iteration counts");
  compare->add_option("--max-diff", cf.max_diff, "largest accepted waveform difference (V)");
  compare->add_option("--max-nodes", cf.max_nodes, "refuse circuits larger than this");
  compare->add_flag("--literal-ls", cf.literal_ls, "report the untransposed source-inductance product");
  compare->add_option("--dump-matrix", cf.dump_matrix, "write M in MatrixMarket format");

  GridSpec spec;
  auto* gen = app.add_subcommand("gen", "write a synthetic grid netlist");
  gen->add_option("--rows", spec.rows);
  gen->add_option("--cols", spec.cols);
  gen->add_option("--r-wire", spec.r_wire, "ohms per mesh segment");
  gen->add_option("--c-node", spec.c_node, "farads per node, 0 disables");
  gen->add_option("--l-via", spec.l_via, "henries per via, 0 ties through resistors");
  gen->add_option("--via-pitch", spec.via_pitch, "every k-th boundary node is tied to the rail");
  gen->add_option("--vdd", spec.vdd);
  gen->add_option("--load-density", spec.load_density);
  gen->add_option("--load-peak", spec.load_peak);
  gen->add_option("--seed", spec.seed);
  gen->add_option("--step", spec.step);
  gen->add_option("--steps", spec.steps);
  gen->add_flag("--dc-loads", spec.dc_loads, "constant loads instead of pulses");
  gen->add_option("-o,--out", out_path, "output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_input;
  }

  try {
    if (*run) {
      precheck(solve);
      return cmd_run(input, out_path, solve, verbose);
    }
    if (*check) return cmd_check(input, dense, check_step);
    if (*compare) {
      precheck(solve);
      return cmd_compare(input, solve, cf, verbose);
    }
    check_spec(spec);
    return cmd_gen(spec, out_path);
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_numeric;
  } catch (const NumericFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_numeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_input;
  }
}
