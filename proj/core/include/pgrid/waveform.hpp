#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pgrid {

struct PwlPoint {
  double time = 0.0;   // seconds
  double value = 0.0;  // amperes

  friend bool operator==(const PwlPoint&, const PwlPoint&) = default;
};

/// Piecewise-linear current waveform. Holds the first value before the first
/// breakpoint and the last value after the final one; a single breakpoint is
/// a DC source.
class PwlWaveform {
 public:
  PwlWaveform();  // DC zero
  explicit PwlWaveform(std::vector<PwlPoint> points);

  static PwlWaveform constant(double amps);

  double eval(double t) const;

  std::span<const PwlPoint> points() const noexcept { return points_; }
  bool is_constant() const noexcept { return points_.size() == 1; }

  friend bool operator==(const PwlWaveform&, const PwlWaveform&) = default;

 private:
  std::vector<PwlPoint> points_;
};

/// Voltage time series for the trivial nodes of a circuit,
/// `values[s][i]` is node i at `times[s]`.
struct WaveformSet {
  std::vector<double> times;
  std::vector<std::string> node_names;
  std::vector<std::vector<double>> values;

  std::size_t steps() const noexcept { return times.size(); }
};

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

void write_csv(const WaveformSet& ws, std::ostream& out);
WaveformSet read_csv(std::istream& in);

// Largest |a - b| over all steps and nodes. Shapes must match.
double max_abs_difference(const WaveformSet& a, const WaveformSet& b);

}  // namespace pgrid
