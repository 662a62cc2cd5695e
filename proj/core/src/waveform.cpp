#include "pgrid/waveform.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace pgrid {

PwlWaveform::PwlWaveform() : points_{{0.0, 0.0}} {}

PwlWaveform::PwlWaveform(std::vector<PwlPoint> points) : points_(std::move(points)) {
  if (points_.empty()) {
    throw std::invalid_argument("PWL waveform needs at least one point");
  }
  for (std::size_t k = 0; k < points_.size(); ++k) {
    if (!std::isfinite(points_[k].time) || !std::isfinite(points_[k].value)) {
      throw std::invalid_argument("PWL waveform has a non-finite point");
    }
    if (points_[k].time < 0.0) {
      throw std::invalid_argument("PWL time must be non-negative");
    }
    if (k > 0 && !(points_[k].time > points_[k - 1].time)) {
      throw std::invalid_argument("PWL times must be strictly increasing");
    }
  }
}

PwlWaveform PwlWaveform::constant(double amps) {
  return PwlWaveform(std::vector<PwlPoint>{{0.0, amps}});
}

double PwlWaveform::eval(double t) const {
  if (t <= points_.front().time) {
    return points_.front().value;
  }
  if (t >= points_.back().time) {
    return points_.back().value;
  }
  // first breakpoint strictly after t; t lies in [hi-1, hi)
  auto hi = std::upper_bound(points_.begin(), points_.end(), t,
                             [](double x, const PwlPoint& p) { return x < p.time; });
  const PwlPoint& p1 = *hi;
  const PwlPoint& p0 = *(hi - 1);
  const double frac = (t - p0.time) / (p1.time - p0.time);
  return p0.value + (p1.value - p0.value) * frac;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) {
    throw std::runtime_error("cannot format double");
  }
  return std::string(buf, end);
}

void write_csv(const WaveformSet& ws, std::ostream& out) {
  if (ws.node_names.empty()) {
    throw std::invalid_argument("waveform set has no trivial nodes");
  }
  if (ws.values.size() != ws.times.size()) {
    throw std::invalid_argument("waveform set has mismatched time and value rows");
  }
  out << "time";
  for (const auto& name : ws.node_names) {
    out << ',' << name;
  }
  out << '\n';
  for (std::size_t s = 0; s < ws.times.size(); ++s) {
    if (ws.values[s].size() != ws.node_names.size()) {
      throw std::invalid_argument("waveform row width does not match node count");
    }
    out << format_double(ws.times[s]);
    for (double v : ws.values[s]) {
      out << ',' << format_double(v);
    }
    out << '\n';
  }
  if (!out) {
    throw std::runtime_error("failed to write CSV output");
  }
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') {
    fields.emplace_back();
  }
  return fields;
}

double parse_field(const std::string& text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::runtime_error("bad CSV number: '" + text + "'");
  }
  return v;
}

}  // namespace

WaveformSet read_csv(std::istream& in) {
  WaveformSet ws;
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("empty CSV input");
  }
  auto header = split_commas(line);
  if (header.empty() || header.front() != "time") {
    throw std::runtime_error("CSV header must start with 'time'");
  }
  ws.node_names.assign(header.begin() + 1, header.end());
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    auto fields = split_commas(line);
    if (fields.size() != header.size()) {
      throw std::runtime_error("CSV row has " + std::to_string(fields.size()) +
                               " fields, expected " + std::to_string(header.size()));
    }
    ws.times.push_back(parse_field(fields.front()));
    std::vector<double> row;
    row.reserve(fields.size() - 1);
    for (std::size_t k = 1; k < fields.size(); ++k) {
      row.push_back(parse_field(fields[k]));
    }
    ws.values.push_back(std::move(row));
  }
  return ws;
}

double max_abs_difference(const WaveformSet& a, const WaveformSet& b) {
  if (a.values.size() != b.values.size()) {
    throw std::invalid_argument("waveform sets have different step counts");
  }
  double worst = 0.0;
  for (std::size_t s = 0; s < a.values.size(); ++s) {
    if (a.values[s].size() != b.values[s].size()) {
      throw std::invalid_argument("waveform sets have different node counts");
    }
    for (std::size_t i = 0; i < a.values[s].size(); ++i) {
      worst = std::max(worst, std::abs(a.values[s][i] - b.values[s][i]));
    }
  }
  return worst;
}

}  // namespace pgrid
