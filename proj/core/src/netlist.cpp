#include "pgrid/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <system_error>
#include <unordered_map>

#include "pgrid/error.hpp"

namespace pgrid {

char element_letter(ElementKind kind) {
  switch (kind) {
    case ElementKind::voltage_source:
      return 'V';
    case ElementKind::resistor:
      return 'R';
    case ElementKind::capacitor:
      return 'C';
    case ElementKind::inductor:
      return 'L';
    case ElementKind::current_source:
      return 'I';
  }
  return '?';
}

std::size_t TranDirective::steps() const {
  if (!(step > 0.0)) {
    return 0;
  }
  return static_cast<std::size_t>(std::llround(stop / step));
}

std::size_t Circuit::branch_count() const {
  return static_cast<std::size_t>(
      std::count_if(elements.begin(), elements.end(), [](const Element& e) { return e.is_branch(); }));
}

std::string Circuit::node_name(NodeRef ref) const {
  switch (ref.kind) {
    case NodeKind::ground:
      return "0";
    case NodeKind::source:
      return source_names.at(ref.index);
    case NodeKind::trivial:
      return trivial_names.at(ref.index);
  }
  return "?";
}

double Circuit::source_voltage(std::size_t source) const {
  for (const auto& e : elements) {
    if (e.kind == ElementKind::voltage_source && e.a == NodeRef::source(source)) {
      return e.value;
    }
  }
  throw std::out_of_range("no voltage source drives source node " + std::to_string(source));
}

std::vector<double> Circuit::source_voltages() const {
  std::vector<double> out(source_count(), 0.0);
  for (const auto& e : elements) {
    if (e.kind == ElementKind::voltage_source && e.a.is_source()) {
      out[e.a.index] = e.value;
    }
  }
  return out;
}

double Circuit::fixed_voltage(NodeRef ref) const {
  if (ref.is_ground()) {
    return 0.0;
  }
  if (ref.is_source()) {
    return source_voltage(ref.index);
  }
  throw std::invalid_argument("trivial node " + node_name(ref) + " has no fixed voltage");
}

double Circuit::rail_voltage() const {
  for (const auto& e : elements) {
    if (e.kind == ElementKind::voltage_source) {
      return e.value;
    }
  }
  return 0.0;
}

bool Circuit::has_inductors() const {
  return std::any_of(elements.begin(), elements.end(),
                     [](const Element& e) { return e.kind == ElementKind::inductor; });
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

std::optional<double> try_parse_value(std::string_view token) {
  std::string_view body = token;
  if (!body.empty() && body.front() == '+') {
    body.remove_prefix(1);
  }
  if (body.empty()) {
    return std::nullopt;
  }
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
  if (ec != std::errc{}) {
    return std::nullopt;
  }
  const std::string suffix = lower(std::string_view(ptr, body.data() + body.size() - ptr));
  double scale = 1.0;
  if (suffix.empty()) {
    scale = 1.0;
  } else if (suffix == "meg") {
    scale = 1e6;
  } else if (suffix.size() == 1) {
    switch (suffix[0]) {
      case 'f': scale = 1e-15; break;
      case 'p': scale = 1e-12; break;
      case 'n': scale = 1e-9; break;
      case 'u': scale = 1e-6; break;
      case 'm': scale = 1e-3; break;
      case 'k': scale = 1e3; break;
      case 'g': scale = 1e9; break;
      case 't': scale = 1e12; break;
      default: return std::nullopt;
    }
  } else {
    return std::nullopt;
  }
  const double out = scale == 1.0 ? v : v * scale;
  if (!std::isfinite(out)) {
    return std::nullopt;
  }
  return out;
}

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size()) break;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    tokens.push_back({line.substr(start, i - start), start + 1});
  }
  return tokens;
}

struct RawElement {
  Element element;
  std::string node_a;
  std::string node_b;
  std::size_t line = 0;
  std::size_t col_a = 0;
  std::size_t col_b = 0;
};

struct RawIc {
  bool is_current = false;
  std::string target;
  double value = 0.0;
  std::size_t line = 0;
  std::size_t column = 0;
};

double value_or_throw(const Token& tok, std::size_t line) {
  auto v = try_parse_value(tok.text);
  if (!v) {
    throw ParseError(line, tok.column, "invalid number '" + std::string(tok.text) + "'");
  }
  return *v;
}

PwlWaveform parse_pwl(std::string_view rest, std::size_t line, std::size_t column) {
  // rest begins at "PWL"
  std::string body(rest.substr(3));
  for (char& ch : body) {
    if (ch == '(' || ch == ')' || ch == ',') ch = ' ';
  }
  const auto open = rest.find('(');
  const auto close = rest.rfind(')');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    throw ParseError(line, column, "PWL needs a parenthesised point list");
  }
  for (std::size_t k = close + 1; k < rest.size(); ++k) {
    if (!std::isspace(static_cast<unsigned char>(rest[k]))) {
      throw ParseError(line, column + k, "unexpected text after PWL(...)");
    }
  }
  std::vector<double> numbers;
  for (const auto& tok : tokenize(body)) {
    auto v = try_parse_value(tok.text);
    if (!v) {
      throw ParseError(line, column + 3 + tok.column - 1,
                       "invalid PWL number '" + std::string(tok.text) + "'");
    }
    numbers.push_back(*v);
  }
  if (numbers.empty() || numbers.size() % 2 != 0) {
    throw ParseError(line, column, "PWL needs time/value pairs");
  }
  std::vector<PwlPoint> points;
  for (std::size_t k = 0; k < numbers.size(); k += 2) {
    points.push_back({numbers[k], numbers[k + 1]});
  }
  try {
    return PwlWaveform(std::move(points));
  } catch (const std::invalid_argument& e) {
    throw ParseError(line, column, e.what());
  }
}

RawElement parse_element(std::string_view text, const std::vector<Token>& tokens,
                         std::size_t line) {
  RawElement raw;
  raw.line = line;
  Element& e = raw.element;
  e.name = std::string(tokens[0].text);
  switch (std::toupper(static_cast<unsigned char>(e.name[0]))) {
    case 'V': e.kind = ElementKind::voltage_source; break;
    case 'R': e.kind = ElementKind::resistor; break;
    case 'C': e.kind = ElementKind::capacitor; break;
    case 'L': e.kind = ElementKind::inductor; break;
    case 'I': e.kind = ElementKind::current_source; break;
    default:
      throw ParseError(line, tokens[0].column,
                       "unknown element type '" + std::string(1, e.name[0]) + "'");
  }
  if (tokens.size() < 4) {
    const std::size_t col = tokens.back().column + tokens.back().text.size();
    throw ParseError(line, col, "element " + e.name + " needs two nodes and a value");
  }
  raw.node_a = std::string(tokens[1].text);
  raw.node_b = std::string(tokens[2].text);
  raw.col_a = tokens[1].column;
  raw.col_b = tokens[2].column;
  if (raw.node_a == raw.node_b) {
    throw ParseError(line, tokens[2].column, "element " + e.name + " connects node " +
                                                 raw.node_a + " to itself");
  }

  const Token& value_tok = tokens[3];
  if (e.kind == ElementKind::current_source && lower(value_tok.text.substr(0, 3)) == "pwl") {
    e.waveform = parse_pwl(text.substr(value_tok.column - 1), line, value_tok.column);
    return raw;
  }
  if (tokens.size() > 4) {
    throw ParseError(line, tokens[4].column, "unexpected token '" +
                                                 std::string(tokens[4].text) + "'");
  }
  const double v = value_or_throw(value_tok, line);
  switch (e.kind) {
    case ElementKind::resistor:
    case ElementKind::capacitor:
    case ElementKind::inductor:
      if (!(v > 0.0)) {
        throw ParseError(line, value_tok.column, "element " + e.name + " needs a positive value");
      }
      e.value = v;
      break;
    case ElementKind::voltage_source:
      e.value = v;
      break;
    case ElementKind::current_source:
      e.waveform = PwlWaveform::constant(v);
      break;
  }
  return raw;
}

void parse_ic(std::string_view text, std::size_t offset, std::size_t line,
              std::vector<RawIc>& out) {
  // accepts V(node)=value and I(Lname)=value, whitespace around '=' allowed
  std::size_t i = offset;
  auto skip_ws = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  skip_ws();
  if (i >= text.size()) {
    throw ParseError(line, i + 1, ".ic needs at least one V(node)=value or I(L)=value");
  }
  while (i < text.size()) {
    RawIc ic;
    ic.line = line;
    ic.column = i + 1;
    const char kind = static_cast<char>(std::toupper(static_cast<unsigned char>(text[i])));
    if ((kind != 'V' && kind != 'I') || i + 1 >= text.size() || text[i + 1] != '(') {
      throw ParseError(line, i + 1, "expected V(node)=value or I(L)=value");
    }
    ic.is_current = kind == 'I';
    const auto close = text.find(')', i + 2);
    if (close == std::string_view::npos) {
      throw ParseError(line, i + 1, "unterminated '(' in .ic");
    }
    ic.target = std::string(text.substr(i + 2, close - i - 2));
    if (ic.target.empty()) {
      throw ParseError(line, i + 3, "empty name in .ic");
    }
    i = close + 1;
    skip_ws();
    if (i >= text.size() || text[i] != '=') {
      throw ParseError(line, i + 1, "expected '=' in .ic");
    }
    ++i;
    skip_ws();
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const Token tok{text.substr(start, i - start), start + 1};
    if (tok.text.empty()) {
      throw ParseError(line, start + 1, "missing value in .ic");
    }
    ic.value = value_or_throw(tok, line);
    out.push_back(std::move(ic));
    skip_ws();
  }
}

}  // namespace

double parse_value(std::string_view token) {
  auto v = try_parse_value(token);
  if (!v) {
    throw std::invalid_argument("invalid number '" + std::string(token) + "'");
  }
  return *v;
}

Circuit parse(std::string_view text) {
  std::vector<RawElement> raws;
  std::vector<RawIc> ics;
  std::optional<TranDirective> tran;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool ended = false;

  while (pos <= text.size() && !ended) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    auto tokens = tokenize(line);
    if (tokens.empty() || tokens[0].text.front() == '*') {
      continue;
    }
    const std::string head = lower(tokens[0].text);
    if (head.front() == '.') {
      if (head == ".end") {
        ended = true;
      } else if (head == ".tran") {
        if (tokens.size() != 3) {
          throw ParseError(line_no, tokens[0].column, ".tran needs <step> <stop>");
        }
        TranDirective d{value_or_throw(tokens[1], line_no), value_or_throw(tokens[2], line_no)};
        if (!(d.step > 0.0)) {
          throw ParseError(line_no, tokens[1].column, ".tran step must be positive");
        }
        if (!(d.stop >= d.step)) {
          throw ParseError(line_no, tokens[2].column, ".tran stop must be at least one step");
        }
        if (tran) {
          throw ParseError(line_no, tokens[0].column, "duplicate .tran directive");
        }
        tran = d;
      } else if (head == ".ic") {
        parse_ic(line, tokens[0].column - 1 + 3, line_no, ics);
      } else {
        throw ParseError(line_no, tokens[0].column, "unsupported directive " + head);
      }
      continue;
    }
    raws.push_back(parse_element(line, tokens, line_no));
  }

  if (raws.empty()) {
    throw ParseError(line_no == 0 ? 1 : line_no, 1, "netlist has no elements");
  }

  // names must be unique
  std::unordered_map<std::string, std::size_t> by_name;
  for (std::size_t k = 0; k < raws.size(); ++k) {
    auto [it, fresh] = by_name.emplace(raws[k].element.name, k);
    if (!fresh) {
      throw ParseError(raws[k].line, 1, "duplicate element name " + raws[k].element.name);
    }
  }

  // source nodes are exactly the positive terminals of V elements
  std::unordered_map<std::string, std::size_t> driver;
  for (std::size_t k = 0; k < raws.size(); ++k) {
    const auto& r = raws[k];
    if (r.element.kind != ElementKind::voltage_source) continue;
    if (r.node_a == "0") {
      throw ParseError(r.line, r.col_a,
                       "voltage source " + r.element.name + " has its positive terminal at ground");
    }
    auto [it, fresh] = driver.emplace(r.node_a, k);
    if (!fresh) {
      throw ParseError(r.line, r.col_a, "node " + r.node_a + " is driven by both " +
                                            raws[it->second].element.name + " and " +
                                            r.element.name);
    }
  }
  for (const auto& r : raws) {
    if (r.element.kind == ElementKind::voltage_source && r.node_b != "0" &&
        driver.count(r.node_b)) {
      throw ParseError(r.line, r.col_b, "node " + r.node_b +
                                            " is both a source node and the negative terminal of " +
                                            r.element.name);
    }
  }

  Circuit c;
  std::unordered_map<std::string, NodeRef> refs;
  auto resolve = [&](const std::string& name) {
    if (name == "0") return NodeRef::ground();
    auto it = refs.find(name);
    if (it != refs.end()) return it->second;
    NodeRef ref;
    if (driver.count(name)) {
      ref = NodeRef::source(c.source_names.size());
      c.source_names.push_back(name);
    } else {
      ref = NodeRef::trivial(c.trivial_names.size());
      c.trivial_names.push_back(name);
    }
    refs.emplace(name, ref);
    return ref;
  };
  for (auto& r : raws) {
    r.element.a = resolve(r.node_a);
    r.element.b = resolve(r.node_b);
    c.elements.push_back(std::move(r.element));
  }

  for (const auto& ic : ics) {
    if (ic.is_current) {
      auto it = by_name.find(ic.target);
      if (it == by_name.end() || c.elements[it->second].kind != ElementKind::inductor) {
        throw ParseError(ic.line, ic.column, "I(" + ic.target + ") does not name an inductor");
      }
      c.inductor_ic[ic.target] = ic.value;
    } else {
      auto it = refs.find(ic.target);
      if (it == refs.end() || !it->second.is_trivial()) {
        throw ParseError(ic.line, ic.column, "V(" + ic.target + ") does not name a trivial node");
      }
      c.node_ic[ic.target] = ic.value;
    }
  }

  if (!tran) {
    throw ParseError(line_no, 1, "missing .tran directive");
  }
  c.tran = *tran;
  return c;
}

Circuit parse_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string serialize(const Circuit& c) {
  std::ostringstream os;
  for (const auto& e : c.elements) {
    os << e.name << ' ' << c.node_name(e.a) << ' ' << c.node_name(e.b) << ' ';
    if (e.kind == ElementKind::current_source) {
      const auto pts = e.waveform.points();
      if (e.waveform.is_constant() && pts.front().time == 0.0) {
        os << format_double(pts.front().value);
      } else {
        os << "PWL(";
        for (std::size_t k = 0; k < pts.size(); ++k) {
          if (k) os << ' ';
          os << format_double(pts[k].time) << ' ' << format_double(pts[k].value);
        }
        os << ')';
      }
    } else {
      os << format_double(e.value);
    }
    os << '\n';
  }
  for (const auto& [node, v] : c.node_ic) {
    os << ".ic V(" << node << ")=" << format_double(v) << '\n';
  }
  for (const auto& [name, i] : c.inductor_ic) {
    os << ".ic I(" << name << ")=" << format_double(i) << '\n';
  }
  os << ".tran " << format_double(c.tran.step) << ' ' << format_double(c.tran.stop) << '\n';
  os << ".end\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Validation and decomposition

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;  // smallest index is the root
  }

 private:
  std::vector<std::size_t> parent_;
};

bool is_passive(ElementKind k) {
  return k == ElementKind::resistor || k == ElementKind::capacitor || k == ElementKind::inductor;
}

// component label per trivial node, labels numbered by smallest member
std::vector<std::size_t> label_components(const Circuit& c, std::size_t& count) {
  DisjointSets sets(c.trivial_count());
  for (const auto& e : c.elements) {
    if (is_passive(e.kind) && e.a.is_trivial() && e.b.is_trivial()) {
      sets.unite(e.a.index, e.b.index);
    }
  }
  std::vector<std::size_t> label(c.trivial_count());
  std::unordered_map<std::size_t, std::size_t> root_label;
  for (std::size_t i = 0; i < c.trivial_count(); ++i) {
    auto [it, fresh] = root_label.emplace(sets.find(i), root_label.size());
    label[i] = it->second;
  }
  count = root_label.size();
  return label;
}

}  // namespace

std::vector<Violation> validate(const Circuit& c) {
  std::vector<Violation> out;
  for (const auto& e : c.elements) {
    if (e.kind == ElementKind::voltage_source && !e.b.is_ground()) {
      out.push_back({Assumption::grounded_sources, e.name,
                     "voltage source " + e.name + " has its negative terminal at node " +
                         c.node_name(e.b) + " instead of ground"});
    }
  }

  std::vector<std::size_t> passive(c.trivial_count(), 0);
  std::vector<std::size_t> any(c.trivial_count(), 0);
  for (const auto& e : c.elements) {
    if (!e.is_branch()) continue;
    for (NodeRef end : {e.a, e.b}) {
      if (!end.is_trivial()) continue;
      ++any[end.index];
      if (is_passive(e.kind)) ++passive[end.index];
    }
  }
  for (std::size_t i = 0; i < c.trivial_count(); ++i) {
    if (passive[i] == 0) {
      const std::string& name = c.trivial_names[i];
      out.push_back({Assumption::node_attachment, name,
                     any[i] == 0 ? "node " + name + " has no branches"
                                 : "node " + name + " is attached only through current sources"});
    }
  }

  // every part needs a passive branch to a fixed node, otherwise its
  // system matrix has no strictly dominant row and is singular
  std::size_t count = 0;
  const auto label = label_components(c, count);
  std::vector<bool> anchored(count, false);
  std::vector<std::size_t> first(count, c.trivial_count());
  for (std::size_t i = 0; i < c.trivial_count(); ++i) {
    first[label[i]] = std::min(first[label[i]], i);
  }
  for (const auto& e : c.elements) {
    if (!is_passive(e.kind)) continue;
    if (e.a.is_trivial() && !e.b.is_trivial()) anchored[label[e.a.index]] = true;
    if (e.b.is_trivial() && !e.a.is_trivial()) anchored[label[e.b.index]] = true;
  }
  for (std::size_t k = 0; k < count; ++k) {
    const std::string& name = c.trivial_names[first[k]];
    if (!anchored[k] && passive[first[k]] > 0) {
      out.push_back({Assumption::node_attachment, name,
                     "the part containing node " + name +
                         " has no resistor, capacitor or inductor to ground or a source"});
    }
  }
  return out;
}

std::string describe(const Violation& v) {
  return "assumption " + std::to_string(static_cast<int>(v.assumption)) + " (" + v.subject +
         "): " + v.message;
}

Decomposition decompose(const Circuit& c) {
  Decomposition out;
  std::size_t count = 0;
  const auto label = label_components(c, count);

  std::vector<std::vector<std::size_t>> members(count);
  for (std::size_t i = 0; i < c.trivial_count(); ++i) {
    members[label[i]].push_back(i);
  }

  for (const auto& e : c.elements) {
    if (e.is_branch() && !e.a.is_trivial() && !e.b.is_trivial()) {
      out.warnings.push_back("element " + e.name + " touches no trivial node and is ignored");
    }
  }

  for (std::size_t k = 0; k < count; ++k) {
    Component comp;
    Circuit& sub = comp.circuit;
    sub.tran = c.tran;
    comp.trivial_map = members[k];

    std::vector<std::optional<std::size_t>> local(c.trivial_count());
    for (std::size_t n = 0; n < members[k].size(); ++n) {
      local[members[k][n]] = n;
      sub.trivial_names.push_back(c.trivial_names[members[k][n]]);
    }

    auto in_part = [&](NodeRef r) { return r.is_trivial() && label[r.index] == k; };

    // source nodes referenced by this part, in parent order
    std::vector<bool> source_used(c.source_count(), false);
    for (const auto& e : c.elements) {
      if (!e.is_branch() || !(in_part(e.a) || in_part(e.b))) continue;
      for (NodeRef end : {e.a, e.b}) {
        if (end.is_source()) source_used[end.index] = true;
      }
    }
    std::vector<std::optional<std::size_t>> source_local(c.source_count());
    for (std::size_t s = 0; s < c.source_count(); ++s) {
      if (source_used[s]) {
        source_local[s] = sub.source_names.size();
        sub.source_names.push_back(c.source_names[s]);
      }
    }

    auto remap = [&](NodeRef r) -> NodeRef {
      if (in_part(r)) return NodeRef::trivial(*local[r.index]);
      if (r.is_source() && source_local[r.index]) return NodeRef::source(*source_local[r.index]);
      // a current source spanning two parts: the far end acts as ground here
      return NodeRef::ground();
    };

    for (const auto& e : c.elements) {
      if (e.kind == ElementKind::voltage_source) {
        if (e.a.is_source() && source_local[e.a.index]) {
          Element v = e;
          v.a = remap(e.a);
          v.b = NodeRef::ground();
          sub.elements.push_back(std::move(v));
        }
        continue;
      }
      if (!(in_part(e.a) || in_part(e.b))) continue;
      Element b = e;
      b.a = remap(e.a);
      b.b = remap(e.b);
      sub.elements.push_back(std::move(b));
      if (e.kind == ElementKind::inductor) {
        if (auto it = c.inductor_ic.find(e.name); it != c.inductor_ic.end()) {
          sub.inductor_ic.insert(*it);
        }
      }
    }
    for (const auto& name : sub.trivial_names) {
      if (auto it = c.node_ic.find(name); it != c.node_ic.end()) {
        sub.node_ic.insert(*it);
      }
    }
    out.components.push_back(std::move(comp));
  }
  return out;
}

}  // namespace pgrid
