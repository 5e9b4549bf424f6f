#include "netdec/case.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <queue>
#include <set>
#include <sstream>

#include "netdec/errors.hpp"

namespace netdec {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kAngleClampDeg = 89.9;

using Matrix = std::vector<std::vector<double>>;

struct Field {
  enum class Kind { Scalar, String, Matrix, Cell } kind;
  double scalar = 0.0;
  Matrix matrix;
  int line = 0;
};

/// Tokenizer-free scanner over the MATPOWER subset. Tracks line numbers so
/// syntax errors point at the offending row.
class Scanner {
 public:
  explicit Scanner(std::string_view text) : text_(text) {}

  std::string function_name;
  std::map<std::string, Field> fields;

  void run() {
    while (true) {
      skip_space_and_comments();
      if (eof()) break;
      if (match_word("function")) {
        parse_function();
        continue;
      }
      if (match_word("mpc")) {
        parse_assignment();
        continue;
      }
      throw SyntaxError(line_, "unexpected text '" + peek_token() + "'");
    }
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;

  bool eof() const { return pos_ >= text_.size(); }
  char cur() const { return text_[pos_]; }

  void advance() {
    if (text_[pos_] == '\n') ++line_;
    ++pos_;
  }

  void skip_comment() {
    while (!eof() && cur() != '\n') advance();
  }

  void skip_space_and_comments() {
    while (!eof()) {
      if (cur() == '%') {
        skip_comment();
      } else if (std::isspace(static_cast<unsigned char>(cur()))) {
        advance();
      } else {
        break;
      }
    }
  }

  // Whitespace inside a matrix row: no newlines, no comments.
  void skip_inline_space() {
    while (!eof() && (cur() == ' ' || cur() == '\t' || cur() == '\r' || cur() == ',')) advance();
  }

  std::string peek_token() const {
    std::size_t end = pos_;
    while (end < text_.size() && !std::isspace(static_cast<unsigned char>(text_[end])) &&
           end - pos_ < 24)
      ++end;
    return std::string(text_.substr(pos_, end - pos_));
  }

  bool match_word(std::string_view w) {
    if (text_.substr(pos_, w.size()) != w) return false;
    std::size_t after = pos_ + w.size();
    if (after < text_.size()) {
      char c = text_[after];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') return false;
    }
    for (std::size_t i = 0; i < w.size(); ++i) advance();
    return true;
  }

  std::string read_identifier() {
    std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(cur())) || cur() == '_')) advance();
    if (start == pos_) throw SyntaxError(line_, "expected identifier");
    return std::string(text_.substr(start, pos_ - start));
  }

  void expect(char c) {
    skip_space_and_comments();
    if (eof() || cur() != c)
      throw SyntaxError(line_, std::string("expected '") + c + "'" +
                                   (eof() ? std::string(" before end of file")
                                          : " near '" + peek_token() + "'"));
    advance();
  }

  void parse_function() {
    skip_space_and_comments();
    if (!match_word("mpc")) throw SyntaxError(line_, "expected 'mpc' after 'function'");
    expect('=');
    skip_space_and_comments();
    function_name = read_identifier();
    skip_inline_space();
    if (!eof() && cur() == ';') advance();
  }

  void parse_assignment() {
    expect('.');
    std::string name = read_identifier();
    expect('=');
    skip_space_and_comments();
    Field f;
    f.line = line_;
    if (eof()) throw SyntaxError(line_, "missing value for mpc." + name);
    if (cur() == '[') {
      advance();
      f.kind = Field::Kind::Matrix;
      f.matrix = parse_matrix_body(']');
    } else if (cur() == '{') {
      advance();
      f.kind = Field::Kind::Cell;
      skip_cell();
    } else if (cur() == '\'' || cur() == '"') {
      f.kind = Field::Kind::String;
      char q = cur();
      advance();
      while (!eof() && cur() != q && cur() != '\n') advance();
      if (eof() || cur() != q) throw SyntaxError(line_, "unterminated string");
      advance();
    } else {
      f.kind = Field::Kind::Scalar;
      f.scalar = read_number();
    }
    expect(';');
    fields[name] = std::move(f);
  }

  void skip_cell() {
    int depth = 1;
    while (!eof() && depth > 0) {
      if (cur() == '%') {
        skip_comment();
        continue;
      }
      if (cur() == '\'') {
        advance();
        while (!eof() && cur() != '\'' && cur() != '\n') advance();
        if (!eof() && cur() == '\'') advance();
        continue;
      }
      if (cur() == '{') ++depth;
      if (cur() == '}') --depth;
      advance();
    }
    if (depth > 0) throw SyntaxError(line_, "unterminated cell array");
  }

  double read_number() {
    std::size_t start = pos_;
    if (!eof() && (cur() == '+' || cur() == '-')) advance();
    while (!eof() && (std::isalnum(static_cast<unsigned char>(cur())) || cur() == '.' ||
                      ((cur() == '+' || cur() == '-') &&
                       (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))))
      advance();
    std::string tok(text_.substr(start, pos_ - start));
    if (tok == "Inf" || tok == "inf" || tok == "+Inf") return HUGE_VAL;
    if (tok == "-Inf" || tok == "-inf") return -HUGE_VAL;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size())
      throw SyntaxError(line_, "malformed number '" + tok + "'");
    return v;
  }

  Matrix parse_matrix_body(char close) {
    Matrix rows;
    std::vector<double> row;
    int row_line = line_;
    auto flush = [&] {
      if (row.empty()) return;
      if (!rows.empty() && rows.front().size() != row.size())
        throw SyntaxError(row_line, "matrix row has " + std::to_string(row.size()) +
                                        " columns, expected " +
                                        std::to_string(rows.front().size()));
      rows.push_back(std::move(row));
      row.clear();
    };
    while (true) {
      skip_inline_space();
      if (eof()) throw SyntaxError(line_, "unterminated matrix");
      char c = cur();
      if (c == close) {
        flush();
        advance();
        return rows;
      }
      if (c == ';' || c == '\n') {
        flush();
        advance();
        row_line = line_;
        continue;
      }
      if (c == '%') {
        skip_comment();
        continue;
      }
      if (c == '.' && text_.substr(pos_, 3) == "...") {
        skip_comment();
        if (!eof()) advance();
        continue;
      }
      if (row.empty()) row_line = line_;
      row.push_back(read_number());
    }
  }
};

const Matrix& require_matrix(const Scanner& s, const std::string& name, std::size_t min_cols) {
  auto it = s.fields.find(name);
  if (it == s.fields.end()) throw SemanticError("missing " + name + " section");
  const Field& f = it->second;
  if (f.kind != Field::Kind::Matrix)
    throw SemanticError("mpc." + name + " must be a matrix");
  if (f.matrix.empty()) throw SemanticError("mpc." + name + " is empty");
  if (f.matrix.front().size() < min_cols)
    throw SemanticError("mpc." + name + " needs at least " + std::to_string(min_cols) +
                        " columns, found " + std::to_string(f.matrix.front().size()));
  return f.matrix;
}

double clamp_angle_deg(double deg) {
  return std::clamp(deg, -kAngleClampDeg, kAngleClampDeg);
}

}  // namespace

int NetworkCase::bus_index(int id) const {
  if (index_.size() != buses.size()) const_cast<NetworkCase*>(this)->reindex();
  auto it = index_.find(id);
  return it == index_.end() ? -1 : it->second;
}

void NetworkCase::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < buses.size(); ++i) index_.emplace(buses[i].id, static_cast<int>(i));
}

NetworkCase parse_matpower(std::string_view text) {
  Scanner s(text);
  s.run();

  const Matrix& bus = require_matrix(s, "bus", 13);
  const Matrix& branch = require_matrix(s, "branch", 11);
  const Matrix& gen = require_matrix(s, "gen", 10);
  const Matrix& gencost = require_matrix(s, "gencost", 4);
  auto base_it = s.fields.find("baseMVA");
  if (base_it == s.fields.end()) throw SemanticError("missing baseMVA section");
  if (base_it->second.kind != Field::Kind::Scalar)
    throw SemanticError("mpc.baseMVA must be a scalar");

  NetworkCase c;
  c.name = s.function_name;
  c.base_mva = base_it->second.scalar;
  if (!(c.base_mva > 0.0)) throw SemanticError("baseMVA must be positive");
  const double base = c.base_mva;

  for (const auto& r : bus) {
    Bus b;
    b.id = static_cast<int>(r[0]);
    int type = static_cast<int>(r[1]);
    if (type < 1 || type > 4)
      throw SemanticError("bus " + std::to_string(b.id) + " has invalid type " +
                          std::to_string(type));
    b.type = static_cast<BusType>(type);
    b.pd = r[2] / base;
    b.qd = r[3] / base;
    b.gs = r[4] / base;
    b.bs = r[5] / base;
    b.vmax = r[11];
    b.vmin = r[12];
    c.buses.push_back(b);
  }
  c.reindex();

  std::set<int> ids;
  for (const auto& b : c.buses)
    if (!ids.insert(b.id).second)
      throw SemanticError("duplicate bus id " + std::to_string(b.id));
  auto check_bus = [&](int id, const std::string& where) {
    if (c.bus_index(id) < 0)
      throw SemanticError(where + " references unknown bus " + std::to_string(id));
  };

  for (std::size_t k = 0; k < gen.size(); ++k) {
    const auto& r = gen[k];
    Generator g;
    g.bus = static_cast<int>(r[0]);
    check_bus(g.bus, "generator " + std::to_string(k + 1));
    g.qmax = r[3] / base;
    g.qmin = r[4] / base;
    g.in_service = r[7] > 0.0;
    g.pmax = r[8] / base;
    g.pmin = r[9] / base;
    c.generators.push_back(g);
  }

  if (gencost.size() != gen.size())
    throw SemanticError("gencost has " + std::to_string(gencost.size()) + " rows but gen has " +
                        std::to_string(gen.size()));
  for (std::size_t k = 0; k < gencost.size(); ++k) {
    const auto& r = gencost[k];
    int model = static_cast<int>(r[0]);
    if (model == 1)
      throw SemanticError("gencost row " + std::to_string(k + 1) +
                          ": piecewise-linear costs are not supported");
    if (model != 2)
      throw SemanticError("gencost row " + std::to_string(k + 1) + ": unknown cost model " +
                          std::to_string(model));
    int n = static_cast<int>(r[3]);
    if (n < 0 || n > 3)
      throw SemanticError("gencost row " + std::to_string(k + 1) +
                          ": polynomial degree above 2 is not supported");
    if (r.size() < static_cast<std::size_t>(4 + n))
      throw SemanticError("gencost row " + std::to_string(k + 1) + " is missing coefficients");
    // coefficients are listed highest order first
    double coef[3] = {0.0, 0.0, 0.0};  // c0, c1, c2
    for (int j = 0; j < n; ++j) coef[n - 1 - j] = r[4 + j];
    CostPoly& cp = c.generators[k].cost;
    cp.c2 = coef[2] * base * base;
    cp.c1 = coef[1] * base;
    cp.c0 = coef[0];
  }

  for (std::size_t k = 0; k < branch.size(); ++k) {
    const auto& r = branch[k];
    Branch br;
    br.from_bus = static_cast<int>(r[0]);
    br.to_bus = static_cast<int>(r[1]);
    check_bus(br.from_bus, "branch " + std::to_string(k + 1));
    check_bus(br.to_bus, "branch " + std::to_string(k + 1));
    br.r = r[2];
    br.x = r[3];
    br.b_charge = r[4];
    br.s_max = r[5] / base;
    br.tap = r[8];
    br.shift = r[9] * kDeg;
    br.in_service = r[10] > 0.0;
    double amin = r.size() > 11 ? r[11] : -360.0;
    double amax = r.size() > 12 ? r[12] : 360.0;
    br.angmin = clamp_angle_deg(amin) * kDeg;
    br.angmax = clamp_angle_deg(amax) * kDeg;
    c.branches.push_back(br);
  }
  return c;
}

NetworkCase load_matpower(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open case file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  NetworkCase c = parse_matpower(ss.str());
  if (c.name.empty()) {
    auto slash = path.find_last_of('/');
    std::string stem = path.substr(slash == std::string::npos ? 0 : slash + 1);
    if (auto dot = stem.rfind(".m"); dot != std::string::npos) stem.resize(dot);
    c.name = stem;
  }
  return c;
}

std::string to_matpower(const NetworkCase& c) {
  const double base = c.base_mva;
  std::string out;
  char buf[512];
  auto emit = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof buf, fmt, args...);
    out += buf;
  };
  emit("function mpc = %s\n", c.name.empty() ? "netdec_case" : c.name.c_str());
  out += "mpc.version = '2';\n";
  emit("mpc.baseMVA = %.17g;\n\n", base);
  out += "mpc.bus = [\n";
  for (const auto& b : c.buses)
    emit("\t%d\t%d\t%.17g\t%.17g\t%.17g\t%.17g\t1\t1.0\t0.0\t1.0\t1\t%.17g\t%.17g;\n", b.id,
         static_cast<int>(b.type), b.pd * base, b.qd * base, b.gs * base, b.bs * base, b.vmax,
         b.vmin);
  out += "];\n\nmpc.gen = [\n";
  for (const auto& g : c.generators)
    emit("\t%d\t0.0\t0.0\t%.17g\t%.17g\t1.0\t%.17g\t%d\t%.17g\t%.17g;\n", g.bus, g.qmax * base,
         g.qmin * base, base, g.in_service ? 1 : 0, g.pmax * base, g.pmin * base);
  out += "];\n\nmpc.gencost = [\n";
  for (const auto& g : c.generators)
    emit("\t2\t0.0\t0.0\t3\t%.17g\t%.17g\t%.17g;\n", g.cost.c2 / (base * base), g.cost.c1 / base,
         g.cost.c0);
  out += "];\n\nmpc.branch = [\n";
  for (const auto& br : c.branches)
    emit("\t%d\t%d\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%d\t%.17g\t%.17g;\n",
         br.from_bus, br.to_bus, br.r, br.x, br.b_charge, br.s_max * base, br.s_max * base,
         br.s_max * base, br.tap, br.shift / kDeg, br.in_service ? 1 : 0, br.angmin / kDeg,
         br.angmax / kDeg);
  out += "];\n";
  return out;
}

namespace {

bool close(double a, double b, double rel) {
  if (a == b) return true;
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

bool structurally_equal(const NetworkCase& a, const NetworkCase& b, double rel) {
  if (a.buses.size() != b.buses.size() || a.generators.size() != b.generators.size() ||
      a.branches.size() != b.branches.size() || !close(a.base_mva, b.base_mva, rel))
    return false;
  for (std::size_t i = 0; i < a.buses.size(); ++i) {
    const Bus &x = a.buses[i], &y = b.buses[i];
    if (x.id != y.id || x.type != y.type || !close(x.pd, y.pd, rel) || !close(x.qd, y.qd, rel) ||
        !close(x.gs, y.gs, rel) || !close(x.bs, y.bs, rel) || !close(x.vmin, y.vmin, rel) ||
        !close(x.vmax, y.vmax, rel))
      return false;
  }
  for (std::size_t i = 0; i < a.generators.size(); ++i) {
    const Generator &x = a.generators[i], &y = b.generators[i];
    if (x.bus != y.bus || x.in_service != y.in_service || !close(x.pmin, y.pmin, rel) ||
        !close(x.pmax, y.pmax, rel) || !close(x.qmin, y.qmin, rel) ||
        !close(x.qmax, y.qmax, rel) || !close(x.cost.c2, y.cost.c2, rel) ||
        !close(x.cost.c1, y.cost.c1, rel) || !close(x.cost.c0, y.cost.c0, rel))
      return false;
  }
  for (std::size_t i = 0; i < a.branches.size(); ++i) {
    const Branch &x = a.branches[i], &y = b.branches[i];
    if (x.from_bus != y.from_bus || x.to_bus != y.to_bus || x.in_service != y.in_service ||
        !close(x.r, y.r, rel) || !close(x.x, y.x, rel) || !close(x.b_charge, y.b_charge, rel) ||
        !close(x.tap, y.tap, rel) || !close(x.shift, y.shift, rel) ||
        !close(x.s_max, y.s_max, rel) || !close(x.angmin, y.angmin, rel) ||
        !close(x.angmax, y.angmax, rel))
      return false;
  }
  return true;
}

BranchAdmittance admittance_parameters(const Branch& br) {
  if (br.r == 0.0 && br.x == 0.0) throw ZeroImpedance("branch has zero series impedance");
  using cd = std::complex<double>;
  const cd y = 1.0 / cd(br.r, br.x);
  const double ratio = br.tap == 0.0 ? 1.0 : br.tap;
  const cd t = std::polar(ratio, br.shift);
  const cd charge(0.0, br.b_charge / 2.0);
  BranchAdmittance a;
  a.y_ff = (y + charge) / std::norm(t);
  a.y_ft = -y / std::conj(t);
  a.y_tf = -y / t;
  a.y_tt = y + charge;
  return a;
}

std::string_view to_string(DiagnosticCode code) {
  switch (code) {
    case DiagnosticCode::BadBaseMva: return "BadBaseMva";
    case DiagnosticCode::DuplicateBusId: return "DuplicateBusId";
    case DiagnosticCode::DanglingBusRef: return "DanglingBusRef";
    case DiagnosticCode::BadVoltageBounds: return "BadVoltageBounds";
    case DiagnosticCode::BadGeneratorLimits: return "BadGeneratorLimits";
    case DiagnosticCode::NegativeQuadraticCost: return "NegativeQuadraticCost";
    case DiagnosticCode::ZeroImpedance: return "ZeroImpedance";
    case DiagnosticCode::BadAngleBounds: return "BadAngleBounds";
    case DiagnosticCode::NoBuses: return "NoBuses";
    case DiagnosticCode::DisconnectedGraph: return "DisconnectedGraph";
  }
  return "Unknown";
}

std::vector<std::vector<int>> bus_adjacency(const NetworkCase& c) {
  std::vector<std::vector<int>> adj(c.buses.size());
  for (const auto& br : c.branches) {
    if (!br.in_service) continue;
    int f = c.bus_index(br.from_bus), t = c.bus_index(br.to_bus);
    if (f < 0 || t < 0 || f == t) continue;
    adj[f].push_back(t);
    adj[t].push_back(f);
  }
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  return adj;
}

std::vector<Diagnostic> validate_case(const NetworkCase& c) {
  std::vector<Diagnostic> out;
  auto add = [&](DiagnosticCode code, std::string loc, int ref, std::string msg) {
    out.push_back({code, std::move(loc), ref, std::move(msg)});
  };

  if (!(c.base_mva > 0.0)) add(DiagnosticCode::BadBaseMva, "baseMVA", 0, "baseMVA must be > 0");
  if (c.buses.empty()) {
    add(DiagnosticCode::NoBuses, "bus", 0, "case has no buses");
    return out;
  }

  std::set<int> ids;
  for (const auto& b : c.buses) {
    std::string loc = "bus " + std::to_string(b.id);
    if (!ids.insert(b.id).second)
      add(DiagnosticCode::DuplicateBusId, loc, b.id, "duplicate bus id");
    if (!(b.vmin > 0.0 && b.vmin <= b.vmax))
      add(DiagnosticCode::BadVoltageBounds, loc, b.id, "require 0 < vmin <= vmax");
  }

  for (std::size_t k = 0; k < c.generators.size(); ++k) {
    const auto& g = c.generators[k];
    std::string loc = "generator " + std::to_string(k + 1);
    if (!ids.count(g.bus))
      add(DiagnosticCode::DanglingBusRef, loc, g.bus,
          "references nonexistent bus " + std::to_string(g.bus));
    if (g.pmin > g.pmax || g.qmin > g.qmax)
      add(DiagnosticCode::BadGeneratorLimits, loc, g.bus, "min limit exceeds max limit");
    if (g.cost.c2 < 0.0)
      add(DiagnosticCode::NegativeQuadraticCost, loc, g.bus, "quadratic cost must be >= 0");
  }

  bool dangling_branch = false;
  for (std::size_t k = 0; k < c.branches.size(); ++k) {
    const auto& br = c.branches[k];
    std::string loc = "branch " + std::to_string(k + 1);
    for (int end : {br.from_bus, br.to_bus}) {
      if (!ids.count(end)) {
        add(DiagnosticCode::DanglingBusRef, loc, end,
            "references nonexistent bus " + std::to_string(end));
        dangling_branch = true;
      }
    }
    if (br.in_service && br.r == 0.0 && br.x == 0.0)
      add(DiagnosticCode::ZeroImpedance, loc, br.from_bus, "r = x = 0 on in-service branch");
    const double lim = std::numbers::pi / 2.0;
    if (!(br.angmin > -lim && br.angmin <= br.angmax && br.angmax < lim))
      add(DiagnosticCode::BadAngleBounds, loc, br.from_bus, "require -pi/2 < angmin <= angmax < pi/2");
  }

  // connectivity over in-service branches; skipped when references are broken
  if (!dangling_branch) {
    auto adj = bus_adjacency(c);
    std::vector<char> seen(c.buses.size(), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    std::size_t reached = 1;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int v : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          ++reached;
          q.push(v);
        }
    }
    if (reached != c.buses.size())
      add(DiagnosticCode::DisconnectedGraph, "network", 0,
          "in-service network has " + std::to_string(c.buses.size() - reached) +
              " unreachable buses");
  }
  return out;
}

}  // namespace netdec
