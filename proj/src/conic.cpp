#include "netdec/conic.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "netdec/errors.hpp"

namespace netdec {

double Affine::eval(const std::vector<double>& x) const {
  double v = constant;
  for (const auto& t : terms) v += t.coef * x[t.var];
  return v;
}

int ConicProgram::add_variable(double lower, double upper, std::string name) {
  lower_.push_back(lower);
  upper_.push_back(upper);
  obj_.push_back(0.0);
  names_.push_back(std::move(name));
  return num_vars() - 1;
}

void ConicProgram::set_bounds(int var, double lower, double upper) {
  lower_.at(var) = lower;
  upper_.at(var) = upper;
}

void ConicProgram::set_objective(int var, double coef) { obj_.at(var) = coef; }
void ConicProgram::add_objective(int var, double coef) { obj_.at(var) += coef; }

int ConicProgram::add_row(std::vector<Term> terms, double lower, double upper) {
  rows_.push_back({std::move(terms), lower, upper});
  return static_cast<int>(rows_.size()) - 1;
}

int ConicProgram::add_soc(std::vector<Affine> entries) {
  socs_.push_back({std::move(entries)});
  return static_cast<int>(socs_.size()) - 1;
}

namespace {

Affine combine(const Affine& a, double sa, const Affine& b, double sb) {
  Affine r;
  r.constant = sa * a.constant + sb * b.constant;
  for (const auto& t : a.terms) r.terms.push_back({t.var, sa * t.coef});
  for (const auto& t : b.terms) r.terms.push_back({t.var, sb * t.coef});
  return r;
}

Affine scaled(const Affine& a, double s) { return combine(a, s, Affine{}, 0.0); }

}  // namespace

int ConicProgram::add_rotated_soc(const Affine& x, const Affine& y, const std::vector<Affine>& z) {
  std::vector<Affine> e;
  e.push_back(combine(x, 1.0, y, 1.0));
  for (const auto& zi : z) e.push_back(scaled(zi, 2.0));
  e.push_back(combine(x, 1.0, y, -1.0));
  return add_soc(std::move(e));
}

int ConicProgram::add_psd(PsdBlock block) {
  psds_.push_back(std::move(block));
  return static_cast<int>(psds_.size()) - 1;
}

double ConicProgram::objective_value(const std::vector<double>& x) const {
  double v = obj_const_;
  for (int i = 0; i < num_vars(); ++i) v += obj_[i] * x[i];
  return v;
}

double ConicProgram::data_norm() const {
  double m = std::abs(obj_const_);
  auto fin = [&](double v) {
    if (std::isfinite(v)) m = std::max(m, std::abs(v));
  };
  for (int i = 0; i < num_vars(); ++i) {
    fin(lower_[i]);
    fin(upper_[i]);
    fin(obj_[i]);
  }
  auto aff = [&](const Affine& a) {
    fin(a.constant);
    for (const auto& t : a.terms) fin(t.coef);
  };
  for (const auto& r : rows_) {
    fin(r.lower);
    fin(r.upper);
    for (const auto& t : r.terms) fin(t.coef);
  }
  for (const auto& s : socs_)
    for (const auto& e : s.entries) aff(e);
  for (const auto& p : psds_)
    for (const auto& e : p.entries) aff(e.expr);
  return m;
}

void ConicProgram::validate() const {
  const int n = num_vars();
  auto check_terms = [&](const std::vector<Term>& terms, const std::string& where) {
    for (const auto& t : terms) {
      if (t.var < 0 || t.var >= n)
        throw DimensionMismatch(where + " references variable " + std::to_string(t.var) +
                                " of " + std::to_string(n));
      if (!std::isfinite(t.coef)) throw InvalidCase(where + " has a non-finite coefficient");
    }
  };
  for (int i = 0; i < n; ++i) {
    if (std::isnan(lower_[i]) || std::isnan(upper_[i]) || lower_[i] > upper_[i] ||
        lower_[i] == kInf || upper_[i] == -kInf)
      throw InvalidCase("variable " + std::to_string(i) + " has invalid bounds");
    if (!std::isfinite(obj_[i])) throw InvalidCase("non-finite objective coefficient");
  }
  if (!std::isfinite(obj_const_)) throw InvalidCase("non-finite objective constant");
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const auto& row = rows_[r];
    std::string where = "row " + std::to_string(r);
    check_terms(row.terms, where);
    if (std::isnan(row.lower) || std::isnan(row.upper) || row.lower > row.upper ||
        row.lower == kInf || row.upper == -kInf)
      throw InvalidCase(where + " has invalid bounds");
  }
  for (std::size_t s = 0; s < socs_.size(); ++s) {
    std::string where = "soc " + std::to_string(s);
    if (socs_[s].entries.empty()) throw DimensionMismatch(where + " is empty");
    for (const auto& e : socs_[s].entries) {
      check_terms(e.terms, where);
      if (!std::isfinite(e.constant)) throw InvalidCase(where + " has a non-finite constant");
    }
  }
  for (std::size_t p = 0; p < psds_.size(); ++p) {
    const auto& blk = psds_[p];
    std::string where = "psd " + std::to_string(p);
    if (blk.dim <= 0) throw DimensionMismatch(where + " has nonpositive dimension");
    std::map<std::pair<int, int>, int> seen;
    for (const auto& e : blk.entries) {
      if (e.row < e.col || e.col < 0 || e.row >= blk.dim)
        throw DimensionMismatch(where + " entry (" + std::to_string(e.row) + "," +
                                std::to_string(e.col) + ") is outside the lower triangle");
      if (seen[{e.row, e.col}]++)
        throw DimensionMismatch(where + " repeats entry (" + std::to_string(e.row) + "," +
                                std::to_string(e.col) + ")");
      check_terms(e.expr.terms, where);
      if (!std::isfinite(e.expr.constant)) throw InvalidCase(where + " has a non-finite constant");
    }
  }
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::OPTIMAL: return "OPTIMAL";
    case SolveStatus::INFEASIBLE: return "INFEASIBLE";
    case SolveStatus::UNBOUNDED: return "UNBOUNDED";
    case SolveStatus::NUMERICAL_LIMIT: return "NUMERICAL_LIMIT";
    case SolveStatus::ITERATION_LIMIT: return "ITERATION_LIMIT";
  }
  return "UNKNOWN";
}

double ResidualReport::worst() const { return std::max({bounds, linear, soc, psd}); }

ResidualReport check_solution(const ConicProgram& p, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != p.num_vars())
    throw DimensionMismatch("solution has " + std::to_string(x.size()) + " values for " +
                            std::to_string(p.num_vars()) + " variables");
  ResidualReport rep;
  for (int i = 0; i < p.num_vars(); ++i) {
    rep.bounds = std::max(rep.bounds, p.lower(i) - x[i]);
    rep.bounds = std::max(rep.bounds, x[i] - p.upper(i));
  }
  for (const auto& row : p.rows()) {
    double v = 0.0;
    for (const auto& t : row.terms) v += t.coef * x[t.var];
    rep.linear = std::max({rep.linear, row.lower - v, v - row.upper});
  }
  for (const auto& s : p.socs()) {
    double head = s.entries[0].eval(x);
    double tail = 0.0;
    for (std::size_t j = 1; j < s.entries.size(); ++j) tail += std::pow(s.entries[j].eval(x), 2);
    rep.soc = std::max(rep.soc, std::sqrt(tail) - head);
  }
  for (const auto& blk : p.psds()) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(blk.dim, blk.dim);
    for (const auto& e : blk.entries) {
      double v = e.expr.eval(x);
      m(e.row, e.col) = v;
      m(e.col, e.row) = v;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    rep.psd = std::max(rep.psd, -es.eigenvalues().minCoeff());
  }
  return rep;
}

namespace {

void fmt(std::ostringstream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

}  // namespace

std::string to_cbf(const ConicProgram& p) {
  // Rows: bounds, linear rows, SOC blocks. PSD templates go to PSDCON.
  struct Con {
    std::string cone;
    std::vector<std::vector<Term>> rows;
    std::vector<double> consts;
  };
  std::vector<Con> cons;
  auto single = [&](std::string cone, std::vector<Term> terms, double c) {
    cons.push_back({std::move(cone), {std::move(terms)}, {c}});
  };
  for (int i = 0; i < p.num_vars(); ++i) {
    double lo = p.lower(i), up = p.upper(i);
    if (lo == up) {
      single("L=", {{i, 1.0}}, -lo);
      continue;
    }
    if (std::isfinite(lo)) single("L+", {{i, 1.0}}, -lo);
    if (std::isfinite(up)) single("L-", {{i, 1.0}}, -up);
  }
  for (const auto& r : p.rows()) {
    if (r.lower == r.upper) {
      single("L=", r.terms, -r.lower);
      continue;
    }
    if (std::isfinite(r.lower)) single("L+", r.terms, -r.lower);
    if (std::isfinite(r.upper)) single("L-", r.terms, -r.upper);
  }
  for (const auto& s : p.socs()) {
    Con c{"Q", {}, {}};
    for (const auto& e : s.entries) {
      c.rows.push_back(e.terms);
      c.consts.push_back(e.constant);
    }
    cons.push_back(std::move(c));
  }

  std::size_t nrows = 0;
  for (const auto& c : cons) nrows += c.rows.size();

  std::ostringstream os;
  os << "VER\n3\n\nOBJSENSE\nMIN\n\nVAR\n" << p.num_vars() << " 1\nF " << p.num_vars() << "\n\n";
  if (!p.psds().empty()) {
    os << "PSDCON\n" << p.psds().size() << "\n";
    for (const auto& b : p.psds()) os << b.dim << "\n";
    os << "\n";
  }
  if (nrows > 0) {
    os << "CON\n" << nrows << " " << cons.size() << "\n";
    for (const auto& c : cons) os << c.cone << " " << c.rows.size() << "\n";
    os << "\n";
  }

  std::vector<std::pair<int, double>> obj;
  for (int i = 0; i < p.num_vars(); ++i)
    if (p.objective()[i] != 0.0) obj.emplace_back(i, p.objective()[i]);
  if (!obj.empty()) {
    os << "OBJACOORD\n" << obj.size() << "\n";
    for (auto [i, v] : obj) {
      os << i << " ";
      fmt(os, v);
      os << "\n";
    }
    os << "\n";
  }
  if (p.objective_constant() != 0.0) {
    os << "OBJBCOORD\n";
    fmt(os, p.objective_constant());
    os << "\n\n";
  }

  std::ostringstream a, b;
  std::size_t na = 0, nb = 0, row = 0;
  for (const auto& c : cons) {
    for (std::size_t k = 0; k < c.rows.size(); ++k, ++row) {
      std::map<int, double> merged;
      for (const auto& t : c.rows[k]) merged[t.var] += t.coef;
      for (auto [v, coef] : merged) {
        if (coef == 0.0) continue;
        a << row << " " << v << " ";
        fmt(a, coef);
        a << "\n";
        ++na;
      }
      if (c.consts[k] != 0.0) {
        b << row << " ";
        fmt(b, c.consts[k]);
        b << "\n";
        ++nb;
      }
    }
  }
  if (na) os << "ACOORD\n" << na << "\n" << a.str() << "\n";
  if (nb) os << "BCOORD\n" << nb << "\n" << b.str() << "\n";

  std::ostringstream h, d;
  std::size_t nh = 0, nd = 0;
  for (std::size_t k = 0; k < p.psds().size(); ++k) {
    for (const auto& e : p.psds()[k].entries) {
      std::map<int, double> merged;
      for (const auto& t : e.expr.terms) merged[t.var] += t.coef;
      for (auto [v, coef] : merged) {
        if (coef == 0.0) continue;
        h << k << " " << v << " " << e.row << " " << e.col << " ";
        fmt(h, coef);
        h << "\n";
        ++nh;
      }
      if (e.expr.constant != 0.0) {
        d << k << " " << e.row << " " << e.col << " ";
        fmt(d, e.expr.constant);
        d << "\n";
        ++nd;
      }
    }
  }
  if (nh) os << "HCOORD\n" << nh << "\n" << h.str() << "\n";
  if (nd) os << "DCOORD\n" << nd << "\n" << d.str() << "\n";
  return os.str();
}

}  // namespace netdec
