#pragma once

#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace netdec {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Term {
  int var;
  double coef;
};

struct Affine {
  std::vector<Term> terms;
  double constant = 0.0;

  Affine() = default;
  Affine(double c) : constant(c) {}
  static Affine var(int v, double coef = 1.0) {
    Affine a;
    a.terms.push_back({v, coef});
    return a;
  }
  Affine& add(int v, double coef) {
    terms.push_back({v, coef});
    return *this;
  }
  double eval(const std::vector<double>& x) const;
};

/// lower <= sum(coef * x[var]) <= upper. Equal bounds make an equality row.
struct LinearRow {
  std::vector<Term> terms;
  double lower = -kInf;
  double upper = kInf;
};

/// entries[0] >= || entries[1..] ||_2
struct SocBlock {
  std::vector<Affine> entries;
};

/// One lower-triangle entry (row >= col) of a symmetric matrix template.
/// Entries not listed are structural zeros.
struct PsdEntry {
  int row;
  int col;
  Affine expr;
};

struct PsdBlock {
  int dim = 0;
  std::vector<PsdEntry> entries;
};

/// Solver-agnostic conic program: minimize c'x + c0 subject to box bounds,
/// linear rows, second-order cones and PSD matrix templates.
class ConicProgram {
 public:
  int add_variable(double lower = -kInf, double upper = kInf, std::string name = {});
  void set_bounds(int var, double lower, double upper);
  void set_objective(int var, double coef);
  void add_objective(int var, double coef);
  void set_objective_constant(double c) { obj_const_ = c; }
  void add_objective_constant(double c) { obj_const_ += c; }

  int add_row(std::vector<Term> terms, double lower, double upper);
  int add_soc(std::vector<Affine> entries);
  /// x*y >= ||z||^2 with x, y >= 0, stored as ||(2z, x - y)|| <= x + y.
  int add_rotated_soc(const Affine& x, const Affine& y, const std::vector<Affine>& z);
  int add_psd(PsdBlock block);

  int num_vars() const { return static_cast<int>(lower_.size()); }
  double lower(int v) const { return lower_[v]; }
  double upper(int v) const { return upper_[v]; }
  const std::string& name(int v) const { return names_[v]; }
  const std::vector<double>& objective() const { return obj_; }
  double objective_constant() const { return obj_const_; }
  const std::vector<LinearRow>& rows() const { return rows_; }
  const std::vector<SocBlock>& socs() const { return socs_; }
  const std::vector<PsdBlock>& psds() const { return psds_; }

  double objective_value(const std::vector<double>& x) const;
  /// Largest absolute finite coefficient, bound or constant.
  double data_norm() const;
  /// Throws DimensionMismatch on out-of-range references or malformed
  /// templates, InvalidCase on non-finite data.
  void validate() const;

 private:
  std::vector<double> lower_, upper_, obj_;
  std::vector<std::string> names_;
  double obj_const_ = 0.0;
  std::vector<LinearRow> rows_;
  std::vector<SocBlock> socs_;
  std::vector<PsdBlock> psds_;
};

enum class SolveStatus { OPTIMAL, INFEASIBLE, UNBOUNDED, NUMERICAL_LIMIT, ITERATION_LIMIT };

std::string_view to_string(SolveStatus s);

struct SolverSettings {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  double time_limit = kInf;  // seconds
  int max_iter = 100;
  bool verbose = false;
};

struct Solution {
  SolveStatus status = SolveStatus::NUMERICAL_LIMIT;
  double objective = 0.0;       // primal objective c'x + c0
  double dual_objective = 0.0;  // dual bound at the final iterate
  /// For NUMERICAL_LIMIT: the dual iterate is feasible enough that
  /// dual_objective can be used as a lower bound.
  bool dual_certified = false;
  std::vector<double> primal;
  double solve_time = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

Solution solve(const ConicProgram& program, const SolverSettings& settings = {});

struct ResidualReport {
  double bounds = 0.0;
  double linear = 0.0;
  double soc = 0.0;
  double psd = 0.0;  // max(0, -lambda_min) over blocks

  double worst() const;
  bool within(double tol) const { return worst() <= tol; }
};

ResidualReport check_solution(const ConicProgram& program, const std::vector<double>& x);

/// Conic Benchmark Format (CBF v3) text for cross-checking with other solvers.
std::string to_cbf(const ConicProgram& program);

}  // namespace netdec
