#pragma once

#include <complex>
#include <vector>

#include "netdec/case.hpp"
#include "netdec/conic.hpp"
#include "netdec/model.hpp"
#include "netdec/partition.hpp"

namespace netdec {

enum class BoundKind { SOC, SDP, LD_ITER, LD_FINAL, ORACLE_UB };

std::string_view to_string(BoundKind k);

struct Bound {
  double value = 0.0;  // $/hr
  BoundKind kind = BoundKind::SOC;
  SolveStatus status = SolveStatus::OPTIMAL;
  double solve_time = 0.0;
};

/// Tolerances for monolithic relaxations and for Lagrangian subproblems.
SolverSettings monolithic_settings();
SolverSettings subproblem_settings();

ConicProgram soc_program(const NetworkCase& c);
ConicProgram sdp_program(const NetworkCase& c);

/// Statuses other than OPTIMAL are reported in Bound::status; the value is
/// then only meaningful for a certified NUMERICAL_LIMIT.
Bound soc_relaxation_bound(const NetworkCase& c, const SolverSettings& s = monolithic_settings());
Bound sdp_relaxation_bound(const NetworkCase& c, const SolverSettings& s = monolithic_settings());

/// Subproblem program: model rows, PSD block over the part's bus set and
/// objective f_k - lambda_k' y_k. Throws DimensionMismatch.
ConicProgram build_dual_subproblem(const SubModel& model, const std::vector<double>& lambda_k);

struct DualEvaluation {
  std::vector<double> mu;
  double total = 0.0;
  std::vector<double> per_part;
  std::vector<double> subgradient;
  std::vector<std::vector<double>> flows;  // y_k per part, coupling-slot order
  std::vector<double> part_times;
  std::vector<SolveStatus> statuses;
};

/// Solves the K subproblems for the multiplier mu (length 4|C|) on up to
/// `threads` workers, parts assigned round-robin. Throws SubproblemFailed.
DualEvaluation evaluate_dual_function(const std::vector<SubModel>& models, const Partition& p,
                                      const std::vector<double>& mu,
                                      const SolverSettings& s = subproblem_settings(),
                                      int threads = 1);

struct OracleResult {
  Bound bound;
  std::vector<std::complex<double>> voltages;  // by bus position
  std::vector<double> pg, qg;                  // by generator index (p.u.)
  long long points = 0;                        // grid points evaluated
};

/// Exhaustive grid search over voltage magnitudes and angles for cases with
/// at most three buses. Returns an upper bound (kind ORACLE_UB) or status
/// INFEASIBLE. Throws TooLarge.
OracleResult brute_force_acopf(const NetworkCase& c, double resolution);

}  // namespace netdec
