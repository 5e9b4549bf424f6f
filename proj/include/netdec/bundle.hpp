#pragma once

#include <functional>
#include <string>
#include <vector>

#include "netdec/partition.hpp"
#include "netdec/relax.hpp"

namespace netdec {

/// Per-part lambda_k over the part's coupling slots: +mu on lines whose
/// from-bus the part holds, -mu on the others. Throws DimensionMismatch.
std::vector<std::vector<double>> project_multipliers(const std::vector<double>& mu,
                                                     const Partition& p);

/// theta_k <= value + subgradient'(mu - anchor)
struct BundleCut {
  int part = 0;
  double value = 0.0;
  std::vector<double> subgradient;  // mu coordinates
  std::vector<double> anchor;
  int birth = 0;
  int last_active = 0;

  double at(const std::vector<double>& mu) const;
};

enum class StepType { Initial, Serious, Null };

std::string_view to_string(StepType s);

struct IterationRecord {
  int iteration = 0;
  int r = 0;
  int l = 0;
  StepType step = StepType::Initial;
  double d_center = 0.0;
  double d_trial = 0.0;
  double m = 0.0;
  double v = 0.0;
  double u = 0.0;
  std::vector<double> part_times;
  double master_time = 0.0;
  double wall_time = 0.0;
};

struct BundleParams {
  double eps = 1e-4;
  double m_l = 0.1;
  double u0 = 1.0;
  double u_min = 1e-6;
  double u_max = 1e9;
  int max_iter = 200;
  int max_cuts = 100;
  bool strict = false;  // never evict cuts
  int threads = 1;
  SolverSettings subproblem = subproblem_settings();
  SolverSettings master = [] {
    SolverSettings s;
    s.feas_tol = 1e-9;
    s.gap_tol = 1e-9;
    return s;
  }();
};

struct BundleState {
  std::vector<double> center_mu;
  double center_value = 0.0;
  std::vector<std::vector<BundleCut>> cuts;  // per part
  double u = 1.0;
  int r = 0;
  int l = 0;
  int null_streak = 0;
  int iteration = 0;
  std::vector<IterationRecord> history;
};

struct MasterResult {
  std::vector<double> mu;
  double m = 0.0;          // model value at mu
  double objective = 0.0;  // m - u ||mu - center||^2
  double solve_time = 0.0;
};

/// argmax of sum_k theta_k - u ||mu - center||^2 over the bundle. The
/// interior-point answer is polished on the active cuts. Throws MasterFailed.
MasterResult solve_master(const BundleState& state,
                          const SolverSettings& settings = BundleParams{}.master);

/// v = m - D(center)
double predicted_increase(const BundleState& state, double m);

/// Applies the serious/null test and the proximity-weight update; returns the
/// step taken. A serious step moves the center to `trial_mu`.
StepType step_decision(BundleState& state, const std::vector<double>& trial_mu,
                       double trial_value, double v, const BundleParams& params);

/// Adds one cut per part from an evaluation.
void add_cuts(BundleState& state, const DualEvaluation& ev, const Partition& p);

/// Drops the oldest cuts that were inactive at the last master solve until
/// every part holds at most `max_cuts`. The newest cut and cuts anchored at
/// the center are kept.
void evict_cuts(BundleState& state, int max_cuts);

struct BundleResult {
  BundleState state;
  double initial_value = 0.0;  // D at mu = 0
  double final_value = 0.0;    // best evaluated D (the final center)
  std::vector<double> final_mu;
  std::vector<double> trial_values;  // one per evaluation, initial first
  std::string termination;           // converged | max_iter | subproblem_failed | master_failed
  std::string error;
  int iterations = 0;
  int consistency_warnings = 0;  // v below -1e-6 (1 + |D|)
  double min_scaled_v = 0.0;     // smallest v / (1 + |D(center)|) before clamping
  double master_time = 0.0;
  double subproblem_time = 0.0;
};

using IterationSink = std::function<void(const IterationRecord&)>;

BundleResult run_bundle(const std::vector<SubModel>& models, const Partition& p,
                        const BundleParams& params, const IterationSink& sink = {});

}  // namespace netdec
