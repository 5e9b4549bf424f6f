#include "netdec/bundle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "netdec/errors.hpp"

namespace netdec {

std::vector<std::vector<double>> project_multipliers(const std::vector<double>& mu,
                                                     const Partition& p) {
  if (mu.size() != 4 * p.cuts.size())
    throw DimensionMismatch("multiplier has " + std::to_string(mu.size()) + " entries, expected " +
                            std::to_string(4 * p.cuts.size()));
  std::vector<std::vector<double>> lambda(p.num_parts);
  for (int k = 0; k < p.num_parts; ++k)
    for (int cut : p.part_cuts[k]) {
      const double s = p.cuts[cut].plus_part == k ? 1.0 : -1.0;
      for (int comp = 0; comp < 4; ++comp) lambda[k].push_back(s * mu[4 * cut + comp]);
    }
  return lambda;
}

double BundleCut::at(const std::vector<double>& mu) const {
  double v = value;
  for (std::size_t i = 0; i < mu.size(); ++i) v += subgradient[i] * (mu[i] - anchor[i]);
  return v;
}

std::string_view to_string(StepType s) {
  switch (s) {
    case StepType::Initial: return "initial";
    case StepType::Serious: return "serious";
    case StepType::Null: return "null";
  }
  return "unknown";
}

namespace {

double model_value(const BundleState& s, const std::vector<double>& mu) {
  double m = 0.0;
  for (const auto& part : s.cuts) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : part) best = std::min(best, c.at(mu));
    m += best;
  }
  return m;
}

double dist2(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

// Solves the optimality system restricted to the cuts active at mu:
//   theta_k = cut_i(mu), 2u (mu - center) = sum alpha_i g_i, sum_{i in k} alpha_i = 1.
// Returns false when the system is singular or a multiplier is negative.
bool polish(const BundleState& s, std::vector<double>& mu) {
  const int n = static_cast<int>(mu.size());
  const int K = static_cast<int>(s.cuts.size());
  std::vector<std::pair<int, int>> active;
  for (int k = 0; k < K; ++k) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : s.cuts[k]) best = std::min(best, c.at(mu));
    const double tol = 1e-6 * (1.0 + std::abs(best));
    for (int i = 0; i < static_cast<int>(s.cuts[k].size()); ++i)
      if (s.cuts[k][i].at(mu) <= best + tol) active.push_back({k, i});
  }
  const int S = static_cast<int>(active.size());
  const int dim = n + K + S;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  for (int r = 0; r < S; ++r) {
    const BundleCut& c = s.cuts[active[r].first][active[r].second];
    M(r, n + active[r].first) = 1.0;
    rhs[r] = c.value;
    for (int j = 0; j < n; ++j) {
      M(r, j) = -c.subgradient[j];
      rhs[r] -= c.subgradient[j] * c.anchor[j];
    }
  }
  for (int j = 0; j < n; ++j) {
    M(S + j, j) = 2.0 * s.u;
    rhs[S + j] = 2.0 * s.u * s.center_mu[j];
    for (int r = 0; r < S; ++r)
      M(S + j, n + K + r) = -s.cuts[active[r].first][active[r].second].subgradient[j];
  }
  for (int r = 0; r < S; ++r) M(S + n + active[r].first, n + K + r) = 1.0;
  rhs.segment(S + n, K).setOnes();

  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible()) return false;
  Eigen::VectorXd z = lu.solve(rhs);
  if (!z.allFinite() || (M * z - rhs).lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + rhs.lpNorm<Eigen::Infinity>()))
    return false;
  for (int r = 0; r < S; ++r)
    if (z[n + K + r] < -1e-9) return false;
  for (int j = 0; j < n; ++j) mu[j] = z[j];
  return true;
}

}  // namespace

MasterResult solve_master(const BundleState& state, const SolverSettings& settings) {
  for (std::size_t k = 0; k < state.cuts.size(); ++k)
    if (state.cuts[k].empty()) throw MasterFailed("part " + std::to_string(k + 1) + " has no cuts");
  const std::vector<double>& mc = state.center_mu;
  const int n = static_cast<int>(mc.size());
  MasterResult res;
  if (n == 0) {
    res.m = res.objective = model_value(state, mc);
    return res;
  }
  if (!(state.u > 0.0)) throw MasterFailed("proximal weight must be positive");
  const double su = std::sqrt(state.u);

  // delta = sqrt(u) (mu - center); minimize -sum theta + t, t >= |delta|^2
  ConicProgram prog;
  std::vector<int> delta(n);
  for (int i = 0; i < n; ++i) delta[i] = prog.add_variable();
  const int t = prog.add_variable(0.0, kInf);
  prog.set_objective(t, 1.0);
  std::vector<Affine> z;
  for (int i = 0; i < n; ++i) z.push_back(Affine::var(delta[i]));
  prog.add_rotated_soc(Affine::var(t), Affine(1.0), z);
  for (const auto& part : state.cuts) {
    const int theta = prog.add_variable();
    prog.set_objective(theta, -1.0);
    for (const auto& c : part) {
      std::vector<Term> row{{theta, 1.0}};
      double rhs = c.value;
      for (int i = 0; i < n; ++i) {
        if (c.subgradient[i] != 0.0) row.push_back({delta[i], -c.subgradient[i] / su});
        rhs += c.subgradient[i] * (mc[i] - c.anchor[i]);
      }
      prog.add_row(std::move(row), -kInf, rhs);
    }
  }
  Solution sol = solve(prog, settings);
  res.solve_time = sol.solve_time;
  if (sol.status != SolveStatus::OPTIMAL && sol.primal.empty())
    throw MasterFailed("master problem returned " + std::string(to_string(sol.status)));

  auto prox = [&](const std::vector<double>& mu) { return model_value(state, mu) - state.u * dist2(mu, mc); };
  res.mu.resize(n);
  for (int i = 0; i < n; ++i) res.mu[i] = mc[i] + sol.primal[delta[i]] / su;
  std::vector<double> polished = res.mu;
  if (polish(state, polished) && prox(polished) >= prox(res.mu)) res.mu = std::move(polished);
  if (prox(res.mu) < model_value(state, mc)) res.mu = mc;
  res.m = model_value(state, res.mu);
  res.objective = prox(res.mu);
  return res;
}

double predicted_increase(const BundleState& state, double m) { return m - state.center_value; }

StepType step_decision(BundleState& state, const std::vector<double>& trial_mu, double trial_value,
                       double v, const BundleParams& params) {
  v = std::max(v, 0.0);
  const double gain = trial_value - state.center_value;
  if (gain >= params.m_l * v) {
    if (gain >= 0.5 * v) state.u = std::max(state.u / 2.0, params.u_min);
    state.center_mu = trial_mu;
    state.center_value = trial_value;
    ++state.r;
    state.l = 0;
    state.null_streak = 0;
    return StepType::Serious;
  }
  state.u = std::min(2.0 * state.u, params.u_max);
  ++state.l;
  ++state.null_streak;
  return StepType::Null;
}

void add_cuts(BundleState& state, const DualEvaluation& ev, const Partition& p) {
  const int K = p.num_parts;
  if (state.cuts.size() != static_cast<std::size_t>(K)) state.cuts.resize(K);
  for (int k = 0; k < K; ++k) {
    BundleCut c;
    c.part = k;
    c.value = ev.per_part[k];
    c.subgradient.assign(ev.mu.size(), 0.0);
    c.anchor = ev.mu;
    c.birth = state.iteration;
    c.last_active = state.iteration;
    std::size_t slot = 0;
    for (int cut : p.part_cuts[k]) {
      const double s = p.cuts[cut].plus_part == k ? 1.0 : -1.0;
      for (int comp = 0; comp < 4; ++comp) c.subgradient[4 * cut + comp] = -s * ev.flows[k][slot++];
    }
    state.cuts[k].push_back(std::move(c));
  }
}

void evict_cuts(BundleState& state, int max_cuts) {
  if (max_cuts < 1) return;
  for (auto& part : state.cuts) {
    while (static_cast<int>(part.size()) > max_cuts) {
      int newest = 0;
      for (const auto& c : part) newest = std::max(newest, c.birth);
      int victim = -1;
      for (int i = 0; i < static_cast<int>(part.size()); ++i) {
        const BundleCut& c = part[i];
        if (c.birth == newest || c.anchor == state.center_mu) continue;
        if (c.last_active >= state.iteration) continue;
        if (victim < 0 || c.birth < part[victim].birth) victim = i;
      }
      if (victim < 0) break;
      part.erase(part.begin() + victim);
    }
  }
}

namespace {

void mark_active(BundleState& state, const std::vector<double>& mu) {
  for (auto& part : state.cuts) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : part) best = std::min(best, c.at(mu));
    const double tol = 1e-8 * (1.0 + std::abs(best));
    for (auto& c : part)
      if (c.at(mu) <= best + tol) c.last_active = state.iteration;
  }
}

void check_params(const BundleParams& p) {
  if (!(p.eps > 0.0)) throw ConfigError("eps must be positive");
  if (!(p.m_l > 0.0 && p.m_l < 0.5)) throw ConfigError("m_L must lie in (0, 0.5)");
  if (!(p.u0 > 0.0) || !(p.u_min > 0.0) || p.u_min > p.u_max)
    throw ConfigError("proximal weights must satisfy 0 < u_min <= u_max and u0 > 0");
  if (p.max_iter < 0) throw ConfigError("max_iter must be nonnegative");
}

}  // namespace

BundleResult run_bundle(const std::vector<SubModel>& models, const Partition& p,
                        const BundleParams& params, const IterationSink& sink) {
  check_params(params);
  const auto t0 = std::chrono::steady_clock::now();
  auto wall = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  BundleResult res;
  BundleState& st = res.state;
  st.u = std::clamp(params.u0, params.u_min, params.u_max);
  st.center_mu.assign(4 * p.cuts.size(), 0.0);
  st.cuts.assign(p.num_parts, {});

  auto log = [&](IterationRecord rec) {
    rec.iteration = st.iteration;
    rec.r = st.r;
    rec.l = st.l;
    rec.u = st.u;
    rec.wall_time = wall();
    st.history.push_back(rec);
    if (sink) sink(st.history.back());
  };
  auto finish = [&](std::string reason) {
    res.termination = std::move(reason);
    res.final_value = st.center_value;
    res.final_mu = st.center_mu;
    res.iterations = st.iteration;
    return res;
  };

  DualEvaluation ev;
  try {
    ev = evaluate_dual_function(models, p, st.center_mu, params.subproblem, params.threads);
  } catch (const SubproblemFailed& e) {
    res.error = e.what();
    res.initial_value = -kInf;
    st.center_value = -kInf;
    return finish("subproblem_failed");
  }
  for (double t : ev.part_times) res.subproblem_time += t;
  st.center_value = ev.total;
  res.initial_value = ev.total;
  res.trial_values.push_back(ev.total);
  add_cuts(st, ev, p);
  {
    IterationRecord rec;
    rec.step = StepType::Initial;
    rec.d_center = rec.d_trial = rec.m = ev.total;
    rec.part_times = ev.part_times;
    log(rec);
  }
  if (st.center_mu.empty()) return finish("converged");

  while (st.iteration < params.max_iter) {
    ++st.iteration;
    MasterResult master;
    try {
      master = solve_master(st, params.master);
    } catch (const MasterFailed& e) {
      res.error = e.what();
      --st.iteration;
      return finish("master_failed");
    }
    res.master_time += master.solve_time;
    mark_active(st, master.mu);

    double v = predicted_increase(st, master.m);
    res.min_scaled_v = std::min(res.min_scaled_v, v / (1.0 + std::abs(st.center_value)));
    if (v < -1e-6 * (1.0 + std::abs(st.center_value))) ++res.consistency_warnings;
    v = std::max(v, 0.0);
    if (v <= params.eps * (1.0 + std::abs(st.center_value))) {
      --st.iteration;
      return finish("converged");
    }

    try {
      ev = evaluate_dual_function(models, p, master.mu, params.subproblem, params.threads);
    } catch (const SubproblemFailed& e) {
      res.error = e.what();
      return finish("subproblem_failed");
    }
    for (double t : ev.part_times) res.subproblem_time += t;
    res.trial_values.push_back(ev.total);
    add_cuts(st, ev, p);

    IterationRecord rec;
    rec.d_center = st.center_value;
    rec.d_trial = ev.total;
    rec.m = master.m;
    rec.v = v;
    rec.part_times = ev.part_times;
    rec.master_time = master.solve_time;
    rec.step = step_decision(st, master.mu, ev.total, v, params);
    log(rec);
    if (!params.strict) evict_cuts(st, params.max_cuts);
  }
  return finish("max_iter");
}

}  // namespace netdec
