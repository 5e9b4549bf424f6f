#include "netdec/relax.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numbers>
#include <thread>

#include "netdec/bundle.hpp"
#include "netdec/errors.hpp"

namespace netdec {

std::string_view to_string(BoundKind k) {
  switch (k) {
    case BoundKind::SOC: return "SOC";
    case BoundKind::SDP: return "SDP";
    case BoundKind::LD_ITER: return "LD_ITER";
    case BoundKind::LD_FINAL: return "LD_FINAL";
    case BoundKind::ORACLE_UB: return "ORACLE_UB";
  }
  return "UNKNOWN";
}

SolverSettings monolithic_settings() {
  SolverSettings s;
  s.feas_tol = 1e-8;
  s.gap_tol = 1e-7;
  return s;
}

SolverSettings subproblem_settings() {
  SolverSettings s;
  s.feas_tol = 1e-9;
  s.gap_tol = 1e-8;
  return s;
}

ConicProgram soc_program(const NetworkCase& c) {
  SubModel m = build_fullmodel(c);
  add_pair_socs(m);
  return std::move(m.program);
}

ConicProgram build_dual_subproblem(const SubModel& model, const std::vector<double>& lambda_k) {
  if (lambda_k.size() != model.coupling_slots.size())
    throw DimensionMismatch("lambda has " + std::to_string(lambda_k.size()) +
                            " entries, part has " + std::to_string(model.coupling_slots.size()) +
                            " coupling slots");
  ConicProgram p = model.program;
  p.add_psd(real_embedding(model.windex, p));
  for (std::size_t i = 0; i < lambda_k.size(); ++i) p.add_objective(model.coupling_slots[i], -lambda_k[i]);
  return p;
}

ConicProgram sdp_program(const NetworkCase& c) { return build_dual_subproblem(build_fullmodel(c), {}); }

namespace {

Bound solve_bound(const ConicProgram& p, BoundKind kind, const SolverSettings& s) {
  Solution sol = solve(p, s);
  Bound b;
  b.kind = kind;
  b.status = sol.status;
  b.solve_time = sol.solve_time;
  if (sol.status == SolveStatus::OPTIMAL)
    b.value = sol.objective;
  else
    b.value = sol.dual_objective;
  return b;
}

}  // namespace

Bound soc_relaxation_bound(const NetworkCase& c, const SolverSettings& s) {
  return solve_bound(soc_program(c), BoundKind::SOC, s);
}

Bound sdp_relaxation_bound(const NetworkCase& c, const SolverSettings& s) {
  return solve_bound(sdp_program(c), BoundKind::SDP, s);
}

DualEvaluation evaluate_dual_function(const std::vector<SubModel>& models, const Partition& p,
                                      const std::vector<double>& mu, const SolverSettings& s,
                                      int threads) {
  const int K = static_cast<int>(models.size());
  auto lambdas = project_multipliers(mu, p);
  DualEvaluation ev;
  ev.mu = mu;
  ev.per_part.assign(K, 0.0);
  ev.flows.assign(K, {});
  ev.part_times.assign(K, 0.0);
  ev.statuses.assign(K, SolveStatus::OPTIMAL);
  std::vector<std::exception_ptr> errors(K);

  auto work = [&](int k) {
    try {
      ConicProgram prog = build_dual_subproblem(models[k], lambdas[k]);
      Solution sol = solve(prog, s);
      ev.statuses[k] = sol.status;
      ev.part_times[k] = sol.solve_time;
      if (sol.status == SolveStatus::OPTIMAL) {
        ev.per_part[k] = sol.objective;
      } else if (sol.status == SolveStatus::NUMERICAL_LIMIT && sol.dual_certified) {
        ev.per_part[k] = sol.dual_objective;
      } else {
        throw SubproblemFailed(k, std::string(to_string(sol.status)));
      }
      auto& y = ev.flows[k];
      for (int v : models[k].coupling_slots) y.push_back(sol.primal[v]);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };

  int T = std::clamp(threads, 1, std::max(1, K));
  if (T == 1) {
    for (int k = 0; k < K; ++k) work(k);
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < T; ++t)
      pool.emplace_back([&, t] {
        for (int k = t; k < K; k += T) work(k);
      });
  }
  for (int k = 0; k < K; ++k)
    if (errors[k]) std::rethrow_exception(errors[k]);

  ev.total = 0.0;
  for (double v : ev.per_part) ev.total += v;
  ev.subgradient.assign(mu.size(), 0.0);
  std::vector<std::size_t> cursor(K, 0);
  for (int cut = 0; cut < static_cast<int>(p.cuts.size()); ++cut) {
    int kp = p.cuts[cut].plus_part, km = p.cuts[cut].minus_part;
    for (int comp = 0; comp < 4; ++comp) {
      double yp = ev.flows[kp][cursor[kp] + comp];
      double ym = ev.flows[km][cursor[km] + comp];
      ev.subgradient[4 * cut + comp] = -(yp - ym);
    }
    cursor[kp] += 4;
    cursor[km] += 4;
  }
  return ev;
}

// ---------------------------------------------------------------------------
// grid oracle

namespace {

struct BusGens {
  std::vector<int> gens;
  double pmin = 0.0, pmax = 0.0, qmin = 0.0, qmax = 0.0;
};

// cost-minimal split of `total` among generators with box limits
double dispatch(const NetworkCase& c, const std::vector<int>& gens, double total,
                std::vector<double>& pg) {
  auto at = [&](double lam, int g) {
    const Generator& G = c.generators[g];
    if (G.cost.c2 > 0.0) return std::clamp((lam - G.cost.c1) / (2.0 * G.cost.c2), G.pmin, G.pmax);
    return lam > G.cost.c1 ? G.pmax : G.pmin;
  };
  if (gens.size() == 1) {
    pg[gens[0]] = total;
    return c.generators[gens[0]].cost(total);
  }
  double lo = -1e12, hi = 1e12;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double sum = 0.0;
    for (int g : gens) sum += at(mid, g);
    (sum < total ? lo : hi) = mid;
  }
  double lam = 0.5 * (lo + hi);
  double sum = 0.0;
  std::vector<int> linear_at_margin;
  for (int g : gens) {
    pg[g] = at(lam, g);
    sum += pg[g];
    const Generator& G = c.generators[g];
    if (G.cost.c2 == 0.0 && std::abs(G.cost.c1 - lam) <= 1e-6 * std::max(1.0, std::abs(lam)))
      linear_at_margin.push_back(g);
  }
  double rest = total - sum;
  for (int g : linear_at_margin) {
    const Generator& G = c.generators[g];
    double room = rest > 0 ? G.pmax - pg[g] : G.pmin - pg[g];
    double take = rest > 0 ? std::min(rest, room) : std::max(rest, room);
    pg[g] += take;
    rest -= take;
  }
  if (std::abs(rest) > 0.0 && !gens.empty()) pg[gens.front()] += rest;
  double cost = 0.0;
  for (int g : gens) cost += c.generators[g].cost(pg[g]);
  return cost;
}

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> g;
  if (hi <= lo) return {lo};
  int n = static_cast<int>(std::ceil((hi - lo) / step - 1e-9));
  for (int i = 0; i <= n; ++i) g.push_back(i == n ? hi : lo + i * step);
  return g;
}

}  // namespace

OracleResult brute_force_acopf(const NetworkCase& c, double res) {
  const int N = static_cast<int>(c.buses.size());
  if (N > 3) throw TooLarge("grid oracle handles at most 3 buses, case has " + std::to_string(N));
  if (N == 0) throw InvalidCase("case has no buses");
  if (!(res > 0.0)) throw ConfigError("oracle resolution must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  const double tol = 2.0 * res;

  int ref = 0;
  for (int i = 0; i < N; ++i)
    if (c.buses[i].type == BusType::REF) {
      ref = i;
      break;
    }
  std::vector<int> others;
  for (int i = 0; i < N; ++i)
    if (i != ref) others.push_back(i);

  struct Line {
    int f, t;
    BranchAdmittance y;
    double amin, amax, smax;
  };
  std::vector<Line> lines;
  double amax_abs = 0.0;
  for (const auto& br : c.branches) {
    if (!br.in_service) continue;
    lines.push_back({c.bus_index(br.from_bus), c.bus_index(br.to_bus), admittance_parameters(br),
                     br.angmin, br.angmax, br.s_max});
    amax_abs = std::max({amax_abs, std::abs(br.angmin), std::abs(br.angmax)});
  }
  const double A = std::min(std::numbers::pi / 2.0, (N - 1) * amax_abs);

  std::vector<BusGens> bg(N);
  for (int g = 0; g < static_cast<int>(c.generators.size()); ++g) {
    const Generator& G = c.generators[g];
    if (!G.in_service) continue;
    BusGens& b = bg[c.bus_index(G.bus)];
    b.gens.push_back(g);
    b.pmin += G.pmin;
    b.pmax += G.pmax;
    b.qmin += G.qmin;
    b.qmax += G.qmax;
  }

  std::vector<std::vector<double>> vgrid(N);
  for (int i = 0; i < N; ++i) vgrid[i] = grid(c.buses[i].vmin, c.buses[i].vmax, res);
  const std::vector<double> agrid = grid(-A, A, res);

  OracleResult best;
  best.bound.kind = BoundKind::ORACLE_UB;
  best.bound.status = SolveStatus::INFEASIBLE;
  best.bound.value = kInf;
  std::vector<double> theta(N, 0.0), vm(N, 1.0);
  std::vector<double> pg(c.generators.size(), 0.0), qg(c.generators.size(), 0.0);
  std::vector<std::complex<double>> v(N);

  auto angles_ok = [&](int upto) {
    // lines whose endpoints are ref or among the first `upto` others
    for (const auto& l : lines) {
      auto known = [&](int b) {
        if (b == ref) return true;
        for (int k = 0; k < upto; ++k)
          if (others[k] == b) return true;
        return false;
      };
      if (!known(l.f) || !known(l.t)) continue;
      double d = theta[l.f] - theta[l.t];
      if (d < l.amin || d > l.amax) return false;
    }
    return true;
  };

  std::vector<double> pinj(N), qinj(N);
  auto evaluate = [&]() {
    ++best.points;
    for (int i = 0; i < N; ++i) {
      v[i] = std::polar(vm[i], theta[i]);
      double v2 = vm[i] * vm[i];
      pinj[i] = c.buses[i].pd + c.buses[i].gs * v2;
      qinj[i] = c.buses[i].qd - c.buses[i].bs * v2;
    }
    for (const auto& l : lines) {
      auto vi = v[l.f], vj = v[l.t];
      std::complex<double> sf = vi * std::conj(l.y.y_ff * vi + l.y.y_ft * vj);
      std::complex<double> st = vj * std::conj(l.y.y_tf * vi + l.y.y_tt * vj);
      if (l.smax > 0.0 && (std::abs(sf) > l.smax + tol || std::abs(st) > l.smax + tol)) return;
      pinj[l.f] += sf.real();
      qinj[l.f] += sf.imag();
      pinj[l.t] += st.real();
      qinj[l.t] += st.imag();
    }
    double cost = 0.0;
    for (int i = 0; i < N; ++i) {
      const BusGens& b = bg[i];
      if (b.gens.empty()) {
        if (std::abs(pinj[i]) > tol || std::abs(qinj[i]) > tol) return;
        continue;
      }
      if (pinj[i] < b.pmin - tol || pinj[i] > b.pmax + tol) return;
      if (qinj[i] < b.qmin - tol || qinj[i] > b.qmax + tol) return;
    }
    for (int i = 0; i < N; ++i) {
      const BusGens& b = bg[i];
      if (b.gens.empty()) continue;
      double p = std::clamp(pinj[i], b.pmin, b.pmax);
      cost += dispatch(c, b.gens, p, pg);
      if (cost >= best.bound.value) return;
    }
    best.bound.value = cost;
    best.bound.status = SolveStatus::OPTIMAL;
    best.voltages = v;
    best.pg = pg;
    best.qg.assign(c.generators.size(), 0.0);
    for (int i = 0; i < N; ++i) {
      const BusGens& b = bg[i];
      double q = std::clamp(qinj[i], b.qmin, b.qmax);
      for (int g : b.gens) {
        // split reactive output proportionally within limits
        const Generator& G = c.generators[g];
        double span = b.qmax - b.qmin;
        double frac = span > 0.0 ? (q - b.qmin) / span : 0.0;
        best.qg[g] = G.qmin + frac * (G.qmax - G.qmin);
      }
    }
  };

  const int M = static_cast<int>(others.size());
  auto voltages = [&](auto&& self, int d) -> void {
    if (d == N) {
      evaluate();
      return;
    }
    for (double x : vgrid[d]) {
      vm[d] = x;
      self(self, d + 1);
    }
  };
  auto angles = [&](auto&& self, int d) -> void {
    if (d == M) {
      voltages(voltages, 0);
      return;
    }
    for (double a : agrid) {
      theta[others[d]] = a;
      if (!angles_ok(d + 1)) continue;
      self(self, d + 1);
    }
  };
  angles(angles, 0);

  best.bound.solve_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (best.bound.status != SolveStatus::OPTIMAL) best.bound.value = kInf;
  return best;
}

}  // namespace netdec
