// Acceptance checks. Prints one PASS/FAIL line per criterion, preceded by
// indented detail lines. Exits nonzero only on an internal error, or on any
// FAIL when run with --strict.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "netdec/errors.hpp"
#include "netdec/model.hpp"
#include "netdec/run.hpp"

using namespace netdec;

namespace {

std::string data(const std::string& rel) { return std::string(NETDEC_DATA_DIR) + "/" + rel; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class... Args>
void detail(const char* fmt, Args... args) {
  std::printf("  ");
  std::printf(fmt, args...);
  std::printf("\n");
  std::fflush(stdout);
}

int failures = 0;

void verdict(int id, bool pass, const std::string& what) {
  std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", what.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

struct GatingCase {
  std::string file;
  int parts;
  double soc_gap, sdp_gap, ld_gap;  // published gaps
  int nodes, edges;
};

const std::vector<GatingCase> kGating = {
    {"pglib_opf_case5_pjm", 2, 14.55, 5.22, 5.31, 5, 6},
    {"pglib_opf_case14_ieee__api", 2, 5.13, 0.02, 1.14, 14, 20},
    {"pglib_opf_case30_ieee", 3, 18.84, 0.02, 1.45, 30, 41},
};

RunConfig bound_config(const std::string& path, int parts) {
  RunConfig cfg;
  cfg.case_path = path;
  cfg.mode = Mode::Bound;
  cfg.parts = parts;
  cfg.with_baselines = true;
  cfg.reference_file = data("reference_objectives.json");
  cfg.bundle.eps = 1e-4;
  cfg.bundle.max_iter = 200;
  return cfg;
}

// ---------------------------------------------------------------------------

void table_reproduction(const std::vector<BoundReport>& runs) {
  bool pass = true;
  for (std::size_t i = 0; i < kGating.size(); ++i) {
    const GatingCase& g = kGating[i];
    const BoundReport& r = runs[i];
    if (!r.error_code.empty() || !r.gap_soc || !r.gap_sdp || !r.gap_ld) {
      detail("%s: run incomplete (%s %s)", g.file.c_str(), r.error_code.c_str(), r.error.c_str());
      pass = false;
      continue;
    }
    bool soc = std::abs(*r.gap_soc - g.soc_gap) <= 0.5;
    bool sdp = std::abs(*r.gap_sdp - g.sdp_gap) <= 0.5;
    bool ld = std::abs(*r.gap_ld - g.ld_gap) <= 1.0;
    detail("%s K=%d: SOC gap %.3f (%.2f +-0.5) %s | SDP gap %.3f (%.2f +-0.5) %s | LD gap %.3f (%.2f +-1.0) %s | %.1fs",
           g.file.c_str(), g.parts, *r.gap_soc, g.soc_gap, soc ? "ok" : "out", *r.gap_sdp, g.sdp_gap,
           sdp ? "ok" : "out", *r.gap_ld, g.ld_gap, ld ? "ok" : "out", r.total_time);
    pass = pass && soc && sdp && ld;
  }
  verdict(1, pass, "published gap table reproduced on gating cases");
}

void ordering(const std::vector<BoundReport>& runs) {
  bool pass = true;
  for (std::size_t i = 0; i < kGating.size(); ++i) {
    const BoundReport& r = runs[i];
    if (!r.ld_final || !r.soc || !r.sdp) {
      pass = false;
      continue;
    }
    Ordering o = check_ordering(r.soc->value, *r.ld_final, r.sdp->value);
    detail("%s: SOC %.4f <= LD %.4f <= SDP %.4f (tol %.4f): %s", kGating[i].file.c_str(),
           r.soc->value, *r.ld_final, r.sdp->value, o.tolerance, o.status.c_str());
    pass = pass && (o.status == "ok" || o.status == "warning");
  }
  verdict(2, pass, "SOC <= LD <= SDP within tolerance");
}

void single_partition() {
  bool pass = true;
  for (const std::string& file : {data("pglib/pglib_opf_case5_pjm.m"), data("pglib/pglib_opf_case14_ieee__api.m"),
                                  data("cases/two_bus_oracle.m"), data("cases/three_bus_oracle.m")}) {
    BoundReport r = run(bound_config(file, 1));
    if (!r.error_code.empty() || !r.ld_final || !r.sdp) {
      detail("%s: run failed (%s)", file.c_str(), r.error.c_str());
      pass = false;
      continue;
    }
    double rel = std::abs(*r.ld_final - r.sdp->value) / std::max(1.0, std::abs(r.sdp->value));
    detail("%s: LD %.9f SDP %.9f relative difference %.2e", r.case_name.c_str(), *r.ld_final,
           r.sdp->value, rel);
    pass = pass && rel <= 1e-6;
  }
  verdict(3, pass, "K=1 dual bound equals the SDP bound to 1e-6");
}

void oracle_validity() {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  for (const std::string& name : {"two_bus_oracle", "three_bus_oracle"}) {
    NetworkCase c = load_matpower(data("cases/" + name + ".m"));
    OracleResult o = brute_force_acopf(c, 1e-3);
    if (o.bound.status != SolveStatus::OPTIMAL) {
      detail("%s: oracle found no feasible point", name.c_str());
      pass = false;
      continue;
    }
    double cap = o.bound.value + 1e-4 * std::abs(o.bound.value);
    BoundReport r = run(bound_config(data("cases/" + name + ".m"), 2));
    if (!r.error_code.empty() || !r.soc || !r.sdp) {
      detail("%s: bound run failed (%s)", name.c_str(), r.error.c_str());
      pass = false;
      continue;
    }
    double worst_ld = -INFINITY;
    for (const auto& rec : r.trajectory) worst_ld = std::max(worst_ld, rec.d_trial);
    bool ok = r.soc->value <= cap && r.sdp->value <= cap && worst_ld <= cap;
    detail("%s: oracle %.4f (%lld points) | SOC %.4f SDP %.4f max LD iterate %.4f (%zu iterates) %s",
           name.c_str(), o.bound.value, o.points, r.soc->value, r.sdp->value, worst_ld,
           r.trajectory.size(), ok ? "ok" : "exceeds");
    pass = pass && ok;
  }
  double elapsed = seconds_since(t0);
  detail("elapsed %.1fs (limit 60s)", elapsed);
  verdict(4, pass && elapsed < 60.0, "brute-force oracle dominates every bound");
}

void bundle_invariants(const std::vector<BoundReport>& runs) {
  bool pass = true;
  for (std::size_t i = 0; i < kGating.size(); ++i) {
    const BoundReport& r = runs[i];
    bool v_ok = r.min_scaled_v >= -1e-9;
    bool increasing = true;
    for (const auto& rec : r.trajectory)
      if (rec.step == StepType::Serious && rec.v > 0.0 && !(rec.d_trial > rec.d_center)) increasing = false;
    bool terminated = r.termination == "converged" && r.iterations <= 200;
    bool below_ref = true;
    if (r.ref_objective)
      for (const auto& rec : r.trajectory)
        if (rec.d_trial > *r.ref_objective) below_ref = false;
    detail("%s: min v/(1+|D|) %.3e %s | serious steps increasing %s | %s after %d iterations | trials <= reference %s",
           kGating[i].file.c_str(), r.min_scaled_v, v_ok ? "ok" : "below -1e-9",
           increasing ? "yes" : "no", r.termination.c_str(), r.iterations, below_ref ? "yes" : "no");
    pass = pass && v_ok && increasing && terminated && below_ref && r.ref_objective.has_value();
  }
  verdict(5, pass, "bundle invariants over full runs");
}

void supergradient() {
  NetworkCase c = load_matpower(data("cases/two_bus_oracle.m"));
  Partition p = partition_greedy(c, 2);
  std::vector<SubModel> models;
  for (int k = 0; k < p.num_parts; ++k) models.push_back(build_submodel(c, p, k));
  const std::size_t n = 4 * p.cuts.size();

  std::mt19937 rng(6);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double h = 1.0;
  double worst = -INFINITY;
  bool pass = true;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> mu(n), d(n);
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mu[i] = 500.0 * normal(rng);
      d[i] = normal(rng);
      norm += d[i] * d[i];
    }
    norm = std::sqrt(norm);
    for (double& x : d) x /= norm;
    try {
      DualEvaluation base = evaluate_dual_function(models, p, mu);
      double slope = 0.0;
      for (std::size_t i = 0; i < n; ++i) slope += base.subgradient[i] * d[i];
      for (double sign : {1.0, -1.0}) {
        std::vector<double> step = mu;
        for (std::size_t i = 0; i < n; ++i) step[i] += sign * h * d[i];
        double fd = (evaluate_dual_function(models, p, step).total - base.total) / h;
        worst = std::max(worst, fd - sign * slope);
      }
    } catch (const Error& e) {
      detail("evaluation failed: %s", e.what());
      pass = false;
    }
  }
  detail("two-bus split, 10 points, both directions: max(FD - g'd) = %.3e (tolerance 1e-4)", worst);
  verdict(6, pass && worst <= 1e-4, "finite differences respect the supergradient inequality");
}

void concavity() {
  NetworkCase c = load_matpower(data("pglib/pglib_opf_case5_pjm.m"));
  Partition p = partition_greedy(c, 2);
  std::vector<SubModel> models;
  for (int k = 0; k < p.num_parts; ++k) models.push_back(build_submodel(c, p, k));
  const std::size_t n = 4 * p.cuts.size();

  std::mt19937 rng(7);
  std::normal_distribution<double> normal(0.0, 500.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = -INFINITY;
  bool pass = true;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(n), b(n), mid(n);
    double t = unit(rng);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = normal(rng);
      b[i] = normal(rng);
      mid[i] = t * a[i] + (1.0 - t) * b[i];
    }
    try {
      double da = evaluate_dual_function(models, p, a).total;
      double db = evaluate_dual_function(models, p, b).total;
      double dm = evaluate_dual_function(models, p, mid).total;
      double chord = t * da + (1.0 - t) * db;
      worst = std::max(worst, (chord - dm) / (1.0 + std::abs(dm)));
    } catch (const Error& e) {
      detail("evaluation failed: %s", e.what());
      pass = false;
    }
  }
  detail("case5 K=2, 50 triples: max (chord - D(mid)) / (1+|D|) = %.3e (tolerance 1e-6)", worst);
  verdict(7, pass && worst <= 1e-6, "dual function is concave along random chords");
}

void parser_corpus() {
  bool pass = true;
  for (const GatingCase& g : kGating) {
    try {
      NetworkCase c = load_matpower(data("pglib/" + g.file + ".m"));
      bool ok = static_cast<int>(c.buses.size()) == g.nodes && static_cast<int>(c.branches.size()) == g.edges;
      detail("%s: %zu buses, %zu branches (expected %d, %d) %s", g.file.c_str(), c.buses.size(),
             c.branches.size(), g.nodes, g.edges, ok ? "ok" : "mismatch");
      pass = pass && ok;
    } catch (const Error& e) {
      detail("%s: %s %s", g.file.c_str(), e.code().c_str(), e.what());
      pass = false;
    }
  }

  std::ifstream readme(data("malformed/README"));
  std::string line;
  int checked = 0;
  while (std::getline(readme, line)) {
    std::istringstream in(line);
    std::string file, code;
    if (!(in >> file >> code) || file.size() < 3 || file.substr(file.size() - 2) != ".m") continue;
    std::string fragment;
    std::getline(in >> std::ws, fragment);
    std::string got_code = "none", got_what;
    try {
      load_matpower(data("malformed/" + file));
    } catch (const Error& e) {
      got_code = e.code();
      got_what = e.what();
    }
    // the error type is the contract; a listed line number must also match
    bool ok = got_code == code;
    if (fragment.rfind("line ", 0) == 0) ok = ok && got_what.rfind(fragment, 0) == 0;
    detail("%s: %s \"%s\" (expected %s \"%s\") %s", file.c_str(), got_code.c_str(), got_what.c_str(),
           code.c_str(), fragment.c_str(), ok ? "ok" : "wrong");
    pass = pass && ok;
    ++checked;
  }
  pass = pass && checked > 0;
  verdict(8, pass, "gating cases parse with published sizes; malformed files raise the listed errors");
}

bool same_numbers(const nlohmann::json& a, const nlohmann::json& b, double tol, std::string& where,
                  const std::string& path = "") {
  if (a.is_number() && b.is_number()) {
    double x = a.get<double>(), y = b.get<double>();
    if (std::abs(x - y) <= tol * std::max(1.0, std::abs(x))) return true;
    where = path;
    return false;
  }
  if (a.type() != b.type() || a.size() != b.size()) {
    where = path;
    return false;
  }
  if (a.is_object()) {
    for (auto it = a.begin(); it != a.end(); ++it)
      if (!b.contains(it.key()) || !same_numbers(*it, b[it.key()], tol, where, path + "/" + it.key()))
        return false;
    return true;
  }
  if (a.is_array()) {
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!same_numbers(a[i], b[i], tol, where, path + "/" + std::to_string(i))) return false;
    return true;
  }
  if (a != b) where = path;
  return a == b;
}

void determinism() {
  RunConfig cfg = bound_config(data("pglib/pglib_opf_case5_pjm.m"), 2);
  cfg.bundle.threads = 1;
  std::string first = report_json(run(cfg), false);
  std::string second = report_json(run(cfg), false);
  cfg.bundle.threads = 4;
  std::string threaded = report_json(run(cfg), false);

  std::string where;
  auto a = nlohmann::json::parse(first), b = nlohmann::json::parse(second), c = nlohmann::json::parse(threaded);
  bool repeat = same_numbers(a, b, 1e-9, where);
  detail("repeat run: %s%s%s", repeat ? "identical" : "differs at ", where.c_str(),
         first == second ? " (byte-identical)" : "");
  where.clear();
  bool threads = same_numbers(a, c, 1e-9, where);
  detail("1 vs 4 threads: %s%s%s", threads ? "identical" : "differs at ", where.c_str(),
         first == threaded ? " (byte-identical)" : "");
  verdict(9, repeat && threads && a["error"].is_null(), "reports are reproducible across runs and thread counts");
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = argc > 1 && std::string(argv[1]) == "--strict";
  try {
    std::vector<BoundReport> runs;
    for (const GatingCase& g : kGating) runs.push_back(run(bound_config(data("pglib/" + g.file + ".m"), g.parts)));

    table_reproduction(runs);
    ordering(runs);
    single_partition();
    oracle_validity();
    bundle_invariants(runs);
    supergradient();
    concavity();
    parser_corpus();
    determinism();
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
  std::printf("acceptance: %d of 9 criteria passed\n", 9 - failures);
  return strict && failures > 0 ? 1 : 0;
}
