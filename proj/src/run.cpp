#include "netdec/run.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "netdec/errors.hpp"
#include "netdec/model.hpp"
#include "netdec/partition.hpp"

namespace netdec {

namespace {

using json = nlohmann::ordered_json;

constexpr std::pair<Mode, std::string_view> kModes[] = {
    {Mode::Parse, "parse"},         {Mode::Partition, "partition"}, {Mode::RelaxSoc, "relax-soc"},
    {Mode::RelaxSdp, "relax-sdp"}, {Mode::Bound, "bound"},         {Mode::Oracle, "oracle"},
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

template <class T>
json optional_number(const std::optional<T>& x) {
  return x ? number(*x) : json(nullptr);
}

bool usable(const Bound& b) {
  return b.status == SolveStatus::OPTIMAL || b.status == SolveStatus::NUMERICAL_LIMIT;
}

json bound_json(const Bound& b, bool with_timing) {
  json j;
  j["value"] = number(b.value);
  j["kind"] = std::string(to_string(b.kind));
  j["status"] = std::string(to_string(b.status));
  if (with_timing) j["solve_time"] = b.solve_time;
  return j;
}

Partition make_partition(const RunConfig& cfg, const NetworkCase& c) {
  if (!cfg.partition_file.empty()) return load_partition_file(cfg.partition_file, c);
  int K = cfg.parts > 0 ? cfg.parts : default_num_parts(c);
  return partition_greedy(c, K, cfg.seed);
}

void describe_partition(BoundReport& r, const Partition& p) {
  r.parts = p.num_parts;
  r.cut_lines = static_cast<int>(p.cuts.size());
  r.part_sizes = partition_stats(p).sizes;
  for (const auto& d : p.diagnostics) r.diagnostics.push_back("partition: " + d);
}

void fill_gaps(BoundReport& r) {
  if (!r.ref_objective) return;
  double ref = *r.ref_objective;
  if (r.soc && usable(*r.soc)) r.gap_soc = compute_gap(r.soc->value, ref);
  if (r.sdp && usable(*r.sdp)) r.gap_sdp = compute_gap(r.sdp->value, ref);
  if (r.ld_final && std::isfinite(*r.ld_final)) r.gap_ld = compute_gap(*r.ld_final, ref);
}

void run_bound(const RunConfig& cfg, const NetworkCase& c, BoundReport& r,
               const IterationSink& sink) {
  Partition p = make_partition(cfg, c);
  describe_partition(r, p);

  if (cfg.with_baselines) {
    r.soc = soc_relaxation_bound(c);
    r.sdp = sdp_relaxation_bound(c);
  }

  std::vector<SubModel> models;
  models.reserve(p.num_parts);
  for (int k = 0; k < p.num_parts; ++k) models.push_back(build_submodel(c, p, k));

  BundleResult br = run_bundle(models, p, cfg.bundle, sink);
  r.trajectory = br.state.history;
  r.iterations = br.iterations;
  r.termination = br.termination;
  r.master_time = br.master_time;
  r.min_scaled_v = br.min_scaled_v;
  r.consistency_warnings = br.consistency_warnings;
  r.subproblem_times.assign(p.num_parts, 0.0);
  for (const auto& rec : r.trajectory)
    for (std::size_t k = 0; k < rec.part_times.size() && k < r.subproblem_times.size(); ++k)
      r.subproblem_times[k] += rec.part_times[k];
  if (br.consistency_warnings > 0)
    r.diagnostics.push_back("bundle: " + std::to_string(br.consistency_warnings) +
                            " negative predicted increases clamped");

  if (!r.trajectory.empty()) {
    r.ld_initial = br.initial_value;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& rec : r.trajectory) {
      bool moved = rec.step != StepType::Null;
      best = std::max(best, moved ? rec.d_trial : rec.d_center);
    }
    r.ld_final = best;
  }

  if (br.termination == "subproblem_failed") {
    r.error_code = "SubproblemFailed";
    r.error = br.error;
  } else if (br.termination == "master_failed") {
    r.error_code = "MasterFailed";
    r.error = br.error;
  }

  if (r.ld_final && std::isfinite(*r.ld_final) && (r.soc || r.sdp)) {
    std::optional<double> soc, sdp;
    if (r.soc && usable(*r.soc)) soc = r.soc->value;
    if (r.sdp && usable(*r.sdp)) sdp = r.sdp->value;
    r.ordering = check_ordering(soc, *r.ld_final, sdp);
    if (r.ordering.status == "warning")
      r.diagnostics.push_back("ordering: bound outside tolerance but within twice of it");
  }
}

}  // namespace

std::string_view to_string(Mode m) {
  for (const auto& [mode, name] : kModes)
    if (mode == m) return name;
  return "unknown";
}

Mode parse_mode(std::string_view name) {
  for (const auto& [mode, n] : kModes)
    if (n == name) return mode;
  throw ConfigError("unknown mode '" + std::string(name) + "'");
}

void RunConfig::validate() const {
  if (case_path.empty()) throw ConfigError("no case file given");
  if (!(bundle.eps > 0.0)) throw ConfigError("eps must be positive");
  if (!(bundle.m_l > 0.0 && bundle.m_l < 0.5)) throw ConfigError("m_L must lie in (0, 0.5)");
  if (!(bundle.u0 > 0.0)) throw ConfigError("u0 must be positive");
  if (bundle.max_iter < 0) throw ConfigError("max_iter must be non-negative");
  if (bundle.max_cuts < 1) throw ConfigError("max_cuts must be at least 1");
  if (bundle.threads < 1) throw ConfigError("threads must be at least 1");
  if (parts < 0) throw ConfigError("parts must be positive");
  if (parts > 0 && !partition_file.empty())
    throw ConfigError("give either a part count or a partition file, not both");
  if (mode == Mode::Oracle && !(resolution > 0.0)) throw ConfigError("resolution must be positive");
  if (ref_objective && !std::isfinite(*ref_objective)) throw ConfigError("reference objective must be finite");
}

double compute_gap(double bound, double ref) {
  if (ref == 0.0) throw ZeroReference("reference objective is zero");
  return 100.0 * (ref - bound) / std::abs(ref);
}

std::optional<double> lookup_reference(const std::string& path, const std::string& case_name) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read reference file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("reference file " + path + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("objectives") || !doc["objectives"].is_object())
    throw ConfigError("reference file " + path + ": missing 'objectives' object");
  const json& obj = doc["objectives"];
  auto it = obj.find(case_name);
  if (it == obj.end()) return std::nullopt;
  if (!it->is_number()) throw ConfigError("reference for " + case_name + " is not a number");
  return it->get<double>();
}

Ordering check_ordering(std::optional<double> soc, double ld, std::optional<double> sdp) {
  Ordering o;
  o.tolerance = 1e-3 * std::max(1.0, sdp ? std::abs(*sdp) : std::abs(ld));
  double worst = 0.0;
  if (soc) {
    o.lower_slack = ld - *soc;
    worst = std::max(worst, -o.lower_slack);
  }
  if (sdp) {
    o.upper_slack = *sdp - ld;
    worst = std::max(worst, -o.upper_slack);
  }
  if (!soc && !sdp) return o;
  if (worst <= o.tolerance)
    o.status = "ok";
  else if (worst <= 2.0 * o.tolerance)
    o.status = "warning";
  else
    o.status = "violation";
  return o;
}

BoundReport run(const RunConfig& cfg, const IterationSink& sink) {
  const auto t0 = std::chrono::steady_clock::now();
  BoundReport r;
  r.mode = cfg.mode;
  r.params = cfg.bundle;
  r.seed = cfg.seed;
  r.threads = cfg.bundle.threads;
  r.termination = "completed";
  try {
    cfg.validate();
    NetworkCase c = load_matpower(cfg.case_path);
    r.case_name = c.name;
    r.buses = static_cast<int>(c.buses.size());
    r.branches = static_cast<int>(c.branches.size());
    r.generators = static_cast<int>(c.generators.size());

    r.ref_objective = cfg.ref_objective;
    if (!r.ref_objective && !cfg.reference_file.empty())
      r.ref_objective = lookup_reference(cfg.reference_file, c.name);

    switch (cfg.mode) {
      case Mode::Parse:
        for (const auto& d : validate_case(c))
          r.diagnostics.push_back(std::string(to_string(d.code)) + " " + d.location + ": " + d.message);
        break;
      case Mode::Partition: {
        Partition p = make_partition(cfg, c);
        describe_partition(r, p);
        r.partition_document = partition_to_json(p, c);
        break;
      }
      case Mode::RelaxSoc:
        r.soc = soc_relaxation_bound(c);
        break;
      case Mode::RelaxSdp:
        r.sdp = sdp_relaxation_bound(c);
        break;
      case Mode::Oracle:
        r.oracle = brute_force_acopf(c, cfg.resolution);
        if (cfg.with_baselines) {
          r.soc = soc_relaxation_bound(c);
          r.sdp = sdp_relaxation_bound(c);
        }
        break;
      case Mode::Bound:
        run_bound(cfg, c, r, sink);
        break;
    }
    fill_gaps(r);
  } catch (const Error& e) {
    r.error_code = e.code();
    r.error = e.what();
  } catch (const std::exception& e) {
    r.error_code = "InternalError";
    r.error = e.what();
  }
  if (!r.error_code.empty()) r.termination = r.termination == "completed" ? "error" : r.termination;
  r.total_time = seconds_since(t0);
  return r;
}

std::string report_json(const BoundReport& r, bool with_timing) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["mode"] = std::string(to_string(r.mode));

  json cs;
  cs["name"] = r.case_name;
  cs["buses"] = r.buses;
  cs["branches"] = r.branches;
  cs["generators"] = r.generators;
  cs["parts"] = r.parts;
  cs["cut_lines"] = r.cut_lines;
  cs["part_sizes"] = r.part_sizes;
  j["case"] = cs;

  json params;
  params["eps"] = r.params.eps;
  params["m_l"] = r.params.m_l;
  params["u0"] = r.params.u0;
  params["max_iter"] = r.params.max_iter;
  params["max_cuts"] = r.params.max_cuts;
  params["strict"] = r.params.strict;
  params["seed"] = r.seed;
  j["parameters"] = params;

  json bounds = json::object();
  if (r.soc) bounds["soc"] = bound_json(*r.soc, with_timing);
  if (r.sdp) bounds["sdp"] = bound_json(*r.sdp, with_timing);
  if (r.oracle) {
    json o = bound_json(r.oracle->bound, with_timing);
    o["grid_points"] = r.oracle->points;
    bounds["oracle"] = o;
  }
  if (r.mode == Mode::Bound) {
    bounds["ld_initial"] = optional_number(r.ld_initial);
    bounds["ld_final"] = optional_number(r.ld_final);
    json traj = json::array();
    for (const auto& rec : r.trajectory) {
      json t;
      t["iteration"] = rec.iteration;
      t["step"] = std::string(to_string(rec.step));
      t["serious_steps"] = rec.r;
      t["null_steps"] = rec.l;
      t["d_center"] = number(rec.d_center);
      t["d_trial"] = number(rec.d_trial);
      t["m"] = number(rec.m);
      t["v"] = number(rec.v);
      t["u"] = rec.u;
      if (with_timing) {
        t["part_times"] = rec.part_times;
        t["master_time"] = rec.master_time;
        t["wall_time"] = rec.wall_time;
      }
      traj.push_back(t);
    }
    bounds["ld_trajectory"] = traj;
  }
  j["bounds"] = bounds;

  if (r.ref_objective) {
    j["reference_objective"] = *r.ref_objective;
    json g;
    if (r.soc) g["soc"] = optional_number(r.gap_soc);
    if (r.sdp) g["sdp"] = optional_number(r.gap_sdp);
    if (r.mode == Mode::Bound) g["ld_final"] = optional_number(r.gap_ld);
    j["gaps"] = g;
  }

  if (r.mode == Mode::Bound) {
    json o;
    o["status"] = r.ordering.status;
    o["tolerance"] = r.ordering.tolerance;
    o["lower_slack"] = r.ordering.lower_slack;
    o["upper_slack"] = r.ordering.upper_slack;
    j["ordering"] = o;
    j["bundle"] = json{{"min_scaled_v", r.min_scaled_v},
                       {"consistency_warnings", r.consistency_warnings}};
  }

  if (!r.partition_document.empty()) j["partition"] = json::parse(r.partition_document);

  j["termination"] = r.termination;
  j["iterations"] = r.iterations;
  if (r.error_code.empty()) {
    j["error"] = nullptr;
  } else {
    j["error"] = json{{"code", r.error_code}, {"message", r.error}};
  }
  j["diagnostics"] = r.diagnostics;

  if (with_timing) {
    json t;
    t["threads"] = r.threads;
    t["subproblems"] = r.subproblem_times;
    t["master"] = r.master_time;
    t["total"] = r.total_time;
    j["timings"] = t;
  }
  return j.dump(2) + "\n";
}

std::string trajectory_csv(const BoundReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "iteration,step,serious_steps,null_steps,d_center,d_trial,m,v,u,master_time,wall_time";
  for (int k = 1; k <= r.parts; ++k) out << ",part_time_" << k;
  out << "\n";
  for (const auto& rec : r.trajectory) {
    out << rec.iteration << ',' << to_string(rec.step) << ',' << rec.r << ',' << rec.l << ','
        << rec.d_center << ',' << rec.d_trial << ',' << rec.m << ',' << rec.v << ',' << rec.u << ','
        << rec.master_time << ',' << rec.wall_time;
    for (int k = 0; k < r.parts; ++k)
      out << ',' << (k < static_cast<int>(rec.part_times.size()) ? rec.part_times[k] : 0.0);
    out << "\n";
  }
  return out.str();
}

void emit_report(const BoundReport& r, OutputFormat format, const std::string& path) {
  std::string text = format == OutputFormat::Structured ? report_json(r) : trajectory_csv(r);
  if (path.empty()) {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  out.close();
  if (!out) throw IoError("write to " + path + " failed");
}

int exit_code(const BoundReport& r) {
  if (!r.error_code.empty()) return kExitError;
  if (r.ordering.status == "violation") return kExitOrdering;
  return kExitOk;
}

}  // namespace netdec
