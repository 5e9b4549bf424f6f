#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "netdec/errors.hpp"
#include "netdec/run.hpp"

#ifndef NETDEC_DEFAULT_REFERENCE
#define NETDEC_DEFAULT_REFERENCE ""
#endif

using namespace netdec;

namespace {

int env_threads() {
  const char* s = std::getenv("NETDEC_THREADS");
  if (!s || !*s) return 1;
  try {
    return std::max(1, std::stoi(s));
  } catch (const std::exception&) {
    return 1;
  }
}

void log_iteration(const IterationRecord& rec) {
  std::fprintf(stderr, "%4d %-7s r=%-3d l=%-3d D(c)=%.8g D(t)=%.8g v=%.3e u=%.3e t=%.2fs\n",
               rec.iteration, std::string(to_string(rec.step)).c_str(), rec.r, rec.l, rec.d_center,
               rec.d_trial, rec.v, rec.u, rec.wall_time);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lagrangian dual decomposition bounds for AC optimal power flow"};
  RunConfig cfg;
  cfg.bundle.threads = env_threads();
  if (std::filesystem::exists(NETDEC_DEFAULT_REFERENCE)) cfg.reference_file = NETDEC_DEFAULT_REFERENCE;

  std::string mode = "bound";
  std::string format = "structured";
  double ref = 0.0;
  bool quiet = false;

  app.add_option("mode", mode, "parse | partition | relax-soc | relax-sdp | bound | oracle")
      ->required()
      ->check(CLI::IsMember({"parse", "partition", "relax-soc", "relax-sdp", "bound", "oracle"}));
  app.add_option("--case", cfg.case_path, "MATPOWER case file")->required();
  auto* parts = app.add_option("--parts", cfg.parts, "number of parts");
  app.add_option("--partition-file", cfg.partition_file, "partition document")->excludes(parts);
  app.add_option("--seed", cfg.seed, "partitioner seed");
  app.add_option("--eps", cfg.bundle.eps, "bundle termination tolerance");
  app.add_option("--ml", cfg.bundle.m_l, "serious-step fraction m_L");
  app.add_option("--u0", cfg.bundle.u0, "initial proximity weight");
  app.add_option("--max-iter", cfg.bundle.max_iter, "bundle iteration limit");
  app.add_option("--max-cuts", cfg.bundle.max_cuts, "cuts kept per part");
  app.add_option("--threads", cfg.bundle.threads, "subproblem workers (default NETDEC_THREADS)");
  auto* ref_opt = app.add_option("--ref-objective", ref, "reference AC objective for gaps");
  app.add_option("--ref-file", cfg.reference_file, "reference objective metadata file");
  app.add_flag("--with-baselines", cfg.with_baselines, "also solve the SOC and SDP relaxations");
  app.add_flag("--strict-bundle", cfg.bundle.strict, "never evict cuts");
  auto* sub_tol = app.add_option("--sub-tol", cfg.bundle.subproblem.gap_tol,
                                 "subproblem feasibility and gap tolerance")
                      ->check(CLI::PositiveNumber);
  app.add_option("--resolution", cfg.resolution, "oracle grid step");
  app.add_option("--out", cfg.out_path, "output file (default stdout)");
  app.add_option("--format", format, "structured | csv")->check(CLI::IsMember({"structured", "csv"}));
  app.add_flag("-q,--quiet", quiet, "no iteration log on stderr");

  CLI11_PARSE(app, argc, argv);

  cfg.mode = parse_mode(mode);
  cfg.format = format == "csv" ? OutputFormat::Csv : OutputFormat::Structured;
  if (ref_opt->count() > 0) cfg.ref_objective = ref;
  if (sub_tol->count() > 0) cfg.bundle.subproblem.feas_tol = cfg.bundle.subproblem.gap_tol;

  BoundReport report = run(cfg, quiet ? IterationSink{} : IterationSink(log_iteration));
  try {
    emit_report(report, cfg.format, cfg.out_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
    return kExitError;
  }
  if (!report.error_code.empty())
    std::cerr << "error: " << report.error_code << ": " << report.error << "\n";
  else if (report.ordering.status == "violation")
    std::cerr << "error: bound ordering violated beyond tolerance\n";
  return exit_code(report);
}
