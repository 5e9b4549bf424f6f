#pragma once

#include <optional>
#include <string>
#include <vector>

#include "netdec/bundle.hpp"
#include "netdec/case.hpp"
#include "netdec/relax.hpp"

namespace netdec {

enum class Mode { Parse, Partition, RelaxSoc, RelaxSdp, Bound, Oracle };
enum class OutputFormat { Structured, Csv };

std::string_view to_string(Mode m);
/// Throws ConfigError for an unknown name.
Mode parse_mode(std::string_view name);

inline constexpr int kSchemaVersion = 1;

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitOrdering = 2;

struct RunConfig {
  std::string case_path;
  Mode mode = Mode::Bound;
  int parts = 0;  // 0 picks default_num_parts
  std::string partition_file;
  int seed = 0;
  BundleParams bundle;
  std::optional<double> ref_objective;
  std::string reference_file;  // metadata lookup by case name when set
  bool with_baselines = false;
  double resolution = 1e-3;    // oracle grid step
  std::string out_path;        // empty writes to stdout
  OutputFormat format = OutputFormat::Structured;

  /// Throws ConfigError.
  void validate() const;
};

struct Ordering {
  std::string status = "unchecked";  // unchecked | ok | warning | violation
  double tolerance = 0.0;
  double lower_slack = 0.0;  // ld_final - (z_soc)
  double upper_slack = 0.0;  // z_sdp - ld_final
};

struct BoundReport {
  Mode mode = Mode::Bound;
  std::string case_name;
  int buses = 0;
  int branches = 0;
  int generators = 0;
  int parts = 0;
  int cut_lines = 0;
  std::vector<int> part_sizes;
  std::string partition_document;  // partition mode only
  std::vector<std::string> diagnostics;

  std::optional<Bound> soc, sdp;
  std::optional<OracleResult> oracle;
  std::vector<IterationRecord> trajectory;
  std::optional<double> ld_initial, ld_final;

  std::optional<double> ref_objective;
  std::optional<double> gap_soc, gap_sdp, gap_ld;
  Ordering ordering;

  std::vector<double> subproblem_times;  // accumulated per part
  double master_time = 0.0;
  double total_time = 0.0;
  int threads = 1;

  std::string termination;  // converged | max_iter | ... | completed | error
  int iterations = 0;
  double min_scaled_v = 0.0;  // smallest v / (1 + |D(center)|) seen by the bundle
  int consistency_warnings = 0;
  std::string error_code;
  std::string error;

  /// Echo of the bundle parameters used.
  BundleParams params;
  int seed = 0;
};

/// 100 (ref - bound) / |ref|. Throws ZeroReference.
double compute_gap(double bound, double ref);

/// Reference objective for a case name from the metadata file, if listed.
/// Throws IoError or ConfigError for an unreadable or malformed file.
std::optional<double> lookup_reference(const std::string& path, const std::string& case_name);

/// Ordering check z_soc - tol <= ld <= z_sdp + tol with
/// tol = 1e-3 max(1, |z_sdp|); up to 2 tol is a warning.
Ordering check_ordering(std::optional<double> soc, double ld, std::optional<double> sdp);

/// Runs the configured mode. Module errors are recorded in the report
/// together with whatever was computed before them.
BoundReport run(const RunConfig& config, const IterationSink& sink = {});

/// Structured document; timing and thread fields are left out when
/// `with_timing` is false.
std::string report_json(const BoundReport& r, bool with_timing = true);
/// One row per evaluated multiplier.
std::string trajectory_csv(const BoundReport& r);

/// Writes to `path`, or stdout for an empty path. Throws IoError.
void emit_report(const BoundReport& r, OutputFormat format, const std::string& path);

int exit_code(const BoundReport& r);

}  // namespace netdec
