#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "netdec/errors.hpp"
#include "netdec/run.hpp"

using namespace netdec;
using json = nlohmann::json;

namespace {

std::string data(const std::string& rel) { return std::string(NETDEC_DATA_DIR) + "/" + rel; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("netdec_test_" + name)).string();
}

RunConfig base(const std::string& case_rel, Mode mode) {
  RunConfig cfg;
  cfg.case_path = data(case_rel);
  cfg.mode = mode;
  cfg.reference_file = data("reference_objectives.json");
  return cfg;
}

}  // namespace

TEST(Gap, Arithmetic) {
  EXPECT_DOUBLE_EQ(compute_gap(100.0, 100.0), 0.0);
  EXPECT_NEAR(compute_gap(90.0, 100.0), 10.0, 1e-12);
  EXPECT_NEAR(compute_gap(-110.0, -100.0), 10.0, 1e-12);
  EXPECT_LT(compute_gap(101.0, 100.0), 0.0);
  EXPECT_THROW(compute_gap(1.0, 0.0), ZeroReference);
}

TEST(Ordering, Classification) {
  EXPECT_EQ(check_ordering(100.0, 150.0, 200.0).status, "ok");
  EXPECT_EQ(check_ordering(std::nullopt, 150.0, std::nullopt).status, "unchecked");
  // tolerance is 0.2 for an SDP value of 200
  EXPECT_EQ(check_ordering(100.0, 200.15, 200.0).status, "ok");
  EXPECT_EQ(check_ordering(100.0, 200.3, 200.0).status, "warning");
  EXPECT_EQ(check_ordering(100.0, 200.5, 200.0).status, "violation");
  EXPECT_EQ(check_ordering(100.0, 99.5, 200.0).status, "violation");
  Ordering o = check_ordering(std::nullopt, 0.5, 0.4);
  EXPECT_DOUBLE_EQ(o.tolerance, 1e-3);
}

TEST(Config, Validation) {
  RunConfig cfg = base("cases/two_bus.m", Mode::Bound);
  EXPECT_NO_THROW(cfg.validate());
  RunConfig bad = cfg;
  bad.bundle.eps = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.bundle.m_l = 0.5;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.parts = 2;
  bad.partition_file = "p.json";
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.case_path.clear();
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_EQ(parse_mode("relax-sdp"), Mode::RelaxSdp);
  EXPECT_EQ(to_string(Mode::Oracle), "oracle");
  EXPECT_THROW(parse_mode("solve"), ConfigError);
}

TEST(Reference, Lookup) {
  auto v = lookup_reference(data("reference_objectives.json"), "pglib_opf_case5_pjm");
  ASSERT_TRUE(v.has_value());
  EXPECT_DOUBLE_EQ(*v, 17551.89);
  EXPECT_FALSE(lookup_reference(data("reference_objectives.json"), "two_bus").has_value());
  EXPECT_THROW(lookup_reference("/nonexistent/ref.json", "x"), IoError);
  std::string bad = temp_path("bad_ref.json");
  std::ofstream(bad) << "{\"objectives\": 3}";
  EXPECT_THROW(lookup_reference(bad, "x"), ConfigError);
  std::remove(bad.c_str());
}

TEST(Run, ParseModeReportsCounts) {
  BoundReport r = run(base("pglib/pglib_opf_case14_ieee__api.m", Mode::Parse));
  EXPECT_TRUE(r.error_code.empty());
  EXPECT_EQ(r.buses, 14);
  EXPECT_EQ(r.branches, 20);
  EXPECT_EQ(exit_code(r), kExitOk);
}

TEST(Run, MissingCaseIsAnError) {
  RunConfig cfg = base("cases/does_not_exist.m", Mode::RelaxSoc);
  BoundReport r = run(cfg);
  EXPECT_EQ(r.error_code, "IoError");
  EXPECT_EQ(r.termination, "error");
  EXPECT_EQ(exit_code(r), kExitError);
  json j = json::parse(report_json(r));
  EXPECT_EQ(j["error"]["code"], "IoError");
}

TEST(Run, MalformedCaseIsAnError) {
  BoundReport r = run(base("malformed/bad_number.m", Mode::Parse));
  EXPECT_EQ(r.error_code, "SyntaxError");
  EXPECT_EQ(exit_code(r), kExitError);
}

TEST(Run, PartitionMode) {
  RunConfig cfg = base("pglib/pglib_opf_case30_ieee.m", Mode::Partition);
  cfg.parts = 3;
  BoundReport r = run(cfg);
  ASSERT_TRUE(r.error_code.empty()) << r.error;
  EXPECT_EQ(r.parts, 3);
  json j = json::parse(report_json(r));
  EXPECT_EQ(j["partition"]["num_parts"], 3);
  EXPECT_EQ(j["partition"]["assignment"].size(), 30u);
}

TEST(Run, RelaxSdpGapOnCase5) {
  BoundReport r = run(base("pglib/pglib_opf_case5_pjm.m", Mode::RelaxSdp));
  ASSERT_TRUE(r.error_code.empty()) << r.error;
  ASSERT_TRUE(r.gap_sdp.has_value());
  EXPECT_NEAR(*r.gap_sdp, 5.22, 0.5);
  EXPECT_FALSE(r.gap_soc.has_value());
}

TEST(Run, GapsOnlyWithReference) {
  RunConfig cfg = base("cases/two_bus_oracle.m", Mode::RelaxSoc);
  BoundReport r = run(cfg);
  json j = json::parse(report_json(r));
  EXPECT_FALSE(j.contains("gaps"));
  EXPECT_FALSE(j.contains("reference_objective"));

  cfg.ref_objective = 1200.0;
  r = run(cfg);
  j = json::parse(report_json(r));
  ASSERT_TRUE(j.contains("gaps"));
  EXPECT_NEAR(j["gaps"]["soc"].get<double>(), compute_gap(r.soc->value, 1200.0), 1e-12);
}

TEST(Run, FlagOverridesMetadata) {
  RunConfig cfg = base("pglib/pglib_opf_case5_pjm.m", Mode::RelaxSoc);
  cfg.ref_objective = 20000.0;
  BoundReport r = run(cfg);
  ASSERT_TRUE(r.ref_objective.has_value());
  EXPECT_DOUBLE_EQ(*r.ref_objective, 20000.0);
}

TEST(Run, BoundModeOnOracleCase) {
  RunConfig cfg = base("cases/three_bus_oracle.m", Mode::Bound);
  cfg.parts = 2;
  cfg.with_baselines = true;
  int records = 0;
  BoundReport r = run(cfg, [&](const IterationRecord&) { ++records; });
  ASSERT_TRUE(r.error_code.empty()) << r.error;
  EXPECT_EQ(r.termination, "converged");
  EXPECT_EQ(records, static_cast<int>(r.trajectory.size()));
  ASSERT_TRUE(r.ld_final && r.soc && r.sdp);
  EXPECT_EQ(r.ordering.status, "ok");
  EXPECT_LE(*r.ld_final, r.sdp->value + 1e-3 * r.sdp->value);
  double best = *r.ld_initial;
  for (const auto& rec : r.trajectory) {
    if (rec.step != StepType::Null) best = std::max(best, rec.d_trial);
    EXPECT_LE(rec.d_trial, *r.ld_final + 1e-9);
  }
  EXPECT_DOUBLE_EQ(*r.ld_final, best);
  EXPECT_EQ(exit_code(r), kExitOk);
}

TEST(Run, SinglePartMatchesSdp) {
  RunConfig cfg = base("cases/two_bus_oracle.m", Mode::Bound);
  cfg.parts = 1;
  cfg.with_baselines = true;
  BoundReport r = run(cfg);
  ASSERT_TRUE(r.error_code.empty()) << r.error;
  EXPECT_EQ(r.cut_lines, 0);
  EXPECT_NEAR(*r.ld_final, r.sdp->value, 1e-6 * std::abs(r.sdp->value));
}

TEST(Run, OrderingViolationExitCode) {
  BoundReport r;
  r.ordering.status = "violation";
  EXPECT_EQ(exit_code(r), kExitOrdering);
  r.ordering.status = "warning";
  EXPECT_EQ(exit_code(r), kExitOk);
  r.error_code = "MasterFailed";
  EXPECT_EQ(exit_code(r), kExitError);
}

TEST(Report, StructuredSchema) {
  RunConfig cfg = base("cases/two_bus_oracle.m", Mode::Bound);
  cfg.parts = 2;
  BoundReport r = run(cfg);
  json j = json::parse(report_json(r));
  EXPECT_EQ(nlohmann::ordered_json::parse(report_json(r)).begin().key(), "schema_version");
  EXPECT_EQ(j["schema_version"], kSchemaVersion);
  for (const char* key : {"mode", "case", "parameters", "bounds", "ordering", "termination",
                          "iterations", "error", "diagnostics", "timings"})
    EXPECT_TRUE(j.contains(key)) << key;
  for (const char* key : {"name", "buses", "branches", "parts", "cut_lines"})
    EXPECT_TRUE(j["case"].contains(key)) << key;
  EXPECT_EQ(j["bounds"]["ld_trajectory"].size(), r.trajectory.size());
  EXPECT_TRUE(j["timings"].contains("subproblems"));

  json quiet = json::parse(report_json(r, false));
  EXPECT_FALSE(quiet.contains("timings"));
  EXPECT_FALSE(quiet["bounds"]["ld_trajectory"][0].contains("wall_time"));
}

TEST(Report, ReEmitIsByteIdentical) {
  RunConfig cfg = base("cases/two_bus_oracle.m", Mode::Bound);
  cfg.parts = 2;
  BoundReport r = run(cfg);
  std::string a = temp_path("a.json"), b = temp_path("b.json");
  emit_report(r, OutputFormat::Structured, a);
  emit_report(r, OutputFormat::Structured, b);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_FALSE(slurp(a).empty());
  std::remove(a.c_str());
  std::remove(b.c_str());
}

TEST(Report, CsvOneRowPerTrial) {
  RunConfig cfg = base("cases/two_bus_oracle.m", Mode::Bound);
  cfg.parts = 2;
  BoundReport r = run(cfg);
  std::string csv = trajectory_csv(r);
  std::istringstream in(csv);
  std::string header, line;
  std::getline(in, header);
  EXPECT_EQ(header,
            "iteration,step,serious_steps,null_steps,d_center,d_trial,m,v,u,master_time,wall_time,"
            "part_time_1,part_time_2");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), std::count(header.begin(), header.end(), ','));
  }
  EXPECT_EQ(rows, r.trajectory.size());
}

TEST(Report, UnwritablePath) {
  BoundReport r;
  EXPECT_THROW(emit_report(r, OutputFormat::Csv, "/nonexistent/dir/out.csv"), IoError);
}
