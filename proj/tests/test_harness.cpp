#include "polysmooth/harness.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

using namespace polysmooth;
namespace fs = std::filesystem;

namespace {

const std::string kData = POLYSMOOTH_DATA_DIR;

const std::vector<std::string> kCheap{"polytope.assumptions", "eta.contract", "smoothing.sandwich",
                                      "metric.hypotheses", "gaussmap.t_cot_t"};

ScenarioConfig cheap_config() {
  ScenarioConfig c = default_scenario();
  c.samples.eta = 2000;
  c.samples.random_points = 500;
  return c;
}

CheckRecord record(CheckStatus s) {
  CheckRecord r;
  r.id = "x";
  r.status = s;
  return r;
}

TEST(ExitCode, Precedence) {
  VerificationReport r;
  EXPECT_EQ(r.exit_code(), 0);
  r.checks = {record(CheckStatus::Pass), record(CheckStatus::Skipped)};
  EXPECT_EQ(r.exit_code(), 0);
  r.checks.push_back(record(CheckStatus::AssumptionFailed));
  EXPECT_EQ(r.exit_code(), 2);
  r.checks.push_back(record(CheckStatus::Fail));
  EXPECT_EQ(r.exit_code(), 1);
  r.checks.push_back(record(CheckStatus::Error));
  EXPECT_EQ(r.exit_code(), 3);
}

TEST(Registry, IdsUniqueAndAnchorsMatchManifest) {
  std::set<std::string> ids;
  for (const auto& c : check_registry()) {
    EXPECT_TRUE(ids.insert(c.id).second) << c.id;
    EXPECT_FALSE(c.anchor.empty()) << c.id;
  }
  std::ifstream in(kData + "/anchors.txt");
  ASSERT_TRUE(in.good());
  std::vector<std::string> manifest;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) manifest.push_back(line);
  EXPECT_EQ(registry_anchors(), manifest);
}

TEST(Suite, UnknownOnlyIdIsConfigError) {
  EXPECT_THROW(run_suite(cheap_config(), {"no.such_check"}), ConfigError);
  EXPECT_THROW(run_check("no.such_check", cheap_config()), ConfigError);
}

TEST(Suite, SubsetRunsSortedAndDeterministic) {
  const ScenarioConfig c = cheap_config();
  const VerificationReport a = run_suite(c, kCheap);
  ASSERT_EQ(a.checks.size(), kCheap.size());
  for (std::size_t i = 1; i < a.checks.size(); ++i) EXPECT_LT(a.checks[i - 1].id, a.checks[i].id);
  for (const auto& r : a.checks) EXPECT_EQ(r.status, CheckStatus::Pass) << r.id << ": " << r.note;
  EXPECT_EQ(a.exit_code(), 0);
  const VerificationReport b = run_suite(c, kCheap);
  EXPECT_EQ(report_to_json(a).dump(), report_to_json(b).dump());
}

TEST(Suite, SeedChangesSampledResiduals) {
  ScenarioConfig c = cheap_config();
  const CheckRecord a = run_check("smoothing.sandwich", c);
  c.seed = 2;
  const CheckRecord b = run_check("smoothing.sandwich", c);
  EXPECT_NE(a.worst_residual, b.worst_residual);
}

TEST(Suite, FailedMetricHypothesesGateDependentChecks) {
  ScenarioConfig c = load_scenario(kData + "/scenarios/cube-shear.json");
  c.samples.eta = 2000;
  const VerificationReport r =
      run_suite(c, {"metric.hypotheses", "surface.face_deficit", "gaussmap.angle_propagation", "eta.contract"});
  for (const auto& rec : r.checks) {
    if (rec.id == "metric.hypotheses") {
      EXPECT_EQ(rec.status, CheckStatus::AssumptionFailed);
    } else if (rec.id == "eta.contract") {
      EXPECT_EQ(rec.status, CheckStatus::Pass);
    } else {
      EXPECT_EQ(rec.status, CheckStatus::Skipped) << rec.id;
    }
  }
  EXPECT_EQ(r.exit_code(), 2);
}

TEST(Report, JsonShapeAndEmittedFiles) {
  const VerificationReport r = run_suite(cheap_config(), kCheap);
  const Json j = report_to_json(r);
  for (const char* key : {"scenario", "seed", "exit_code", "totals", "environment", "checks"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["checks"].size(), kCheap.size());
  EXPECT_EQ(j["environment"]["threads"], 1);

  const fs::path dir = fs::temp_directory_path() / "polysmooth_test_report";
  fs::remove_all(dir);
  const auto files = emit_report(r, dir.string());
  EXPECT_GE(files.size(), 2u);
  for (const auto& f : files) EXPECT_TRUE(fs::exists(f)) << f;
  std::ifstream in(dir / "report.json");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(Json::parse(ss.str()).dump(), j.dump());
  fs::remove_all(dir);
}

TEST(Report, EmptyReportIsValidJson) {
  VerificationReport r;
  r.scenario = "empty";
  const Json j = Json::parse(report_to_json(r).dump());
  EXPECT_TRUE(j["checks"].empty());
  EXPECT_EQ(j["exit_code"], 0);
  const std::string csv = summary_csv(r);
  EXPECT_EQ(csv.find('\n'), csv.size() - 1);  // header only
}

TEST(Report, DecayOutputs) {
  DecayTable t;
  t.rows = {{0.45, 100, 1.1, 1e-3, 0.1, 10, 0}, {0.3, 200, 1.1, 1e-4, 0.1, 10, 0}};
  t.slope_defined = true;
  t.slope = 5.7;
  const std::string csv = decay_csv(t);
  EXPECT_NE(csv.find("gamma,lambda0,sigma,morrey_sup"), std::string::npos);
  EXPECT_NE(decay_svg(t).find("<svg"), std::string::npos);
  HeatmapGrid h{4, 2, {0, 1e-3, 1e-2, 0, 0, 0, 1e-5, 0}, "t"};
  EXPECT_NE(heatmap_svg(h).find("<svg"), std::string::npos);
}

}  // namespace
