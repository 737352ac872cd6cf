#include "polysmooth/harness.hpp"
#include "polysmooth/io.hpp"
#include "polysmooth/shapes.hpp"

#include <gtest/gtest.h>

#include <string>

using namespace polysmooth;

namespace {

const std::string kData = POLYSMOOTH_DATA_DIR;

TEST(PolytopeJson, RoundTripPreservesFaces) {
  const Polytope P = regular_simplex(0.5);
  const Polytope Q = polytope_from_json(polytope_to_json(P));
  ASSERT_EQ(Q.face_count(), P.face_count());
  EXPECT_LT((Q.normal_matrix() - P.normal_matrix()).norm(), 1e-15);
  EXPECT_LT((Q.offsets() - P.offsets()).norm(), 1e-15);
}

TEST(PolytopeJson, LoadsShippedFiles) {
  for (const char* name : {"cube", "simplex", "pyramid", "obtuse"}) {
    const Polytope P = polytope_from_json(read_json_file(kData + "/polytopes/" + name + ".json"));
    EXPECT_EQ(P.dim(), 3) << name;
    EXPECT_GE(P.face_count(), 4) << name;
  }
}

TEST(PolytopeJson, RejectsMalformedInput) {
  EXPECT_THROW(polytope_from_json(Json::parse(R"({"n":3})")), ConfigError);
  EXPECT_THROW(polytope_from_json(Json::parse(R"({"n":3,"faces":[]})")), ConfigError);
  EXPECT_THROW(polytope_from_json(Json::parse(R"({"n":3,"faces":[{"normal":[1,0],"offset":0}]})")), ConfigError);
  EXPECT_THROW(polytope_from_json(Json::parse(R"({"n":3,"faces":[{"normal":[1,0,"x"],"offset":0}]})")),
               ConfigError);
}

TEST(MetricJson, RoundTripAllFamilies) {
  for (const char* name : {"euclidean", "conformal-vertex", "conformal-center", "shear", "mild-constant", "pullback"}) {
    const MetricField m = metric_from_json(read_json_file(kData + "/metrics/" + name + ".json"));
    const MetricField r = metric_from_json(metric_to_json(m));
    EXPECT_EQ(r.family(), m.family()) << name;
    const Vec x = Vec::Constant(3, 0.3);
    EXPECT_LT((r.g<double>(x) - m.g<double>(x)).norm(), 1e-14) << name;
  }
}

TEST(MetricJson, RejectsUnknownFamily) {
  EXPECT_THROW(metric_from_json(Json::parse(R"({"family":"hyperbolic","n":3})")), ConfigError);
}

TEST(ScheduleJson, ParsesGammaAndOptionalLambda) {
  const ScheduleSpec a = schedule_from_json(Json::parse(R"({"gamma":0.3})"));
  EXPECT_DOUBLE_EQ(a.gamma, 0.3);
  EXPECT_FALSE(a.lambda0.has_value());
  const ScheduleSpec b = schedule_from_json(Json::parse(R"({"gamma":0.2,"lambda0":50})"));
  ASSERT_TRUE(b.lambda0.has_value());
  EXPECT_DOUBLE_EQ(*b.lambda0, 50.0);
}

TEST(ParsePoint, AcceptsCommaSeparatedNumbers) {
  const Vec p = parse_point("0.5, -1e-3,2");
  ASSERT_EQ(p.size(), 3);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], -1e-3);
  EXPECT_DOUBLE_EQ(p[2], 2.0);
  EXPECT_THROW(parse_point("1,a,2"), ConfigError);
  EXPECT_THROW(parse_point(""), ConfigError);
}

TEST(Scenario, LoadsEveryShippedScenario) {
  for (const char* name : {"cube-euclidean", "cube-conformal-vertex", "cube-conformal-center", "cube-shear",
                           "cube-mild-constant", "cube-pullback", "simplex-conformal", "simplex-euclidean"}) {
    const ScenarioConfig c = load_scenario(kData + "/scenarios/" + name + ".json");
    EXPECT_EQ(c.name, name);
    EXPECT_EQ(c.polytope.dim(), 3) << name;
    EXPECT_EQ(c.metric.dim(), 3) << name;
    EXPECT_NO_THROW(c.validate()) << name;
  }
}

TEST(Scenario, JsonRoundTrip) {
  const ScenarioConfig c = load_scenario(kData + "/scenarios/cube-conformal-vertex.json");
  const ScenarioConfig r = scenario_from_json(scenario_to_json(c));
  EXPECT_EQ(scenario_to_json(r).dump(), scenario_to_json(c).dump());
}

TEST(Scenario, BuiltinShapesAndOverrides) {
  const ScenarioConfig c = scenario_from_json(Json::parse(
      R"({"name":"t","polytope":{"shape":"simplex"},"schedule":{"gamma":0.25,"lambda0":40},"seed":9,
          "tolerances":{"smoothing.sandwich.slack":1e-9}})"));
  EXPECT_EQ(c.polytope.face_count(), 4);
  EXPECT_DOUBLE_EQ(c.gamma, 0.25);
  ASSERT_TRUE(c.lambda0.has_value());
  EXPECT_DOUBLE_EQ(*c.lambda0, 40.0);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_DOUBLE_EQ(c.tolerance("smoothing.sandwich.slack", 1.0), 1e-9);
  EXPECT_DOUBLE_EQ(c.tolerance("other", 2.0), 2.0);
}

TEST(Scenario, ValidationRejectsBadValues) {
  ScenarioConfig c = default_scenario();
  c.gamma = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = default_scenario();
  c.sigma = 0.5;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(load_scenario(kData + "/does-not-exist.json"), ConfigError);
}

}  // namespace
