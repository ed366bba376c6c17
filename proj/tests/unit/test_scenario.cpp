#include <gtest/gtest.h>

#include <string>

#include "formctl/errors.hpp"
#include "formctl/reference_fixtures.hpp"
#include "formctl/scenario.hpp"
#include "spatial7_plan.hpp"

namespace formctl {
namespace {

const std::string kDir = std::string(FORMCTL_SOURCE_DIR) + "/scenarios/";

const char* kMinimal = R"(name: tiny
formation:
  leaders: 3
  positions:
    - [0, 0, 0]
    - [1, 0, 0]
    - [0, 1, 0]
    - [1, 1, 0]
  constraints:
    - {agent: 4, neighbors: [1, 2, 3]}
plant:
  order: 1
maneuver:
  - interval: [0, 1]
)";

ErrorCode code_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kInvalidArgument;
}

std::string message_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(Scenario, MinimalDefaults) {
  const auto s = parse_scenario(kMinimal);
  EXPECT_EQ(s.name, "tiny");
  EXPECT_EQ(s.formation.size(), 4);
  EXPECT_EQ(s.formation.n_leaders, 3);
  EXPECT_EQ(s.constraints[0].agent, 3);
  EXPECT_EQ(s.constraints[0].neighbors, (std::vector<int>{0, 1, 2}));
  EXPECT_TRUE(s.constraints[0].weights.empty());
  EXPECT_EQ(s.m, 1);
  EXPECT_TRUE(s.gamma_m_auto);
  EXPECT_EQ(s.variant, FollowerVariant::kOmegaHat);
  EXPECT_EQ(s.sim.dt, 1e-3);
}

TEST(Scenario, BundledSpatial7LoadsVerbatim) {
  const auto s = load_scenario(kDir + "paper_sec5.scenario");
  const auto ref = fixtures::spatial7_formation();
  ASSERT_EQ(s.formation.size(), 7);
  for (int i = 0; i < 7; ++i) EXPECT_EQ(s.formation.positions[i], ref.positions[i]);
  EXPECT_EQ(s.formation.neighbors, ref.neighbors);
  const auto cs = fixtures::spatial7_constraints();
  for (std::size_t k = 0; k < cs.size(); ++k) EXPECT_EQ(s.constraints[k].weights, cs[k].weights);
  EXPECT_EQ(s.m, 3);

  const auto p = build_pipeline(s);
  EXPECT_LT((p.mats.omega_hat - fixtures::spatial7_omega_hat()).cwiseAbs().maxCoeff(), 1e-12);
  const auto plan = testing::spatial7_plan(fixtures::spatial7_coplanar_gl(), fixtures::spatial7_colinear_gl());
  ASSERT_EQ(s.plan.segments.size(), plan.segments.size());
  for (double t = 0.0; t <= 16.0; t += 0.37) {
    const auto a = desired_formation(t, s.plan, p.shape);
    const auto b = desired_formation(t, plan, p.shape);
    for (int i = 0; i < 7; ++i) EXPECT_LT((a[i] - b[i]).norm(), 1e-12) << t;
  }
  EXPECT_TRUE(p.gain_certificates.all_pass());
}

TEST(Scenario, AllBundledScenariosParse) {
  for (const char* name : {"paper_sec5", "planar6", "equilibrium", "m1_trivial", "velocity_only"}) {
    EXPECT_NO_THROW(load_scenario(kDir + name + ".scenario")) << name;
  }
}

TEST(Scenario, VelocityOnlyIsNotDetectable) {
  const auto s = load_scenario(kDir + "velocity_only.scenario");
  try {
    build_pipeline(s);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotDetectable);
  }
}

TEST(Scenario, EmptyManeuver) {
  std::string t = kMinimal;
  t.replace(t.find("maneuver:"), std::string::npos, "maneuver: []\n");
  EXPECT_EQ(code_of(t), ErrorCode::kValidationError);
}

TEST(Scenario, NeighborOutOfRange) {
  std::string t = kMinimal;
  t.replace(t.find("[1, 2, 3]"), 9, "[1, 2, 5]");
  EXPECT_EQ(code_of(t), ErrorCode::kValidationError);
}

TEST(Scenario, ConstraintOnLeader) {
  std::string t = kMinimal;
  t.replace(t.find("agent: 4"), 8, "agent: 2");
  EXPECT_EQ(code_of(t), ErrorCode::kValidationError);
}

TEST(Scenario, UnknownKeyNamesLine) {
  std::string t = kMinimal;
  t += "sim:\n  dt: 1.0e-3\n  dtt: 2\n";
  EXPECT_EQ(code_of(t), ErrorCode::kParseError);
  EXPECT_NE(message_of(t).find("line 17"), std::string::npos) << message_of(t);
  EXPECT_NE(message_of(t).find("dtt"), std::string::npos);
}

TEST(Scenario, MalformedYaml) {
  EXPECT_EQ(code_of("formation: [1, 2"), ErrorCode::kParseError);
  EXPECT_EQ(code_of("- 1\n- 2\n"), ErrorCode::kParseError);
}

TEST(Scenario, NonNumericField) {
  std::string t = kMinimal;
  t += "gains:\n  zeta: lots\n";
  EXPECT_EQ(code_of(t), ErrorCode::kParseError);
}

TEST(Scenario, PoleCountMustMatchOrder) {
  std::string t = kMinimal;
  t += "gains:\n  poles: [-1, -2]\n";
  EXPECT_EQ(code_of(t), ErrorCode::kValidationError);
}

TEST(Scenario, StepTooLarge) {
  std::string t = kMinimal;
  t += "sim:\n  dt: 0.05\n";
  EXPECT_EQ(code_of(t), ErrorCode::kValidationError);
}

TEST(Scenario, ExplicitGammaAndVariant) {
  std::string t = kMinimal;
  t += "gains:\n  gamma_m: 2.5\n  zeta: 1\nsim:\n  variant: relative\n  integrator: euler\n";
  const auto s = parse_scenario(t);
  EXPECT_FALSE(s.gamma_m_auto);
  EXPECT_EQ(s.gains.gamma_m, 2.5);
  EXPECT_EQ(s.variant, FollowerVariant::kRelative);
  EXPECT_EQ(s.sim.integrator, Integrator::kEuler);
  EXPECT_EQ(build_pipeline(s).gains.gamma_m, 2.5);
}

TEST(Scenario, ProfilesWithSines) {
  std::string t = kMinimal;
  t.replace(t.find("  - interval: [0, 1]\n"), std::string::npos,
            "  - interval: [0, 1]\n    scale: {poly: [1], sin: [[0.1, 2, 0.5]]}\n"
            "    translation: [[0, 1], 0, {poly: [2, 0, 1]}]\n");
  const auto s = parse_scenario(t);
  const auto& seg = s.plan.segments[0];
  EXPECT_NEAR(seg.scale.value(0.3), 1 + 0.1 * std::sin(0.6 + 0.5), 1e-15);
  EXPECT_NEAR(seg.translation.value(0.5).z(), 2.25, 1e-15);
  EXPECT_NEAR(seg.translation.value(0.5).x(), 0.5, 1e-15);
}

TEST(Scenario, MissingFile) {
  EXPECT_THROW(load_scenario(kDir + "does_not_exist.scenario"), Error);
}

}  // namespace
}  // namespace formctl
