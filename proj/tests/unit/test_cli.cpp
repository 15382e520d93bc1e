#include "vem/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace vem;
using namespace vem::cli;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"(# minimal rotation scenario
[grid]
lower = -1.6, -1.6
upper = 1.6, 1.6
h = 0.0625

[velocity]
kind = rigid_rotation

[surface]
shape = circle
radius = 1

[solver]
methods = grid
)";

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vem_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(ParseConfig, MinimalFillsDefaults) {
  const auto c = parse_config(kMinimal);
  EXPECT_EQ(c.grid.dim, 2);
  EXPECT_EQ(c.grid.h, 0.0625);
  EXPECT_EQ(c.dt, 1e-3);
  EXPECT_EQ(c.cfl, 0.5);
  EXPECT_EQ(c.r_star, 0.0);
  EXPECT_EQ(c.horizon, 1.0);
  EXPECT_TRUE(c.grid_solver);
  EXPECT_FALSE(c.moc);
  EXPECT_EQ(c.echo().at("solver.r_star"), "auto");
  EXPECT_EQ(c.surface.shape, SurfaceSpec::Shape::circle);
  EXPECT_EQ(c.velocity.kind, velocity::AnalyticFieldSpec::Kind::rigid_rotation);
}

TEST(ParseConfig, NegativeHorizonNamesInvariant) {
  try {
    parse_config(kMinimal, {"solver.horizon=-1"});
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("horizon > 0"), std::string::npos);
  }
}

TEST(ParseConfig, OnlyVersionOneIsAccepted) {
  EXPECT_NO_THROW(parse_config(std::string("[scenario]\nversion = 1\n") + kMinimal));
  try {
    parse_config(std::string("[scenario]\nversion = 2\n") + kMinimal);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("scenario.version = 1"), std::string::npos);
  }
}

TEST(ParseConfig, SurfaceOutsideBoxFailsMargin) {
  try {
    parse_config(kMinimal, {"surface.radius=1.5"});
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("margin >= 5h"), std::string::npos);
  }
  // 1.6 - 5h = 1.2875 is the largest admissible radius at h = 1/16.
  EXPECT_NO_THROW(parse_config(kMinimal, {"surface.radius=1.28"}));
  EXPECT_THROW(parse_config(kMinimal, {"surface.radius=1.29"}), ValidationError);
}

TEST(ParseConfig, SyntaxErrorsCarryLineAndColumn) {
  auto expect_at = [](const std::string& text, int line, int column) {
    try {
      parse_config(text);
      FAIL() << "expected a parse error for:\n" << text;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), line) << e.what();
      EXPECT_EQ(e.column(), column) << e.what();
    }
  };
  expect_at("[grid]\nlower -1, -1\n", 2, 1);
  expect_at("[grid\n", 1, 6);
  expect_at("[grids]\n", 1, 2);
  expect_at("[grid]\n  bogus = 1\n", 2, 3);
  expect_at("h = 1\n", 1, 1);
  expect_at("[grid]\nh = abc\n", 2, 5);
  expect_at("[grid]\nlower = -1, x\n", 2, 13);
  expect_at("[grid]\nh = 0.1\nh = 0.2\n", 3, 1);
}

TEST(ParseConfig, UnknownNamesAndExpressions) {
  EXPECT_THROW(parse_config(kMinimal, {"velocity.kind=swirl"}), ParseError);
  EXPECT_THROW(parse_config(kMinimal, {"solver.methods=grid, fancy"}), ParseError);
  EXPECT_THROW(parse_config(kMinimal, {"surface.shape=blob"}), ParseError);
  EXPECT_THROW(parse_config(kMinimal, {"nosuch.key=1"}), ParseError);
  EXPECT_THROW(parse_config(kMinimal, {"solver.cfl"}), ParseError);
  const auto ok = parse_config(kMinimal, {"velocity.kind=user_expression", "velocity.expr_x=-y",
                                          "velocity.expr_y=x"});
  EXPECT_EQ(ok.velocity.expressions[0], "-y");
  EXPECT_THROW(parse_config(kMinimal, {"velocity.expr_x=sin(x"}), ParseError);
}

TEST(ParseConfig, ProfilesAndMethods) {
  const auto c = parse_config(kMinimal, {"surface.profile=scaled_sdf", "surface.factor=2",
                                         "solver.methods=moc, nmm_beta, grid, nmm_beta"});
  EXPECT_EQ(c.surface.factor, 2.0);
  EXPECT_TRUE(c.moc);
  EXPECT_TRUE(c.grid_solver);
  ASSERT_EQ(c.baselines.size(), 1u);
  EXPECT_EQ(c.baselines[0], baselines::BaselineKind::nmm_beta);
  EXPECT_THROW(parse_config(kMinimal, {"surface.factor=2"}), ValidationError);
  EXPECT_THROW(parse_config(kMinimal, {"surface.profile=custom"}), ValidationError);
  EXPECT_THROW(parse_config(kMinimal, {"grid.dim=3"}), ParseError);
  const auto e = parse_config(kMinimal, {"surface.shape=expression", "surface.profile=custom",
                                         "surface.expression=x^2 + y^2 - 1"});
  EXPECT_EQ(e.surface.expression, "x^2 + y^2 - 1");
}

TEST(Catalog, EveryEntryParsesAndBuilds) {
  ASSERT_EQ(scenario_catalog().size(), 4u);
  for (const auto& entry : scenario_catalog()) {
    const auto c = parse_config(entry.text);
    EXPECT_EQ(c.name, entry.name);
    const auto s = build_scenario(c);
    EXPECT_GT(s.times.size(), 1u);
    EXPECT_EQ(s.times.back(), c.horizon);
    EXPECT_GT(s.field->lipschitz(), 0.0);
    // Fields used on a box vanish on its faces.
    const Vec3 corner = s.grid.box().lower;
    EXPECT_LT(s.field->eval(0.0, corner).norm(), 1e-12) << entry.name;
  }
  EXPECT_THROW(catalog_entry("nope"), ValidationError);
}

TEST(BuildScenario, RegularizerAndReference) {
  const auto s = build_scenario(parse_config(kMinimal));
  EXPECT_NEAR(s.regularizer.r_star, 0.225, 1e-3);
  EXPECT_EQ(s.gradient_norm, 1.0);
  // Rotation keeps the circle in place.
  for (const auto& x : reference_interface(s, 1.0)) EXPECT_NEAR(x.norm(), 1.0, 3e-3);
  const auto fixed = build_scenario(parse_config(kMinimal, {"solver.r_star=0.4"}));
  EXPECT_EQ(fixed.regularizer.r_star, 0.4);
}

TEST(RunScenario, DeterministicArtifacts) {
  const auto s = build_scenario(parse_config(
      kMinimal, {"solver.methods=grid, linear_transport, nmm_full", "solver.horizon=0.5",
                 "solver.output_every=0.25", "velocity.cutoff=0.3"}));
  const auto a = scratch("a");
  const auto b = scratch("b");
  const auto ra = run_scenario(s, a.string());
  const auto rb = run_scenario(s, b.string());
  EXPECT_FALSE(ra.failed());
  EXPECT_TRUE(ra.checks_pass());
  for (const char* f : {"summary.csv", "manifest.json", "grid/diagnostics.csv",
                        "grid/field_002.txt", "nmm_full/mesh_001.csv", "reference/mesh_002.csv"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
  }
  const std::string manifest = read_file(a / "manifest.json");
  EXPECT_NE(manifest.find("\"sandwich\""), std::string::npos);
  EXPECT_NE(manifest.find("\"solver.cfl\": \"0.5\""), std::string::npos);
  EXPECT_NE(manifest.find("\"pass\": true"), std::string::npos);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(RunScenario, ScaledProfileKeepsGradientNormInTube) {
  const char* text = R"([scenario]
name = shear-scaled
[grid]
lower = -2.5, -2.5
upper = 2.5, 2.5
h = 0.125
[velocity]
kind = shear
cutoff = 0.5
[surface]
shape = circle
radius = 1
profile = scaled_sdf
factor = 2
[solver]
methods = moc
horizon = 1
moc_h = 0.1
)";
  const auto s = build_scenario(parse_config(text));
  EXPECT_EQ(s.gradient_norm, 2.0);
  const auto out = scratch("scaled");
  const auto r = run_scenario(s, out.string());
  ASSERT_EQ(r.runs.size(), 1u);
  ASSERT_TRUE(r.runs[0].error.empty()) << r.runs[0].error;
  for (double d : r.runs[0].report.tube_grad_defect) EXPECT_LE(d, 1e-6);
  for (double d : r.runs[0].report.p2_drift) EXPECT_LE(d, 1e-10);
  EXPECT_TRUE(r.checks_pass());
  fs::remove_all(out);
}

TEST(RunScenario, SolverErrorIsRecorded) {
  // The circle is carried out of the box, so the interface vanishes.
  const auto s = build_scenario(parse_config(
      kMinimal, {"velocity.kind=translation", "velocity.c=3, 0", "solver.methods=nmm_beta",
                 "solver.horizon=1"}));
  const auto out = scratch("error");
  std::ostringstream log;
  const auto r = run_scenario(s, out.string(), &log);
  EXPECT_TRUE(r.failed());
  EXPECT_NE(log.str().find("nmm_beta: error"), std::string::npos);
  EXPECT_NE(read_file(out / "manifest.json").find("\"status\": \"error\""), std::string::npos);
  fs::remove_all(out);
}
