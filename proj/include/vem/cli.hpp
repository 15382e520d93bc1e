#pragma once

#include "vem/analysis.hpp"
#include "vem/baselines.hpp"
#include "vem/characteristics.hpp"
#include "vem/common.hpp"
#include "vem/geometry.hpp"
#include "vem/hj.hpp"
#include "vem/levelset.hpp"
#include "vem/velocity.hpp"

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace vem::cli {

/// Version of the scenario config grammar (see README).
inline constexpr int kConfigVersion = 1;

struct GridSpec {
  int dim = 2;
  Vec3 lower = Vec3::Zero();
  Vec3 upper = Vec3::Zero();
  double h = 1.0 / 32;
};

struct SurfaceSpec {
  enum class Shape { circle, sphere, ellipse, expression };
  enum class Profile { sdf, scaled_sdf, custom };
  Shape shape = Shape::circle;
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  /// Ellipse semi-axes (x, y).
  Vec3 semi = Vec3::Zero();
  /// phi0(x, y, z) for the expression shape.
  std::string expression;
  Profile profile = Profile::sdf;
  double factor = 1.0;
  bool positive_inside = true;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  GridSpec grid;
  velocity::AnalyticFieldSpec velocity;
  /// Width of the boundary cutoff applied to the field; 0 keeps it as is.
  double cutoff = 0.0;
  SurfaceSpec surface;

  bool moc = false;
  bool grid_solver = false;
  std::vector<baselines::BaselineKind> baselines;

  double horizon = 1.0;
  /// Characteristic RK4 step.
  double dt = 1e-3;
  /// Seed lattice spacing of the characteristic tube.
  double moc_h = 0.05;
  double output_every = 0.0;
  double cfl = 0.5;
  /// 0 picks r_star from the initial interface gradient.
  double r_star = 0.0;
  double beta = 1.0;
  /// Saturation level and boundary taper width of the grid initial data.
  double clamp = 0.5;
  double taper = 0.3;
  double reinit_every = 0.1;
  int reinit_iterations = 10;
  /// Half-width of the comparison tube around the reference interface; 0
  /// means min(5h, clamp / (2 |grad phi0|)).
  double tube_width = 0.0;

  /// Normalized key = value echo of every setting.
  std::map<std::string, std::string> echo() const;
};

/// Parses the INI-like grammar. Overrides are "section.key=value" strings
/// applied before validation. Syntax errors throw ParseError with line and
/// column; violated invariants throw ValidationError naming the invariant.
ScenarioConfig parse_config(const std::string& text,
                            const std::vector<std::string>& overrides = {});

struct CatalogEntry {
  std::string name;
  std::string description;
  std::string text;
};

const std::vector<CatalogEntry>& scenario_catalog();
/// Throws ValidationError for unknown names.
const CatalogEntry& catalog_entry(const std::string& name);

/// Everything a run needs, built from a config.
struct Scenario {
  ScenarioConfig config;
  geometry::Grid grid;
  velocity::FieldPtr field;
  /// Profile on R^d (used by characteristics and linear transport).
  geometry::LevelSetPtr phi0;
  /// Saturated and tapered to 0 on the box faces (grid-based solvers).
  geometry::LevelSetPtr phi0_grid;
  hj::Regularizer regularizer;
  /// Nominal |grad phi0| near the interface (factor for scaled profiles).
  double gradient_norm = 1.0;
  std::vector<double> times;
};

Scenario build_scenario(const ScenarioConfig& config);

/// The initial interface mesh carried to time t by the flow (the material
/// interface), as vertices plus evenly spaced points on each element.
std::vector<Vec3> reference_interface(const Scenario& s, double t);

struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

struct SolverRun {
  std::string solver;
  analysis::DiagnosticsReport report;
  std::vector<Check> checks;
  std::string error;
};

struct RunResult {
  std::vector<SolverRun> runs;
  bool failed() const;
  bool checks_pass() const;
};

/// Runs every selected solver and writes fields, meshes, diagnostics, the
/// summary and manifest.json under `out_dir`. Solver errors are recorded in
/// the result (and manifest) instead of being thrown.
RunResult run_scenario(const Scenario& scenario, const std::string& out_dir,
                       std::ostream* log = nullptr);

}  // namespace vem::cli
