#include "vem/cli.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>

namespace vem::cli {

namespace fs = std::filesystem;
using geometry::Grid;
using geometry::InterfaceMesh;
using geometry::ScalarField;

namespace {

geometry::LevelSetPtr make_profile(const SurfaceSpec& s, int dim) {
  geometry::LevelSetPtr base;
  switch (s.shape) {
    case SurfaceSpec::Shape::circle:
    case SurfaceSpec::Shape::sphere:
      base = std::make_shared<geometry::SphereSdf>(dim, s.center, s.radius, s.positive_inside);
      break;
    case SurfaceSpec::Shape::ellipse:
      base = std::make_shared<geometry::EllipseSdf>(s.center, s.semi[0], s.semi[1],
                                                    s.positive_inside);
      break;
    case SurfaceSpec::Shape::expression:
      base = std::make_shared<geometry::ExpressionLevelSet>(Expression(s.expression));
      break;
  }
  if (s.profile == SurfaceSpec::Profile::scaled_sdf)
    return std::make_shared<geometry::ScaledLevelSet>(base, s.factor);
  return base;
}

InterfaceMesh initial_mesh(const Scenario& s) {
  return geometry::extract_interface(s.phi0->sample(s.grid), false);
}

InterfaceMesh transported_mesh(const Scenario& s, const InterfaceMesh& m0, double t) {
  InterfaceMesh m = m0;
  m.t = t;
  m.normals.clear();
  m.curvature.clear();
  for (auto& x : m.points) x = characteristics::flow(x, 0.0, t, s.config.dt, *s.field);
  return m;
}

// Vertices plus evenly spaced points on every element, so that the
// Hausdorff distance against the cloud is not limited by vertex spacing.
std::vector<Vec3> densify(const InterfaceMesh& m, int per_edge = 8) {
  std::vector<Vec3> out = m.points;
  for (const auto& e : m.elements) {
    const Vec3& a = m.points[e[0]];
    const Vec3& b = m.points[e[1]];
    if (e[2] < 0) {
      for (int i = 1; i < per_edge; ++i) out.push_back(a + (b - a) * (double(i) / per_edge));
      continue;
    }
    const Vec3& c = m.points[e[2]];
    for (int i = 0; i <= per_edge; ++i)
      for (int j = 0; i + j <= per_edge; ++j) {
        const double u = double(i) / per_edge, v = double(j) / per_edge;
        out.push_back(a + u * (b - a) + v * (c - a));
      }
  }
  return out;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string frame_name(const char* stem, std::size_t k, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03zu.%s", stem, k, ext);
  return buf;
}

// Frames and meshes of one solver; grads is filled when the solver has
// exact gradients (the characteristic tube).
struct Frames {
  std::vector<ScalarField> fields;
  std::vector<InterfaceMesh> meshes;
  std::vector<std::vector<Vec3>> grads;
  std::vector<std::vector<unsigned char>> defined;
};

struct Context {
  const Scenario& s;
  std::vector<InterfaceMesh> reference;
  std::vector<std::vector<Vec3>> dense;
  std::vector<std::vector<unsigned char>> tube;
};

double tube_defect(const Context& ctx, const Frames& fr, std::size_t k) {
  const auto& f = fr.fields[k];
  double worst = 0.0;
  for (std::size_t n = 0; n < f.grid().node_count(); ++n) {
    if (!ctx.tube[k][n]) continue;
    if (!fr.defined.empty() && !fr.defined[k][n]) continue;
    const Vec3 g = fr.grads.empty() ? geometry::node_gradient(f, n) : fr.grads[k][n];
    worst = std::max(worst, std::abs(g.norm() - ctx.s.gradient_norm));
  }
  return worst;
}

Frames run_moc(const Scenario& s) {
  characteristics::TubeOptions opt;
  opt.dim = s.grid.dim();
  opt.domain = s.grid.box();
  opt.h = s.config.moc_h;
  opt.dt = s.config.dt;
  const auto tube = characteristics::solve_tube(s.phi0, s.field, s.config.horizon, opt);
  Frames fr;
  for (double t : s.times) {
    auto sample = tube->sample(t, s.grid);
    sample.phi.set_time(t);
    fr.meshes.push_back(tube->interface_mesh(t, s.grid));
    fr.grads.push_back(std::move(sample.grad));
    fr.defined.push_back(std::move(sample.in_tube));
    fr.fields.push_back(std::move(sample.phi));
  }
  return fr;
}

ScalarField grid_initial(const Scenario& s) {
  ScalarField f = s.phi0_grid->sample(s.grid);
  hj::zero_boundary(f);
  return f;
}

Frames run_grid(const Scenario& s) {
  hj::SolverConfig cfg;
  cfg.cfl = s.config.cfl;
  cfg.horizon = s.config.horizon;
  cfg.output_every = s.config.output_every;
  cfg.V0 = s.field->lipschitz();
  auto sol = hj::solve_viscosity(grid_initial(s), *s.field, s.regularizer, cfg);
  Frames fr;
  fr.fields = std::move(sol.frames);
  for (const auto& f : fr.fields) fr.meshes.push_back(hj::interior_interface(f));
  return fr;
}

Frames run_baseline(const Scenario& s, baselines::BaselineKind kind) {
  baselines::BaselineConfig cfg;
  cfg.kind = kind;
  cfg.beta = s.config.beta;
  cfg.cfl = s.config.cfl;
  cfg.reinit_every = s.config.reinit_every;
  cfg.reinit_iterations = s.config.reinit_iterations;
  const auto& phi0 = kind == baselines::BaselineKind::linear_transport ? *s.phi0 : *s.phi0_grid;
  Frames fr;
  fr.fields = baselines::run_baseline(phi0, grid_initial(s), *s.field, s.times, cfg);
  for (const auto& f : fr.fields) fr.meshes.push_back(hj::interior_interface(f));
  return fr;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  if (!os) throw Error("cannot write " + p.string());
  os << text;
}

}  // namespace

Scenario build_scenario(const ScenarioConfig& config) {
  const Grid grid = Grid::from_box(config.grid.dim, config.grid.lower, config.grid.upper,
                                   config.grid.h);
  Scenario s{config, grid, nullptr, nullptr, nullptr, {}, 1.0, {}};
  velocity::FieldPtr field =
      velocity::make_field(config.velocity, config.grid.dim, grid.box(), config.horizon,
                           config.seed);
  if (config.cutoff > 0.0)
    field = std::make_shared<velocity::BoundaryCutoff>(field, config.grid.dim, grid.box(),
                                                       config.cutoff, config.horizon);
  s.field = field;
  s.phi0 = make_profile(config.surface, config.grid.dim);
  s.phi0_grid = std::make_shared<geometry::BoundaryTaperedLevelSet>(
      s.phi0, config.grid.dim, grid.box(), config.clamp, 0.25 * config.clamp, config.taper);

  const auto mesh = initial_mesh(s);
  if (mesh.empty()) throw EmptyTube("initial surface has no zero crossing on the grid");
  double inf_grad = std::numeric_limits<double>::infinity();
  for (const auto& x : mesh.points) inf_grad = std::min(inf_grad, s.phi0->gradient(x).norm());
  s.regularizer = config.r_star > 0.0 ? hj::Regularizer{config.r_star}
                                      : hj::Regularizer::from_gradient_bound(inf_grad);
  s.gradient_norm = config.surface.profile == SurfaceSpec::Profile::custom
                        ? inf_grad
                        : config.surface.factor;
  s.times = hj::output_times(config.horizon, config.output_every);
  return s;
}

std::vector<Vec3> reference_interface(const Scenario& s, double t) {
  return densify(transported_mesh(s, initial_mesh(s), t));
}

bool RunResult::failed() const {
  return std::any_of(runs.begin(), runs.end(), [](const auto& r) { return !r.error.empty(); });
}

bool RunResult::checks_pass() const {
  for (const auto& r : runs)
    for (const auto& c : r.checks)
      if (!c.pass) return false;
  return true;
}

RunResult run_scenario(const Scenario& s, const std::string& out_dir, std::ostream* log) {
  const fs::path out(out_dir);
  fs::create_directories(out / "reference");
  const double h = s.grid.min_spacing();
  // The grid initial data is saturated beyond clamp; keep the default tube
  // well inside the unsaturated band.
  const double width = s.config.tube_width > 0.0
                           ? s.config.tube_width
                           : std::min(5 * h, 0.5 * s.config.clamp / s.gradient_norm);

  Context ctx{s, {}, {}, {}};
  const auto m0 = initial_mesh(s);
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    ctx.reference.push_back(transported_mesh(s, m0, s.times[k]));
    ctx.dense.push_back(densify(ctx.reference.back()));
    std::ofstream os(out / "reference" / frame_name("mesh", k, "csv"));
    geometry::write_mesh_csv(os, ctx.reference.back());
    std::vector<unsigned char> mask(s.grid.node_count(), 0);
    for (std::size_t n = 0; n < s.grid.node_count(); ++n) {
      if (s.grid.is_boundary(n)) continue;
      mask[n] = geometry::distance_to_mesh(ctx.reference.back(), s.grid.node(n)) < width;
    }
    ctx.tube.push_back(std::move(mask));
  }

  std::vector<std::string> solvers;
  if (s.config.moc) solvers.push_back("moc");
  if (s.config.grid_solver) solvers.push_back("grid");
  for (auto k : s.config.baselines) solvers.push_back(baselines::to_string(k));

  double max_grad0 = 0.0;
  for (std::size_t n = 0; n < s.grid.node_count(); ++n)
    max_grad0 = std::max(max_grad0, s.phi0_grid->gradient(s.grid.node(n)).norm());
  const double sandwich_tol = 2 * h * max_grad0;

  RunResult result;
  for (const auto& name : solvers) {
    SolverRun run;
    run.solver = name;
    const fs::path dir = out / name;
    fs::create_directories(dir);
    const auto start = std::chrono::steady_clock::now();
    try {
      Frames fr;
      if (name == "moc") fr = run_moc(s);
      else if (name == "grid") fr = run_grid(s);
      else fr = run_baseline(s, baselines::parse_baseline(name));
      if (fr.fields.size() != s.times.size()) throw Error("solver returned the wrong frame count");

      auto& rep = run.report;
      rep.times = s.times;
      rep.metadata["scenario"] = s.config.name;
      rep.metadata["solver"] = name;
      rep.metadata["velocity"] = s.field->name();
      rep.metadata["V0"] = fmt(s.field->lipschitz());
      rep.metadata["r_star"] = fmt(s.regularizer.r_star);
      for (std::size_t k = 0; k < s.times.size(); ++k) {
        {
          std::ofstream os(dir / frame_name("field", k, "txt"));
          geometry::write_field_text(os, fr.fields[k]);
        }
        {
          std::ofstream os(dir / frame_name("mesh", k, "csv"));
          geometry::write_mesh_csv(os, fr.meshes[k]);
        }
        rep.tube_grad_defect.push_back(tube_defect(ctx, fr, k));
        if (fr.meshes[k].empty()) throw Error("interface vanished at t = " + fmt(s.times[k]));
        rep.hausdorff.push_back(
            geometry::hausdorff_distance(fr.meshes[k], ctx.dense[k]));
      }

      if (name == "moc") {
        // Marker momenta are |grad phi0| on Sigma(0); |p|^2 is conserved.
        std::vector<Vec3> p0;
        for (const auto& x : m0.points) p0.push_back(s.phi0->gradient(x));
        for (std::size_t k = 0; k < s.times.size(); ++k) {
          double drift = 0.0;
          for (std::size_t i = 0; i < m0.points.size(); ++i) {
            const auto st = characteristics::advance(
                characteristics::Phase{m0.points[i], p0[i], 0.0}, 0.0, s.times[k],
                s.config.dt, *s.field);
            drift = std::max(drift, std::abs(st.p.squaredNorm() - p0[i].squaredNorm()));
          }
          rep.p2_drift.push_back(drift);
        }
        if (s.config.surface.profile != SurfaceSpec::Profile::custom) {
          const double worst =
              *std::max_element(rep.tube_grad_defect.begin(), rep.tube_grad_defect.end());
          run.checks.push_back({"tube_gradient_norm", worst, 1e-6, worst <= 1e-6});
        }
      }
      if (name == "grid") {
        std::vector<analysis::EnvelopePair> env;
        for (double t : s.times)
          env.push_back(analysis::compute_envelopes(*s.phi0_grid, *s.field, t, s.grid,
                                                    s.field->lipschitz(), s.config.dt));
        const auto sw = analysis::check_sandwich(fr.fields, env, sandwich_tol);
        for (const auto& e : sw.entries) {
          rep.sandwich_lower.push_back(e.lower);
          rep.sandwich_upper.push_back(e.upper);
          rep.sandwich_violations.push_back(static_cast<double>(e.violations));
        }
        run.checks.push_back({"sandwich", sw.worst(), sandwich_tol, sw.pass()});
        double worst_ratio = std::numeric_limits<double>::infinity();
        for (double t : s.times) {
          const auto m = analysis::check_G_monotonicity(*s.field, s.regularizer,
                                                        s.field->lipschitz(), t, s.grid.box(),
                                                        s.grid.dim(), 2000, s.config.seed);
          rep.g_margin.push_back(m.min_ratio);
          worst_ratio = std::min(worst_ratio, m.min_ratio);
        }
        run.checks.push_back({"g_monotonicity", worst_ratio, -1e-12, worst_ratio >= -1e-12});
      }
      if (name != "reinit_corrector") {
        const double hd = rep.hausdorff.back();
        run.checks.push_back({"final_hausdorff", hd, 2 * h, hd <= 2 * h});
      }
      write_text(dir / "diagnostics.json", rep.to_json() + "\n");
      std::ofstream csv(dir / "diagnostics.csv");
      rep.write_csv(csv);
    } catch (const std::exception& e) {
      run.error = e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (log) {
      *log << name << ": " << (run.error.empty() ? "ok" : "error: " + run.error) << " ("
           << std::fixed << std::setprecision(2) << secs << std::defaultfloat << " s)\n";
    }
    result.runs.push_back(std::move(run));
  }

  {
    std::ofstream os(out / "summary.csv");
    os << "solver,t,tube_grad_defect,hausdorff\n";
    os.precision(17);
    for (const auto& r : result.runs) {
      const auto& rep = r.report;
      for (std::size_t k = 0; k < rep.times.size(); ++k)
        os << r.solver << ',' << rep.times[k] << ',' << rep.tube_grad_defect[k] << ','
           << rep.hausdorff[k] << '\n';
    }
  }

  nlohmann::ordered_json manifest;
  manifest["tool"] = "vem_cli";
  manifest["version"] = "1.0.0";
  manifest["config_version"] = kConfigVersion;
  manifest["scenario"] = s.config.name;
  manifest["config"] = s.config.echo();
  manifest["times"] = s.times;
  manifest["solvers"] = nlohmann::ordered_json::array();
  for (const auto& r : result.runs) {
    nlohmann::ordered_json j;
    j["solver"] = r.solver;
    j["status"] = r.error.empty() ? "ok" : "error";
    if (!r.error.empty()) j["error"] = r.error;
    j["checks"] = nlohmann::ordered_json::array();
    for (const auto& c : r.checks)
      j["checks"].push_back(
          {{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass}});
    manifest["solvers"].push_back(j);
  }
  manifest["pass"] = !result.failed() && result.checks_pass();
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

}  // namespace vem::cli
