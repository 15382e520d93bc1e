#include "vem/cli.hpp"

#include "vem/expression.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace vem::cli {

namespace {

struct Entry {
  std::string value;
  int line = 0;
  int column = 0;
};

using Entries = std::map<std::string, Entry>;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"scenario", {"version", "name", "seed"}},
      {"grid", {"dim", "lower", "upper", "h"}},
      {"velocity",
       {"kind", "omega", "center", "c", "sigma", "period", "expr_x", "expr_y", "expr_z",
        "cutoff"}},
      {"surface",
       {"shape", "center", "radius", "semi", "expression", "profile", "factor",
        "positive_inside"}},
      {"solver",
       {"methods", "horizon", "dt", "moc_h", "output_every", "cfl", "r_star", "beta", "clamp",
        "taper", "reinit_every", "reinit_iterations", "tube_width"}},
  };
  return keys;
}

std::string trim(const std::string& s, std::size_t* lead = nullptr) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    if (lead) *lead = s.size();
    return "";
  }
  const auto e = s.find_last_not_of(" \t\r");
  if (lead) *lead = b;
  return s.substr(b, e - b + 1);
}

void check_key(const std::string& section, const std::string& key, int line, int column) {
  const auto& keys = known_keys();
  const auto it = keys.find(section);
  if (it == keys.end()) throw ParseError("unknown section '" + section + "'", line, column);
  if (!it->second.count(key))
    throw ParseError("unknown key '" + key + "' in section [" + section + "]", line, column);
}

Entries tokenize(const std::string& text) {
  Entries entries;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::size_t lead = 0;
    const std::string body = trim(line, &lead);
    if (body.empty()) continue;
    const int col0 = static_cast<int>(lead) + 1;
    if (body.front() == '[') {
      if (body.back() != ']')
        throw ParseError("expected ']' closing the section name", line_no,
                         col0 + static_cast<int>(body.size()));
      section = trim(body.substr(1, body.size() - 2));
      if (!known_keys().count(section))
        throw ParseError("unknown section '" + section + "'", line_no, col0 + 1);
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no, col0);
    if (section.empty()) throw ParseError("key outside of a [section]", line_no, col0);
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw ParseError("missing key before '='", line_no, col0);
    check_key(section, key, line_no, col0);
    std::size_t vlead = 0;
    const std::string value = trim(body.substr(eq + 1), &vlead);
    const int vcol = col0 + static_cast<int>(eq) + 1 + static_cast<int>(vlead);
    if (value.empty()) throw ParseError("missing value for '" + key + "'", line_no, vcol);
    const std::string full = section + "." + key;
    if (entries.count(full)) throw ParseError("duplicate key '" + key + "'", line_no, col0);
    entries[full] = {value, line_no, vcol};
  }
  return entries;
}

void apply_override(Entries& entries, const std::string& ov) {
  const auto eq = ov.find('=');
  if (eq == std::string::npos) throw ParseError("override must be section.key=value", 0, 1);
  const std::string name = trim(ov.substr(0, eq));
  const auto dot = name.find('.');
  if (dot == std::string::npos) throw ParseError("override must be section.key=value", 0, 1);
  check_key(name.substr(0, dot), name.substr(dot + 1), 0, 1);
  const std::string value = trim(ov.substr(eq + 1));
  if (value.empty()) throw ParseError("override has an empty value", 0, static_cast<int>(eq) + 2);
  entries[name] = {value, 0, static_cast<int>(eq) + 2};
}

class Reader {
 public:
  explicit Reader(const Entries& e) : e_(e) {}

  bool has(const std::string& key) const { return e_.count(key) > 0; }
  const Entry& get(const std::string& key) const {
    const auto it = e_.find(key);
    if (it == e_.end()) throw ValidationError("missing required key '" + key + "'");
    return it->second;
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    return has(key) ? get(key).value : fallback;
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const Entry& en = get(key);
    return parse_number(en.value, en, 0);
  }

  int integer(const std::string& key, int fallback) const {
    const double v = number(key, fallback);
    if (v != std::floor(v)) {
      const Entry& en = get(key);
      throw ParseError("expected an integer for '" + key + "'", en.line, en.column);
    }
    return static_cast<int>(v);
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Entry& en = get(key);
    if (en.value == "true" || en.value == "yes" || en.value == "1") return true;
    if (en.value == "false" || en.value == "no" || en.value == "0") return false;
    throw ParseError("expected true or false for '" + key + "'", en.line, en.column);
  }

  Vec3 vector(const std::string& key, const Vec3& fallback, int dim) const {
    if (!has(key)) return fallback;
    const Entry& en = get(key);
    Vec3 v = Vec3::Zero();
    int count = 0;
    std::size_t pos = 0;
    while (pos <= en.value.size()) {
      auto next = en.value.find(',', pos);
      if (next == std::string::npos) next = en.value.size();
      if (count >= 3) throw ParseError("too many components", en.line, en.column + int(pos));
      v[count++] = parse_number(en.value.substr(pos, next - pos), en, static_cast<int>(pos));
      pos = next + 1;
    }
    if (count != dim && !(dim == 2 && count == 3 && v[2] == 0.0))
      throw ParseError("expected " + std::to_string(dim) + " components for '" + key + "'",
                       en.line, en.column);
    return v;
  }

 private:
  static double parse_number(const std::string& raw, const Entry& en, int offset) {
    std::size_t lead = 0;
    const std::string s = trim(raw, &lead);
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (s.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
      throw ParseError("expected a number, got '" + s + "'", en.line,
                       en.column + offset + static_cast<int>(lead));
    return v;
  }

  const Entries& e_;
};

void require(bool ok, const std::string& invariant) {
  if (!ok) throw ValidationError("invalid config: " + invariant);
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt(const Vec3& v, int dim) {
  std::string s;
  for (int a = 0; a < dim; ++a) s += (a ? ", " : "") + fmt(v[a]);
  return s;
}

const char* shape_name(SurfaceSpec::Shape s) {
  switch (s) {
    case SurfaceSpec::Shape::circle: return "circle";
    case SurfaceSpec::Shape::sphere: return "sphere";
    case SurfaceSpec::Shape::ellipse: return "ellipse";
    case SurfaceSpec::Shape::expression: return "expression";
  }
  return "?";
}

const char* profile_name(SurfaceSpec::Profile p) {
  switch (p) {
    case SurfaceSpec::Profile::sdf: return "sdf";
    case SurfaceSpec::Profile::scaled_sdf: return "scaled_sdf";
    case SurfaceSpec::Profile::custom: return "custom";
  }
  return "?";
}

void check_expression(const Entry& en) {
  try {
    Expression e(en.value);
  } catch (const ParseError& err) {
    throw ParseError(std::string("bad expression: ") + err.what(), en.line,
                     en.column + err.column() - 1);
  }
}

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  Entries entries = tokenize(text);
  for (const auto& ov : overrides) apply_override(entries, ov);
  const Reader r(entries);
  ScenarioConfig c;

  require(r.integer("scenario.version", kConfigVersion) == kConfigVersion,
          "scenario.version = " + std::to_string(kConfigVersion));
  c.name = r.text("scenario.name", c.name);
  const double seed = r.number("scenario.seed", 1.0);
  require(seed >= 0 && seed == std::floor(seed), "seed >= 0 and integral");
  c.seed = static_cast<std::uint64_t>(seed);

  c.grid.dim = r.integer("grid.dim", 2);
  require(c.grid.dim == 2 || c.grid.dim == 3, "grid.dim in {2, 3}");
  c.grid.lower = r.vector("grid.lower", Vec3::Zero(), c.grid.dim);
  c.grid.upper = r.vector("grid.upper", Vec3::Zero(), c.grid.dim);
  c.grid.h = r.number("grid.h", c.grid.h);
  require(r.has("grid.lower") && r.has("grid.upper"), "grid.lower and grid.upper are required");
  for (int a = 0; a < c.grid.dim; ++a) require(c.grid.lower[a] < c.grid.upper[a], "lower < upper");
  require(c.grid.h > 0, "grid.h > 0");
  for (int a = 0; a < c.grid.dim; ++a)
    require((c.grid.upper[a] - c.grid.lower[a]) / c.grid.h >= 3.0, "at least 4 nodes per axis");

  const auto& kind = r.get("velocity.kind");
  try {
    c.velocity.kind = velocity::parse_kind(kind.value);
  } catch (const ValidationError&) {
    throw ParseError("unknown velocity kind '" + kind.value + "'", kind.line, kind.column);
  }
  c.velocity.omega = r.number("velocity.omega", c.velocity.omega);
  c.velocity.center = r.vector("velocity.center", Vec3::Zero(), c.grid.dim);
  c.velocity.c = r.vector("velocity.c", Vec3::Zero(), c.grid.dim);
  c.velocity.sigma = r.number("velocity.sigma", c.velocity.sigma);
  c.velocity.period = r.number("velocity.period", c.velocity.period);
  require(c.velocity.period > 0, "velocity.period > 0");
  const char* expr_keys[3] = {"velocity.expr_x", "velocity.expr_y", "velocity.expr_z"};
  for (int i = 0; i < 3; ++i) {
    if (!r.has(expr_keys[i])) continue;
    check_expression(r.get(expr_keys[i]));
    c.velocity.expressions[i] = r.get(expr_keys[i]).value;
  }
  c.cutoff = r.number("velocity.cutoff", 0.0);
  require(c.cutoff >= 0, "velocity.cutoff >= 0");
  for (int a = 0; a < c.grid.dim && c.cutoff > 0; ++a)
    require(2 * c.cutoff < c.grid.upper[a] - c.grid.lower[a], "cutoff < half the box width");

  auto& s = c.surface;
  const auto& shape = r.get("surface.shape");
  if (shape.value == "circle") s.shape = SurfaceSpec::Shape::circle;
  else if (shape.value == "sphere") s.shape = SurfaceSpec::Shape::sphere;
  else if (shape.value == "ellipse") s.shape = SurfaceSpec::Shape::ellipse;
  else if (shape.value == "expression") s.shape = SurfaceSpec::Shape::expression;
  else throw ParseError("unknown surface shape '" + shape.value + "'", shape.line, shape.column);
  s.center = r.vector("surface.center", Vec3::Zero(), c.grid.dim);
  s.radius = r.number("surface.radius", s.radius);
  s.semi = r.vector("surface.semi", Vec3::Zero(), 2);
  s.positive_inside = r.boolean("surface.positive_inside", true);
  const std::string profile = r.text("surface.profile", "sdf");
  if (profile == "sdf") s.profile = SurfaceSpec::Profile::sdf;
  else if (profile == "scaled_sdf") s.profile = SurfaceSpec::Profile::scaled_sdf;
  else if (profile == "custom") s.profile = SurfaceSpec::Profile::custom;
  else {
    const auto& en = r.get("surface.profile");
    throw ParseError("unknown profile '" + profile + "'", en.line, en.column);
  }
  s.factor = r.number("surface.factor", 1.0);
  if (s.profile == SurfaceSpec::Profile::scaled_sdf) require(s.factor > 0, "surface.factor > 0");
  else require(s.factor == 1.0, "surface.factor only applies to scaled_sdf");

  const double margin = 5 * c.grid.h;
  auto inside = [&](const Vec3& lo, const Vec3& hi) {
    for (int a = 0; a < c.grid.dim; ++a)
      if (lo[a] < c.grid.lower[a] + margin || hi[a] > c.grid.upper[a] - margin) return false;
    return true;
  };
  const std::string margin_msg = "initial surface inside the box with margin >= 5h";
  switch (s.shape) {
    case SurfaceSpec::Shape::circle:
    case SurfaceSpec::Shape::sphere: {
      require(s.shape == SurfaceSpec::Shape::circle ? c.grid.dim == 2 : c.grid.dim == 3,
              "circle needs dim = 2 and sphere dim = 3");
      require(s.radius > 0, "surface.radius > 0");
      Vec3 ext = Vec3::Zero();
      for (int a = 0; a < c.grid.dim; ++a) ext[a] = s.radius;
      require(inside(s.center - ext, s.center + ext), margin_msg);
      require(s.profile != SurfaceSpec::Profile::custom, "custom profile needs shape = expression");
      break;
    }
    case SurfaceSpec::Shape::ellipse: {
      require(c.grid.dim == 2, "ellipse needs dim = 2");
      require(s.semi[0] > 0 && s.semi[1] > 0, "surface.semi > 0");
      require(inside(s.center - s.semi, s.center + s.semi), margin_msg);
      require(s.profile != SurfaceSpec::Profile::custom, "custom profile needs shape = expression");
      break;
    }
    case SurfaceSpec::Shape::expression: {
      const auto& en = r.get("surface.expression");
      check_expression(en);
      s.expression = en.value;
      require(s.profile == SurfaceSpec::Profile::custom, "shape = expression needs profile = custom");
      break;
    }
  }

  const auto& methods = r.get("solver.methods");
  std::size_t pos = 0;
  while (pos <= methods.value.size()) {
    auto next = methods.value.find(',', pos);
    if (next == std::string::npos) next = methods.value.size();
    const std::string m = trim(methods.value.substr(pos, next - pos));
    const int col = methods.column + static_cast<int>(pos);
    if (m == "moc") c.moc = true;
    else if (m == "grid") c.grid_solver = true;
    else {
      try {
        const auto k = baselines::parse_baseline(m);
        if (std::find(c.baselines.begin(), c.baselines.end(), k) == c.baselines.end())
          c.baselines.push_back(k);
      } catch (const ValidationError&) {
        throw ParseError("unknown method '" + m + "'", methods.line, col);
      }
    }
    pos = next + 1;
  }
  require(c.moc || c.grid_solver || !c.baselines.empty(), "at least one solver selected");

  c.horizon = r.number("solver.horizon", c.horizon);
  require(c.horizon > 0, "horizon > 0");
  c.dt = r.number("solver.dt", c.dt);
  require(c.dt > 0 && c.dt <= 1e-2, "solver.dt in (0, 1e-2]");
  c.moc_h = r.number("solver.moc_h", c.moc_h);
  require(c.moc_h > 0, "solver.moc_h > 0");
  c.output_every = r.number("solver.output_every", c.output_every);
  require(c.output_every >= 0, "solver.output_every >= 0");
  c.cfl = r.number("solver.cfl", c.cfl);
  require(c.cfl > 0 && c.cfl < 1, "solver.cfl in (0, 1)");
  const std::string rs = r.text("solver.r_star", "auto");
  c.r_star = rs == "auto" ? 0.0 : r.number("solver.r_star", 0.0);
  require(c.r_star >= 0 && c.r_star < 1, "solver.r_star in (0, 1) or auto");
  c.beta = r.number("solver.beta", c.beta);
  require(c.beta > 0, "solver.beta > 0");
  c.clamp = r.number("solver.clamp", c.clamp);
  require(c.clamp > 0, "solver.clamp > 0");
  c.taper = r.number("solver.taper", c.taper);
  require(c.taper >= 0, "solver.taper >= 0");
  c.reinit_every = r.number("solver.reinit_every", c.reinit_every);
  require(c.reinit_every >= 0, "solver.reinit_every >= 0");
  c.reinit_iterations = r.integer("solver.reinit_iterations", c.reinit_iterations);
  require(c.reinit_iterations >= 0, "solver.reinit_iterations >= 0");
  c.tube_width = r.number("solver.tube_width", c.tube_width);
  require(c.tube_width >= 0, "solver.tube_width >= 0");
  return c;
}

std::map<std::string, std::string> ScenarioConfig::echo() const {
  std::map<std::string, std::string> m;
  const int d = grid.dim;
  m["scenario.name"] = name;
  m["scenario.seed"] = std::to_string(seed);
  m["grid.dim"] = std::to_string(d);
  m["grid.lower"] = fmt(grid.lower, d);
  m["grid.upper"] = fmt(grid.upper, d);
  m["grid.h"] = fmt(grid.h);
  m["velocity.kind"] = velocity::to_string(velocity.kind);
  m["velocity.omega"] = fmt(velocity.omega);
  m["velocity.center"] = fmt(velocity.center, d);
  m["velocity.c"] = fmt(velocity.c, d);
  m["velocity.sigma"] = fmt(velocity.sigma);
  m["velocity.period"] = fmt(velocity.period);
  m["velocity.expr_x"] = velocity.expressions[0];
  m["velocity.expr_y"] = velocity.expressions[1];
  m["velocity.expr_z"] = velocity.expressions[2];
  m["velocity.cutoff"] = fmt(cutoff);
  m["surface.shape"] = shape_name(surface.shape);
  m["surface.center"] = fmt(surface.center, d);
  m["surface.radius"] = fmt(surface.radius);
  m["surface.semi"] = fmt(surface.semi, 2);
  m["surface.expression"] = surface.expression;
  m["surface.profile"] = profile_name(surface.profile);
  m["surface.factor"] = fmt(surface.factor);
  m["surface.positive_inside"] = surface.positive_inside ? "true" : "false";
  std::string methods;
  auto add = [&](const std::string& s) { methods += (methods.empty() ? "" : ", ") + s; };
  if (moc) add("moc");
  if (grid_solver) add("grid");
  for (auto k : baselines) add(baselines::to_string(k));
  m["solver.methods"] = methods;
  m["solver.horizon"] = fmt(horizon);
  m["solver.dt"] = fmt(dt);
  m["solver.moc_h"] = fmt(moc_h);
  m["solver.output_every"] = fmt(output_every);
  m["solver.cfl"] = fmt(cfl);
  m["solver.r_star"] = r_star > 0 ? fmt(r_star) : "auto";
  m["solver.beta"] = fmt(beta);
  m["solver.clamp"] = fmt(clamp);
  m["solver.taper"] = fmt(taper);
  m["solver.reinit_every"] = fmt(reinit_every);
  m["solver.reinit_iterations"] = std::to_string(reinit_iterations);
  m["solver.tube_width"] = fmt(tube_width);
  return m;
}

const std::vector<CatalogEntry>& scenario_catalog() {
  static const std::vector<CatalogEntry> catalog = {
      {"rotation", "unit circle under rigid rotation, T = 2",
       R"([scenario]
name = rotation

[grid]
dim = 2
lower = -1.6, -1.6
upper = 1.6, 1.6
h = 0.03125

[velocity]
kind = rigid_rotation
omega = 1
cutoff = 0.3

[surface]
shape = circle
center = 0, 0
radius = 1

[solver]
methods = moc, grid, linear_transport
horizon = 2
output_every = 0.5
)"},
      {"translation", "circle of radius 0.5 translated by (0.5, 0.25) t, T = 2",
       R"([scenario]
name = translation

[grid]
dim = 2
lower = -2, -2
upper = 2, 2
h = 0.03125

[velocity]
kind = translation
c = 0.5, 0.25
cutoff = 0.3

[surface]
shape = circle
center = -0.5, -0.25
radius = 0.5

[solver]
methods = moc, grid, linear_transport
horizon = 2
output_every = 0.5
)"},
      {"shear", "unit circle under the shear (x2, 0), T = 1",
       R"([scenario]
name = shear

[grid]
dim = 2
lower = -2.5, -2.5
upper = 2.5, 2.5
h = 0.03125

[velocity]
kind = shear
sigma = 1
cutoff = 0.5

[surface]
shape = circle
center = 0, 0
radius = 1

[solver]
methods = moc, grid, linear_transport
horizon = 1
output_every = 0.25
)"},
      {"single-vortex", "circle in the time-reversing single vortex, quarter period",
       R"([scenario]
name = single-vortex

[grid]
dim = 2
lower = 0, 0
upper = 1, 1
h = 0.015625

[velocity]
kind = single_vortex
period = 1

[surface]
shape = circle
center = 0.5, 0.75
radius = 0.15

[solver]
methods = grid, linear_transport
horizon = 0.25
output_every = 0.125
clamp = 0.06
taper = 0.04
)"},
  };
  return catalog;
}

const CatalogEntry& catalog_entry(const std::string& name) {
  for (const auto& e : scenario_catalog())
    if (e.name == name) return e;
  throw ValidationError("unknown scenario '" + name + "'");
}

}  // namespace vem::cli
