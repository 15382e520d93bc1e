#include "vem/analysis.hpp"

#include "vem/baselines.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

namespace vem::analysis {

using geometry::Grid;
using geometry::ScalarField;

EnvelopePair compute_envelopes(const geometry::LevelSetFunction& phi0, const VelocityField& v,
                               double t, const Grid& grid, double V0, double dt) {
  if (!(V0 >= 0.0)) throw ValidationError("compute_envelopes: V0 must be nonnegative");
  const auto f = baselines::linear_transport_field(phi0, v, t, grid, dt);
  ScalarField rho(grid, 0.0, t);
  ScalarField rho_tilde(grid, 0.0, t);
  const double shrink = std::exp(-V0 * t);
  const double grow = std::exp(V0 * t);
  for (std::size_t n = 0; n < grid.node_count(); ++n) {
    const double fn = f[n];
    if (fn > 0.0) {
      rho[n] = fn * shrink;
      rho_tilde[n] = fn * grow;
    } else if (fn < 0.0) {
      rho[n] = fn * grow;
      rho_tilde[n] = fn * shrink;
    }
  }
  return {std::move(rho), std::move(rho_tilde), V0};
}

bool SandwichReport::pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.pass; });
}

double SandwichReport::worst() const {
  double w = 0.0;
  for (const auto& e : entries) w = std::max({w, e.lower, e.upper});
  return w;
}

SandwichReport check_sandwich(const std::vector<ScalarField>& phi,
                              const std::vector<EnvelopePair>& env, double tolerance) {
  if (phi.size() != env.size())
    throw GridMismatch("check_sandwich: series lengths differ");
  SandwichReport report;
  report.tolerance = tolerance;
  for (std::size_t k = 0; k < phi.size(); ++k) {
    const auto& f = phi[k];
    const auto& e = env[k];
    if (!f.grid().same_layout(e.rho.grid()) || !f.grid().same_layout(e.rho_tilde.grid()))
      throw GridMismatch("check_sandwich: grid layouts differ");
    if (std::abs(f.time() - e.rho.time()) > 1e-12)
      throw GridMismatch("check_sandwich: time stamps differ");
    SandwichEntry entry;
    entry.t = f.time();
    for (std::size_t n = 0; n < f.grid().node_count(); ++n) {
      const double lo = std::max(e.rho[n] - f[n], 0.0);
      const double up = std::max(f[n] - e.rho_tilde[n], 0.0);
      entry.lower = std::max(entry.lower, lo);
      entry.upper = std::max(entry.upper, up);
      if (lo > tolerance || up > tolerance) ++entry.violations;
    }
    entry.pass = entry.violations == 0;
    report.entries.push_back(entry);
  }
  return report;
}

double monotonized_G(double t, const Vec3& x, const Vec3& p, double u, const VelocityField& v,
                     const hj::Regularizer& reg, double V0) {
  const double theta = std::exp(2 * V0 * t);
  const Vec3 y = x - hj::projection_offset(p, u, reg, theta);
  return v.eval(t, y).dot(p) + V0 * u;
}

namespace {

struct Sampler {
  std::mt19937_64 rng;
  int dim;

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
  double log_uniform(double a, double b) {
    return std::exp(uniform(std::log(a), std::log(b)));
  }
  Vec3 direction() {
    std::normal_distribution<double> n;
    Vec3 d = Vec3::Zero();
    do {
      for (int a = 0; a < dim; ++a) d[a] = n(rng);
    } while (d.norm() < 1e-8);
    return d.normalized();
  }
  Vec3 point(const geometry::Box& box) {
    Vec3 x = Vec3::Zero();
    for (int a = 0; a < dim; ++a) x[a] = uniform(box.lower[a], box.upper[a]);
    return x;
  }
};

}  // namespace

MonotonicityReport check_G_monotonicity(const VelocityField& v, const hj::Regularizer& reg,
                                        double V0, double T, const geometry::Box& box, int dim,
                                        std::size_t samples, std::uint64_t seed) {
  Sampler s{std::mt19937_64(seed), dim};
  MonotonicityReport report;
  report.samples = samples;
  report.min_margin = std::numeric_limits<double>::infinity();
  report.min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = s.uniform(0.0, T);
    const Vec3 x = s.point(box);
    const Vec3 p = s.log_uniform(1e-3, 10.0) * s.direction();
    const double u = s.uniform(-2.0, 2.0);
    const double eps = s.log_uniform(1e-6, 1.0);
    const double margin =
        monotonized_G(t, x, p, u + eps, v, reg, V0) - monotonized_G(t, x, p, u, v, reg, V0);
    report.min_margin = std::min(report.min_margin, margin);
    report.min_ratio = std::min(report.min_ratio, margin / eps);
  }
  return report;
}

GRegularity check_G_regularity(const VelocityField& v, const hj::Regularizer& reg, double V0,
                               double T, const geometry::Box& box, int dim,
                               std::size_t samples, std::uint64_t seed) {
  if (samples < 10000) throw ValidationError("check_G_regularity: need at least 1e4 samples");
  Sampler s{std::mt19937_64(seed), dim};
  GRegularity out;
  out.samples = samples;
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = s.uniform(0.0, T);
    const Vec3 x = s.point(box);
    const Vec3 p = s.log_uniform(1e-3, 10.0) * s.direction();
    Vec3 q = s.log_uniform(1e-3, 10.0) * s.direction();
    double u = s.uniform(-2.0, 2.0);
    const int kind = static_cast<int>(i % 20);
    if (kind == 0) u = 0.0;
    if (kind == 1) q = Vec3::Zero();

    const double theta = std::exp(2 * V0 * t);
    const Vec3 y_pq = x - hj::projection_offset(p + q, u, reg, theta);
    const Vec3 y_p = x - hj::projection_offset(p, u, reg, theta);
    const Vec3 v_pq = v.eval(t, y_pq);
    const double lhs1 = std::abs(v_pq.dot(q) - v.eval(t, x).dot(q));
    const double lhs2 = std::abs((v_pq - v.eval(t, y_p)).dot(p));
    if (u == 0.0 || q.isZero()) {
      out.degenerate_residual = std::max({out.degenerate_residual, lhs1, lhs2});
      continue;
    }
    out.c1 = std::max(out.c1, lhs1 / (std::abs(u) * q.norm()));
    out.c2 = std::max(out.c2, lhs2 / (std::abs(u) * p.norm() * q.norm()));
  }
  return out;
}

namespace {

double cell_volume(const Grid& g) {
  double vol = 1.0;
  for (int a = 0; a < g.dim(); ++a) vol *= g.h(a);
  return vol;
}

TubeErrors finish(TubeErrors e, double sum_sq, double sum_grad, const Grid& g) {
  if (e.nodes == 0) throw EmptyTube("tube_error_norms: no nodes inside the gate");
  e.l2_error = std::sqrt(sum_sq * cell_volume(g));
  e.rms_error = std::sqrt(sum_sq / e.nodes);
  e.mean_grad_deviation = sum_grad / e.nodes;
  return e;
}

template <typename Reference>
TubeErrors accumulate(const ScalarField& phi, TubeGate gate, Reference&& ref) {
  const Grid& g = phi.grid();
  TubeErrors e;
  double sum_sq = 0.0;
  double sum_grad = 0.0;
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    if (g.is_boundary(n)) continue;
    double value;
    Vec3 grad;
    if (!ref(n, value, grad)) continue;
    if (gate.width > 0.0 && std::abs(value) >= gate.width) continue;
    const double err = std::abs(phi[n] - value);
    const double gnorm = geometry::node_gradient(phi, n).norm();
    const double dev = std::abs(gnorm - grad.norm());
    ++e.nodes;
    e.max_error = std::max(e.max_error, err);
    sum_sq += err * err;
    e.max_grad_deviation = std::max(e.max_grad_deviation, dev);
    sum_grad += dev;
    e.max_unit_defect = std::max(e.max_unit_defect, std::abs(gnorm - 1.0));
  }
  return finish(e, sum_sq, sum_grad, g);
}

}  // namespace

TubeErrors tube_error_norms(const ScalarField& phi, const characteristics::TubeSample& reference,
                            TubeGate gate) {
  if (!phi.grid().same_layout(reference.phi.grid()))
    throw GridMismatch("tube_error_norms: grid layouts differ");
  return accumulate(phi, gate, [&](std::size_t n, double& value, Vec3& grad) {
    if (!reference.in_tube[n]) return false;
    value = reference.phi[n];
    grad = reference.grad[n];
    return true;
  });
}

TubeErrors tube_error_norms(const ScalarField& phi, const characteristics::TubeSolution& reference,
                            TubeGate gate) {
  return tube_error_norms(phi, reference.sample(phi.time(), phi.grid()), gate);
}

TubeErrors tube_error_norms(const ScalarField& phi, const geometry::LevelSetFunction& reference,
                            TubeGate gate) {
  return accumulate(phi, gate, [&](std::size_t n, double& value, Vec3& grad) {
    const Vec3 x = phi.grid().node(n);
    value = reference.value(x);
    grad = reference.gradient(x);
    return true;
  });
}

namespace {

struct Series {
  const char* name;
  const std::vector<double>* values;
};

std::vector<Series> series_of(const DiagnosticsReport& r) {
  return {{"tube_grad_defect", &r.tube_grad_defect},
          {"hausdorff", &r.hausdorff},
          {"sandwich_lower", &r.sandwich_lower},
          {"sandwich_upper", &r.sandwich_upper},
          {"sandwich_violations", &r.sandwich_violations},
          {"p2_drift", &r.p2_drift},
          {"g_margin", &r.g_margin}};
}

}  // namespace

void DiagnosticsReport::validate() const {
  for (double t : times)
    if (!std::isfinite(t)) throw ValidationError("diagnostics: non-finite time");
  for (const auto& s : series_of(*this)) {
    if (s.values->empty()) continue;
    if (s.values->size() != times.size())
      throw ValidationError(std::string("diagnostics: series '") + s.name +
                            "' length differs from the output times");
    for (double x : *s.values)
      if (!std::isfinite(x))
        throw ValidationError(std::string("diagnostics: non-finite entry in '") + s.name + "'");
  }
}

std::string DiagnosticsReport::to_json() const {
  validate();
  nlohmann::ordered_json j;
  j["metadata"] = metadata;
  j["times"] = times;
  for (const auto& s : series_of(*this))
    if (!s.values->empty()) j["series"][s.name] = *s.values;
  return j.dump(2);
}

void DiagnosticsReport::write_csv(std::ostream& os) const {
  validate();
  const auto all = series_of(*this);
  std::vector<Series> used;
  for (const auto& s : all)
    if (!s.values->empty()) used.push_back(s);
  os << "t";
  for (const auto& s : used) os << ',' << s.name;
  os << '\n';
  os.precision(17);
  for (std::size_t k = 0; k < times.size(); ++k) {
    os << times[k];
    for (const auto& s : used) os << ',' << (*s.values)[k];
    os << '\n';
  }
}

}  // namespace vem::analysis
