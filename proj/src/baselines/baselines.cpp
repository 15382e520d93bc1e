#include "vem/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vem::baselines {

using geometry::Grid;
using geometry::ScalarField;

double linear_transport_exact(const geometry::LevelSetFunction& phi0, const VelocityField& v,
                              double t, const Vec3& x, double dt,
                              const characteristics::Guard* guard) {
  if (t == 0.0) return phi0.value(x);
  return phi0.value(characteristics::flow(x, t, 0.0, dt, v, guard));
}

ScalarField linear_transport_field(const geometry::LevelSetFunction& phi0,
                                   const VelocityField& v, double t, const Grid& grid,
                                   double dt) {
  auto f = ScalarField::sample(
      grid, [&](const Vec3& x) { return linear_transport_exact(phi0, v, t, x, dt); }, t);
  return f;
}

namespace {

struct TraceRhs {
  Vec3 dx;
  Vec3 dq;
};

TraceRhs trace_rhs(const VelocityField& v, double s, const Vec3& x, const Vec3& q) {
  return {v.eval(s, x), -v.grad(s, x).transpose() * q};
}

}  // namespace

std::vector<GradientTrace> trace_transport_gradient(const geometry::LevelSetFunction& phi0,
                                                    const VelocityField& v, const Vec3& xi,
                                                    double t1, double dt) {
  if (!(dt > 0.0)) throw ValidationError("trace_transport_gradient: dt must be positive");
  int n = std::max(1, static_cast<int>(std::ceil(std::abs(t1) / dt)));
  double ds = t1 / n;
  std::vector<GradientTrace> out;
  out.reserve(n + 1);
  GradientTrace st{0.0, xi, phi0.gradient(xi)};
  out.push_back(st);
  for (int i = 0; i < n; ++i) {
    double s = st.s;
    auto k1 = trace_rhs(v, s, st.x, st.q);
    auto k2 = trace_rhs(v, s + ds / 2, st.x + ds / 2 * k1.dx, st.q + ds / 2 * k1.dq);
    auto k3 = trace_rhs(v, s + ds / 2, st.x + ds / 2 * k2.dx, st.q + ds / 2 * k2.dq);
    auto k4 = trace_rhs(v, s + ds, st.x + ds * k3.dx, st.q + ds * k3.dq);
    st.x += ds / 6 * (k1.dx + 2 * k2.dx + 2 * k3.dx + k4.dx);
    st.q += ds / 6 * (k1.dq + 2 * k2.dq + 2 * k3.dq + k4.dq);
    st.s = (i + 1 == n) ? t1 : s + ds;
    out.push_back(st);
  }
  return out;
}

double nmm_rhs(const ScalarField& field, const VelocityField& v, std::size_t node) {
  Vec3 g = geometry::node_gradient(field, node);
  double norm = g.norm();
  if (norm <= 1e-10) throw DegenerateGradient("nmm_rhs: |grad phi| <= 1e-10 at node");
  Vec3 n = g / norm;
  Mat3 J = v.grad(field.time(), field.grid().node(node));
  return field[node] * n.dot(J * n);
}

double nmm_beta_rhs(double phi, double grad_norm, double beta) {
  return phi * (beta - grad_norm);
}

double nmm_beta_rhs(const ScalarField& field, double beta, std::size_t node) {
  return nmm_beta_rhs(field[node], geometry::node_gradient(field, node).norm(), beta);
}

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::linear_transport: return "linear_transport";
    case BaselineKind::nmm_full: return "nmm_full";
    case BaselineKind::nmm_beta: return "nmm_beta";
    case BaselineKind::reinit_corrector: return "reinit_corrector";
  }
  return "unknown";
}

BaselineKind parse_baseline(const std::string& text) {
  for (auto k : {BaselineKind::linear_transport, BaselineKind::nmm_full, BaselineKind::nmm_beta,
                 BaselineKind::reinit_corrector}) {
    if (text == to_string(k)) return k;
  }
  throw ValidationError("unknown baseline '" + text + "'");
}

namespace {

// Axis viscosities max |v_a| over the three-point stencil.
std::vector<Vec3> transport_alpha(const ScalarField& field, const VelocityField& v) {
  const Grid& g = field.grid();
  std::vector<double> va[3];
  for (int a = 0; a < g.dim(); ++a) va[a].resize(g.node_count());
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    Vec3 vel = v.eval(field.time(), g.node(n));
    for (int a = 0; a < g.dim(); ++a) va[a][n] = std::abs(vel[a]);
  }
  std::vector<Vec3> alpha(g.node_count(), Vec3::Zero());
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    if (g.is_boundary(n)) continue;
    for (int a = 0; a < g.dim(); ++a) {
      std::size_t s = g.stride(a);
      alpha[n][a] = std::max({va[a][n - s], va[a][n], va[a][n + s]});
    }
  }
  return alpha;
}

double rate_of(const Grid& g, const std::vector<Vec3>& alpha) {
  double rate = 0.0;
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    double r = 0.0;
    for (int a = 0; a < g.dim(); ++a) r += alpha[n][a] / g.h(a);
    rate = std::max(rate, r);
  }
  return rate;
}

}  // namespace

double transport_stable_dt(const ScalarField& field, const VelocityField& v) {
  double rate = rate_of(field.grid(), transport_alpha(field, v));
  return rate > 0.0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
}

ScalarField transport_step(const ScalarField& field, const VelocityField& v, double dt,
                           BaselineKind kind, double beta) {
  if (kind == BaselineKind::nmm_beta && !(beta > 0.0))
    throw ValidationError("nmm_beta: beta must be positive");
  const Grid& g = field.grid();
  auto alpha = transport_alpha(field, v);
  if (dt * rate_of(g, alpha) > 1.0 + 1e-12)
    throw CflViolation("transport_step: dt exceeds the Lax-Friedrichs bound");
  ScalarField next = field;
  double t = field.time();
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    if (g.is_boundary(n)) continue;
    Vec3 p = Vec3::Zero();
    double visc = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      std::size_t s = g.stride(a);
      double up = field[n + s], dn = field[n - s], c = field[n];
      p[a] = (up - dn) / (2 * g.h(a));
      visc += alpha[n][a] * (up - 2 * c + dn) / (2 * g.h(a));
    }
    double source = 0.0;
    if (kind == BaselineKind::nmm_full) {
      double norm = p.norm();
      // Far from the interface a flat plateau has no normal; the source
      // vanishes with the gradient there.
      if (norm > 1e-10) {
        Vec3 nn = p / norm;
        source = field[n] * nn.dot(v.grad(t, g.node(n)) * nn);
      }
    } else if (kind == BaselineKind::nmm_beta) {
      source = nmm_beta_rhs(field[n], p.norm(), beta);
    }
    next[n] = field[n] - dt * (v.eval(t, g.node(n)).dot(p) - visc - source);
  }
  next.set_time(t + dt);
  if (!next.all_finite()) throw Error("transport_step: non-finite value");
  return next;
}

ScalarField reinit_corrector_step(const ScalarField& psi, double dtau) {
  const Grid& g = psi.grid();
  double h = g.min_spacing();
  if (!(dtau > 0.0) || dtau > 0.5 * h + 1e-15)
    throw CflViolation("reinit_corrector_step: dtau must lie in (0, h/2]");
  ScalarField next = psi;
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    auto ijk = g.ijk(n);
    double c = psi[n];
    double sgn = c / std::sqrt(c * c + h * h);
    double grad2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      std::size_t s = g.stride(a);
      // One-sided differences; at a face the missing side copies the other.
      bool lo = ijk[a] == 0, hi = ijk[a] == g.extent(a) - 1;
      double dm = lo ? 0.0 : (c - psi[n - s]) / g.h(a);
      double dp = hi ? 0.0 : (psi[n + s] - c) / g.h(a);
      if (lo) dm = dp;
      if (hi) dp = dm;
      double m;
      if (sgn >= 0.0) {
        m = std::max(std::pow(std::max(dm, 0.0), 2), std::pow(std::min(dp, 0.0), 2));
      } else {
        m = std::max(std::pow(std::min(dm, 0.0), 2), std::pow(std::max(dp, 0.0), 2));
      }
      grad2 += m;
    }
    next[n] = c + dtau * sgn * (1.0 - std::sqrt(grad2));
  }
  if (!next.all_finite()) throw Error("reinit_corrector_step: non-finite value");
  return next;
}

std::vector<ScalarField> run_baseline(const geometry::LevelSetFunction& phi0,
                                      const ScalarField& phi0_field, const VelocityField& v,
                                      const std::vector<double>& times,
                                      const BaselineConfig& config) {
  if (!(config.cfl > 0.0 && config.cfl < 1.0))
    throw ValidationError("baseline: cfl must lie in (0, 1)");
  std::vector<ScalarField> frames;
  const Grid& g = phi0_field.grid();
  if (config.kind == BaselineKind::linear_transport) {
    for (double t : times) frames.push_back(linear_transport_field(phi0, v, t, g));
    return frames;
  }
  auto step_kind =
      config.kind == BaselineKind::reinit_corrector ? BaselineKind::linear_transport : config.kind;
  ScalarField cur = phi0_field;
  cur.set_time(0.0);
  double next_reinit = config.reinit_every;
  for (double target : times) {
    while (cur.time() < target - 1e-14) {
      double dt = config.cfl * transport_stable_dt(cur, v);
      double stop = target;
      if (config.kind == BaselineKind::reinit_corrector && config.reinit_every > 0.0)
        stop = std::min(stop, next_reinit);
      dt = std::min(dt, stop - cur.time());
      cur = transport_step(cur, v, dt, step_kind, config.beta);
      if (config.kind == BaselineKind::reinit_corrector && config.reinit_every > 0.0 &&
          cur.time() >= next_reinit - 1e-14) {
        double t = cur.time();
        for (int k = 0; k < config.reinit_iterations; ++k)
          cur = reinit_corrector_step(cur, 0.5 * g.min_spacing());
        cur.set_time(t);
        next_reinit += config.reinit_every;
      }
    }
    frames.push_back(cur);
  }
  return frames;
}

}  // namespace vem::baselines
