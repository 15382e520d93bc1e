#include "vem/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace vem::characteristics {

Mat3 eval_B(const Vec3& p) { return p.squaredNorm() * Mat3::Identity() - 2.0 * p * p.transpose(); }

double hamiltonian(double t, const Vec3& x, const Vec3& p, double Phi, const VelocityField& v) {
  const double p2 = p.squaredNorm();
  if (!(std::sqrt(p2) > 1e-12)) throw DegenerateGradient("hamiltonian: |p| <= 1e-12");
  return v.eval(t, x - Phi * p / p2).dot(p);
}

Phase characteristic_rhs(double s, const Phase& state, const VelocityField& v) {
  const Vec3& p = state.p;
  const double p2 = p.squaredNorm();
  if (!(std::sqrt(p2) > 1e-12)) throw DegenerateGradient("characteristic system: |p| <= 1e-12");
  const double Phi = state.Phi;
  const Vec3 y = state.x - Phi * p / p2;
  const Mat3 J = v.grad(s, y);
  const Vec3 Jtp = J.transpose() * p;
  // (J B)^T p = B J^T p since B is symmetric.
  const Vec3 w = eval_B(p) * Jtp;
  const double p4 = p2 * p2;

  Phase d;
  d.x = v.eval(s, y) - (Phi / p4) * w;
  d.p = -Jtp + (Jtp.dot(p) / p2) * p;
  // p' is orthogonal to p in exact arithmetic; a second projection removes
  // the rounding left by the first.
  d.p -= (d.p.dot(p) / p2) * p;
  d.Phi = -(Phi / p4) * w.dot(p);
  return d;
}

namespace {

Phase axpy(const Phase& a, double h, const Phase& d) {
  return {a.x + h * d.x, a.p + h * d.p, a.Phi + h * d.Phi};
}

void check_guard(const Guard* guard, const Vec3& x, double s) {
  if (guard && !guard->box.contains(x, guard->dim)) {
    throw FlowBlowUp("characteristic left the guarded domain at s = " + std::to_string(s));
  }
}

int step_count(double span, double dt) {
  return std::max(1, static_cast<int>(std::ceil(std::abs(span) / dt - 1e-9)));
}

}  // namespace

Phase rk4_step(double s, const Phase& y, double ds, const VelocityField& v) {
  const Phase k1 = characteristic_rhs(s, y, v);
  const Phase k2 = characteristic_rhs(s + 0.5 * ds, axpy(y, 0.5 * ds, k1), v);
  const Phase k3 = characteristic_rhs(s + 0.5 * ds, axpy(y, 0.5 * ds, k2), v);
  const Phase k4 = characteristic_rhs(s + ds, axpy(y, ds, k3), v);
  Phase out;
  out.x = y.x + ds / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
  out.p = y.p + ds / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
  out.Phi = y.Phi + ds / 6.0 * (k1.Phi + 2.0 * k2.Phi + 2.0 * k3.Phi + k4.Phi);
  return out;
}

Phase advance(const Phase& state, double s0, double s1, double dt, const VelocityField& v,
              const Guard* guard) {
  if (s1 == s0) return state;
  const int n = step_count(s1 - s0, dt);
  const double ds = (s1 - s0) / n;
  Phase y = state;
  for (int i = 0; i < n; ++i) {
    const double s = s0 + i * ds;
    y = rk4_step(s, y, ds, v);
    check_guard(guard, y.x, s + ds);
  }
  return y;
}

Seed Seed::from(const geometry::LevelSetFunction& phi0, const Vec3& xi) {
  return {xi, phi0.gradient(xi), phi0.value(xi)};
}

std::vector<CharacteristicState> integrate_characteristic(const Seed& seed,
                                                          const VelocityField& v, double s0,
                                                          double s1, double dt,
                                                          const Guard* guard) {
  if (!(dt > 0.0) || dt > 1e-2) throw ValidationError("integration step must lie in (0, 1e-2]");
  if (!(seed.p0.norm() > 0.0)) throw DegenerateGradient("seed has zero gradient");
  const int n = s1 == s0 ? 0 : step_count(s1 - s0, dt);
  const double ds = n ? (s1 - s0) / n : 0.0;
  std::vector<CharacteristicState> out;
  out.reserve(n + 1);
  Phase y{seed.xi, seed.p0, seed.Phi0};
  auto record = [&](double s) {
    out.push_back({s, y.x, y.p, y.Phi, seed.xi, seed.p0, seed.Phi0});
  };
  record(s0);
  for (int i = 0; i < n; ++i) {
    const double s = s0 + i * ds;
    y = rk4_step(s, y, ds, v);
    check_guard(guard, y.x, s + ds);
    record(i + 1 == n ? s1 : s + ds);
  }
  return out;
}

Vec3 flow(const Vec3& x, double s0, double s1, double dt, const VelocityField& v,
          const Guard* guard) {
  if (s1 == s0) return x;
  const int n = step_count(s1 - s0, dt);
  const double ds = (s1 - s0) / n;
  Vec3 y = x;
  for (int i = 0; i < n; ++i) {
    const double s = s0 + i * ds;
    const Vec3 k1 = v.eval(s, y);
    const Vec3 k2 = v.eval(s + 0.5 * ds, y + 0.5 * ds * k1);
    const Vec3 k3 = v.eval(s + 0.5 * ds, y + 0.5 * ds * k2);
    const Vec3 k4 = v.eval(s + ds, y + ds * k3);
    y += ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    check_guard(guard, y, s + ds);
  }
  return y;
}

void write_trajectory_csv(std::ostream& os, int seed_id,
                          const std::vector<CharacteristicState>& trajectory, bool header) {
  if (header) os << "seed_id,s,x,y,z,px,py,pz,Phi,p2_drift\n";
  os << std::setprecision(17);
  for (const auto& st : trajectory) {
    os << seed_id << ',' << st.s << ',' << st.x[0] << ',' << st.x[1] << ',' << st.x[2] << ','
       << st.p[0] << ',' << st.p[1] << ',' << st.p[2] << ',' << st.Phi << ','
       << st.p.squaredNorm() - st.seed_p.squaredNorm() << '\n';
  }
}

// --- bounds ------------------------------------------------------------------

double CharacteristicBounds::margin(double t) const {
  const double a = 2.0 * U7 * t;
  return 1.0 - (3.0 * a + 6.0 * a * a + 6.0 * a * a * a);
}

double cubic_root_a_star() {
  auto f = [](double a) { return 6.0 * a * a * a + 6.0 * a * a + 3.0 * a - 1.0; };
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return lo;
}

double estimate_t_star(double U7) {
  if (!(U7 > 0.0)) return 1.0;
  return std::min(1.0, 0.9 * cubic_root_a_star() / (2.0 * U7));
}

void complete_bounds(CharacteristicBounds& b) {
  const double k = 2.0 * (b.U4 - 1.0 - b.U1);
  const double integral = std::abs(k) < 1e-12 ? 1.0 : std::expm1(k) / k;
  const double u6sq = std::exp(2.0 * (1.0 + b.U1)) *
                      (1.0 + (b.U2 * b.U2 + b.U3 * b.U3) * b.U5 * b.U5 * integral);
  b.U6 = std::sqrt(u6sq);
  b.U7 = b.U0 * b.U6 + (b.U2 + b.U3) * b.U5 * std::exp(b.U4);
  b.t_star = estimate_t_star(b.U7);
  if (b.U7 > 0.0) {
    const double limit = cubic_root_a_star() / (2.0 * b.U7);
    b.delta = std::min(limit - b.t_star, 0.1 * b.t_star);
  } else {
    b.delta = 0.1 * b.t_star;
  }
}

CharacteristicBounds estimate_bounds(const VelocityField& v, const std::vector<Vec3>& points,
                                     const std::vector<Vec3>& momenta, double grad_min,
                                     double grad_max, const BoundsOptions& o) {
  if (!(grad_min > 0.0) || grad_max < grad_min) {
    throw DegenerateGradient("bounds need 0 < inf |grad phi0| <= sup |grad phi0|");
  }
  if (points.size() != momenta.size()) throw ValidationError("points and momenta differ in size");
  CharacteristicBounds b;
  const std::size_t stride =
      std::max<std::size_t>(1, (points.size() + o.max_points - 1) / std::max<std::size_t>(1, o.max_points));
  const int n = std::max(1, static_cast<int>(std::ceil(o.window / o.dt - 1e-9)));
  const double ds = o.window / n;
  double u0 = 0, u1 = 0, u2 = 0, u3 = 0, u4 = 0;
  for (std::size_t i = 0; i < points.size(); i += stride) {
    Phase y{points[i], momenta[i].normalized(), 0.0};
    for (int k = 0; k <= n; ++k) {
      const double s = o.s0 + k * ds;
      if (o.guard && !o.guard->box.contains(y.x, o.guard->dim)) break;
      const Mat3 J = v.grad(s, y.x);
      const Vec3 q = y.p.normalized();
      u0 = std::max(u0, J.jacobiSvd().singularValues()(0));
      const Eigen::SelfAdjointEigenSolver<Mat3> sym(0.5 * (J + J.transpose()),
                                                    Eigen::EigenvaluesOnly);
      u1 = std::max(u1, sym.eigenvalues().cwiseAbs().maxCoeff());
      u2 = std::max(u2, (J * q).norm());
      const Vec3 w = eval_B(q) * (J.transpose() * q);
      u3 = std::max(u3, w.norm());
      u4 = std::max(u4, std::abs(w.dot(q)));
      if (k < n) y = rk4_step(s, y, ds, v);
    }
  }
  // Terms homogeneous of degree -1 in p take their worst case at inf |p|.
  b.U0 = o.inflation * u0;
  b.U1 = o.inflation * u1;
  b.U2 = o.inflation * u2 / grad_min;
  b.U3 = o.inflation * u3 / grad_min;
  b.U4 = o.inflation * u4;
  b.U5 = o.inflation * grad_max;
  complete_bounds(b);
  return b;
}

CharacteristicBounds estimate_bounds(const VelocityField& v,
                                     const geometry::InterfaceMesh& seed_surface,
                                     double grad_min, double grad_max, const BoundsOptions& o) {
  std::vector<Vec3> momenta;
  momenta.reserve(seed_surface.normals.size());
  for (const Vec3& nu : seed_surface.normals) momenta.push_back(-nu);
  return estimate_bounds(v, seed_surface.points, momenta, grad_min, grad_max, o);
}

// --- variational system ------------------------------------------------------

namespace {

struct VarDeriv {
  Phase base;
  Mat3 dx;
  Vec3 dPhi;
};

VarDeriv variational_rhs(double s, const VariationalState& st, const VelocityField& v) {
  VarDeriv d;
  d.base = characteristic_rhs(s, st.base, v);
  const Vec3& p = st.base.p;
  const double p2 = p.squaredNorm();
  const Mat3 J = v.grad(s, st.base.x);
  const Vec3 w = eval_B(p) * (J.transpose() * p);
  const Vec3 coupling = J * p / p2 + w / (p2 * p2);
  d.dx = J * st.dx_dxi - coupling * st.dPhi_dxi.transpose();
  d.dPhi = -(w.dot(p) / (p2 * p2)) * st.dPhi_dxi;
  return d;
}

VariationalState var_axpy(const VariationalState& a, double h, const VarDeriv& d) {
  VariationalState o = a;
  o.base = axpy(a.base, h, d.base);
  o.dx_dxi += h * d.dx;
  o.dPhi_dxi += h * d.dPhi;
  return o;
}

}  // namespace

std::vector<VariationalState> variational_system(const Seed& seed, const VelocityField& v,
                                                 double s0, double s1, double dt,
                                                 const Guard* guard) {
  if (!(dt > 0.0) || dt > 1e-2) throw ValidationError("integration step must lie in (0, 1e-2]");
  const int n = s1 == s0 ? 0 : step_count(s1 - s0, dt);
  const double ds = n ? (s1 - s0) / n : 0.0;
  VariationalState y;
  y.s = s0;
  y.base = {seed.xi, seed.p0, seed.Phi0};
  y.dx_dxi = Mat3::Identity();
  y.dPhi_dxi = seed.p0;
  std::vector<VariationalState> out{y};
  for (int i = 0; i < n; ++i) {
    const double s = s0 + i * ds;
    const VarDeriv k1 = variational_rhs(s, y, v);
    const VarDeriv k2 = variational_rhs(s + 0.5 * ds, var_axpy(y, 0.5 * ds, k1), v);
    const VarDeriv k3 = variational_rhs(s + 0.5 * ds, var_axpy(y, 0.5 * ds, k2), v);
    const VarDeriv k4 = variational_rhs(s + ds, var_axpy(y, ds, k3), v);
    VariationalState next = y;
    next.base.x += ds / 6.0 * (k1.base.x + 2.0 * k2.base.x + 2.0 * k3.base.x + k4.base.x);
    next.base.p += ds / 6.0 * (k1.base.p + 2.0 * k2.base.p + 2.0 * k3.base.p + k4.base.p);
    next.base.Phi +=
        ds / 6.0 * (k1.base.Phi + 2.0 * k2.base.Phi + 2.0 * k3.base.Phi + k4.base.Phi);
    next.dx_dxi += ds / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
    next.dPhi_dxi += ds / 6.0 * (k1.dPhi + 2.0 * k2.dPhi + 2.0 * k3.dPhi + k4.dPhi);
    next.s = i + 1 == n ? s1 : s + ds;
    check_guard(guard, next.base.x, next.s);
    out.push_back(next);
    y = next;
  }
  return out;
}

}  // namespace vem::characteristics
