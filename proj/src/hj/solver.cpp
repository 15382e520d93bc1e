#include "vem/hj.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace vem::hj {

using geometry::Grid;
using geometry::ScalarField;

double Regularizer::eta(double r) const {
  if (r <= 0.0) return 1.0;
  if (r >= r_star) return 0.0;
  const double s = r / r_star;
  return 1.0 - s * s * (3.0 - 2.0 * s);
}

double Regularizer::eta_prime(double r) const {
  if (r <= 0.0 || r >= r_star) return 0.0;
  const double s = r / r_star;
  return -6.0 * s * (1.0 - s) / r_star;
}

Regularizer Regularizer::from_gradient_bound(double inf_grad) {
  if (!(inf_grad > 0.0)) throw DegenerateGradient("r_star needs inf |grad phi0| > 0");
  return {std::min(0.9, 0.9 * 0.25 * inf_grad * inf_grad)};
}

double eta(double r, const Regularizer& reg) { return reg.eta(r); }

Vec3 projection_offset(const Vec3& p, double u, const Regularizer& reg, double theta2) {
  const double r = theta2 * p.squaredNorm();
  return (theta2 * u / (r + reg.eta(r))) * p;
}

double regularized_hamiltonian(double t, const Vec3& x, const Vec3& p, double u,
                               const VelocityField& v, const Regularizer& reg) {
  return v.eval(t, x - projection_offset(p, u, reg)).dot(p);
}

namespace {

// Spectral norm of dR/dp = I/D - 2(1 + eta') p p^T / D^2, R(p) = p / D,
// D = |p|^2 + eta(|p|^2).
double offset_slope(const Vec3& p, const Regularizer& reg) {
  const double r = p.squaredNorm();
  const double D = r + reg.eta(r);
  return std::max(1.0 / D, std::abs(1.0 / D - 2.0 * (1.0 + reg.eta_prime(r)) * r / (D * D)));
}

double spectral_norm(const Mat3& J) {
  if (J.row(2).isZero(0.0) && J.col(2).isZero(0.0)) {
    // 2x2 block: s_max^2 = (F + sqrt(F^2 - 4 det^2)) / 2 with F the squared Frobenius norm.
    const double F = J.topLeftCorner<2, 2>().squaredNorm();
    const double det = J(0, 0) * J(1, 1) - J(0, 1) * J(1, 0);
    return std::sqrt(0.5 * (F + std::sqrt(std::max(0.0, F * F - 4.0 * det * det))));
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig;
  eig.computeDirect(J.transpose() * J, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, eig.eigenvalues()(2)));
}

void check_compatible(const ScalarField& field, const StepCoefficients& c) {
  if (c.alpha.size() != field.grid().node_count()) {
    throw GridMismatch("step coefficients were built for another grid");
  }
}

}  // namespace

namespace {

// Calls f(n, x, interior) for every node in storage order.
template <class F>
void for_each_node(const Grid& g, F&& f) {
  const auto& e = g.extents();
  std::size_t n = 0;
  for (int k = 0; k < e[2]; ++k) {
    const bool kb = g.dim() == 3 && (k == 0 || k == e[2] - 1);
    for (int j = 0; j < e[1]; ++j) {
      const bool jb = kb || j == 0 || j == e[1] - 1;
      for (int i = 0; i < e[0]; ++i, ++n) f(n, g.node(i, j, k), !(jb || i == 0 || i == e[0] - 1));
    }
  }
}

}  // namespace

StepCoefficients llf_coefficients(const ScalarField& field, const VelocityField& v,
                                  const Regularizer& reg, double V0) {
  const Grid& g = field.grid();
  const int dim = g.dim();
  const std::size_t N = g.node_count();
  const double t = field.time();
  const std::array<std::size_t, 3> stride{g.stride(0), g.stride(1), g.stride(2)};
  std::vector<Vec3> local(N, Vec3::Zero());
  for_each_node(g, [&](std::size_t n, const Vec3& x, bool interior) {
    Vec3 p = Vec3::Zero();
    if (interior) {
      for (int a = 0; a < dim; ++a)
        p[a] = (field[n + stride[a]] - field[n - stride[a]]) / (2.0 * g.h(a));
    } else {
      p = geometry::node_gradient(field, n);
    }
    const double u = field[n];
    const Vec3 y = x - projection_offset(p, u, reg);
    const double up = std::abs(u) * p.norm();
    Vec3 vy;
    double extra = 0.0;
    if (up > 0.0) {
      Mat3 J;
      v.jet(t, y, vy, J);
      extra = up * offset_slope(p, reg) * spectral_norm(J);
    } else {
      vy = v.eval(t, y);
    }
    for (int a = 0; a < dim; ++a) local[n][a] = std::abs(vy[a]) + extra;
  });
  StepCoefficients c;
  c.alpha.assign(N, Vec3::Zero());
  const auto& e = g.extents();
  std::size_t n = 0;
  for (int k = 0; k < e[2]; ++k) {
    for (int j = 0; j < e[1]; ++j) {
      for (int i = 0; i < e[0]; ++i, ++n) {
        const int ijk[3] = {i, j, k};
        bool boundary = false;
        double rate = V0;
        for (int a = 0; a < dim; ++a) {
          double m = local[n][a];
          if (ijk[a] > 0) m = std::max(m, local[n - stride[a]][a]);
          if (ijk[a] + 1 < e[a]) m = std::max(m, local[n + stride[a]][a]);
          c.alpha[n][a] = m;
          rate += m / g.h(a);
          boundary = boundary || ijk[a] == 0 || ijk[a] + 1 == e[a];
        }
        if (!boundary) c.rate = std::max(c.rate, rate);
      }
    }
  }
  return c;
}

ScalarField lax_friedrichs_step(const ScalarField& field, const VelocityField& v,
                                const Regularizer& reg, double dt, double V0,
                                const StepCoefficients* frozen) {
  if (!(dt > 0.0)) throw ValidationError("time step must be positive");
  StepCoefficients own;
  if (!frozen) {
    own = llf_coefficients(field, v, reg, V0);
    frozen = &own;
  }
  check_compatible(field, *frozen);
  if (dt * frozen->rate > 1.0 + 1e-12) {
    throw CflViolation("dt = " + std::to_string(dt) + " exceeds the stability limit " +
                       std::to_string(1.0 / frozen->rate));
  }
  const Grid& g = field.grid();
  const int dim = g.dim();
  const double t = field.time();
  const std::array<std::size_t, 3> stride{g.stride(0), g.stride(1), g.stride(2)};
  ScalarField out(g, std::vector<double>(field.values().begin(), field.values().end()), t + dt);
  for_each_node(g, [&](std::size_t n, const Vec3& x, bool interior) {
    if (!interior) return;
    Vec3 p = Vec3::Zero();
    double visc = 0.0;
    for (int a = 0; a < dim; ++a) {
      const double fp = field[n + stride[a]], fm = field[n - stride[a]];
      p[a] = (fp - fm) / (2.0 * g.h(a));
      visc += frozen->alpha[n][a] * (fp - 2.0 * field[n] + fm) / (2.0 * g.h(a));
    }
    const double H = regularized_hamiltonian(t, x, p, field[n], v, reg);
    const double next = field[n] - dt * (H - visc);
    if (!std::isfinite(next)) {
      throw Error("non-finite value at node " + std::to_string(n) + ", t = " + std::to_string(t));
    }
    out[n] = next;
  });
  return out;
}

void zero_boundary(ScalarField& field) {
  const Grid& g = field.grid();
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    if (g.is_boundary(n)) field[n] = 0.0;
  }
}

geometry::InterfaceMesh interior_interface(const ScalarField& field, bool with_curvature) {
  const Grid& g = field.grid();
  ScalarField copy = field;
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    if (!g.is_boundary(n)) continue;
    auto c = g.ijk(n);
    for (int a = 0; a < g.dim(); ++a) c[a] = std::clamp(c[a], 1, g.extent(a) - 2);
    copy[n] = field[g.index(c[0], c[1], c[2])];
  }
  return geometry::extract_interface(copy, with_curvature);
}

std::vector<double> output_times(double horizon, double every) {
  std::vector<double> times{0.0};
  if (every > 0.0) {
    const int n = static_cast<int>(std::floor(horizon / every + 1e-9));
    for (int k = 1; k <= n; ++k) {
      const double tk = k * every;
      if (horizon - tk > 1e-9 * std::max(1.0, horizon)) times.push_back(tk);
    }
  }
  times.push_back(horizon);
  return times;
}

ViscositySolution solve_viscosity(const ScalarField& phi0, const VelocityField& v,
                                  const Regularizer& reg, const SolverConfig& config) {
  if (!(config.horizon > 0.0)) throw ValidationError("horizon > 0");
  if (!(config.cfl > 0.0 && config.cfl < 1.0)) throw ValidationError("cfl must lie in (0, 1)");
  if (!(reg.r_star > 0.0 && reg.r_star < 1.0)) throw ValidationError("r_star must lie in (0, 1)");
  if (!phi0.all_finite()) throw ValidationError("initial field has non-finite values");
  const Grid& g = phi0.grid();
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    if (g.is_boundary(n) && phi0[n] != 0.0) {
      throw ValidationError("initial field must vanish on boundary nodes");
    }
  }
  const double V0 = config.V0 > 0.0 ? config.V0 : v.lipschitz();
  const auto times = output_times(config.horizon, config.output_every);

  ViscositySolution sol;
  ScalarField cur = phi0;
  cur.set_time(0.0);
  sol.frames.push_back(cur);
  sol.min_dt = config.horizon;
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double target = times[k];
    while (cur.time() < target) {
      const StepCoefficients c = llf_coefficients(cur, v, reg, V0);
      double dt = c.rate > 0.0 ? config.cfl / c.rate : target - cur.time();
      bool last = false;
      if (cur.time() + dt >= target - 1e-12 * std::max(1.0, target)) {
        dt = target - cur.time();
        last = true;
      }
      cur = lax_friedrichs_step(cur, v, reg, dt, V0, &c);
      if (last) cur.set_time(target);
      ++sol.steps;
      sol.min_dt = std::min(sol.min_dt, dt);
      sol.max_dt = std::max(sol.max_dt, dt);
    }
    sol.frames.push_back(cur);
  }
  return sol;
}

}  // namespace vem::hj
