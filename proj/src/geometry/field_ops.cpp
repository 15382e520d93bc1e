#include "vem/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vem::geometry {

namespace {

// Value at ijk offset along `axis`, with a linearly extrapolated ghost one
// node past either end.
double along(const ScalarField& f, const std::array<int, 3>& c, int axis, int offset) {
  const Grid& g = f.grid();
  std::array<int, 3> q = c;
  q[axis] += offset;
  const int n = g.extent(axis);
  if (q[axis] < 0) {
    std::array<int, 3> a = c, b = c;
    a[axis] = 0;
    b[axis] = 1;
    return 2.0 * f.at(a[0], a[1], a[2]) - f.at(b[0], b[1], b[2]);
  }
  if (q[axis] > n - 1) {
    std::array<int, 3> a = c, b = c;
    a[axis] = n - 1;
    b[axis] = n - 2;
    return 2.0 * f.at(a[0], a[1], a[2]) - f.at(b[0], b[1], b[2]);
  }
  return f.at(q[0], q[1], q[2]);
}

struct CellLocation {
  std::array<int, 3> base{0, 0, 0};
  Vec3 frac = Vec3::Zero();
};

CellLocation locate(const Grid& g, const Vec3& x) {
  CellLocation loc;
  for (int a = 0; a < g.dim(); ++a) {
    const int n = g.extent(a);
    double s = (x[a] - g.origin()[a]) / g.h(a);
    s = std::clamp(s, 0.0, static_cast<double>(n - 1));
    int i = std::min(static_cast<int>(std::floor(s)), n - 2);
    loc.base[a] = i;
    loc.frac[a] = s - i;
  }
  return loc;
}

template <typename Corner, typename T>
T multilinear(const Grid& g, const CellLocation& loc, Corner&& corner, T zero) {
  T acc = zero;
  const int kmax = g.dim() == 3 ? 2 : 1;
  for (int dk = 0; dk < kmax; ++dk) {
    for (int dj = 0; dj < 2; ++dj) {
      for (int di = 0; di < 2; ++di) {
        double w = (di ? loc.frac[0] : 1.0 - loc.frac[0]) *
                   (dj ? loc.frac[1] : 1.0 - loc.frac[1]);
        if (g.dim() == 3) w *= dk ? loc.frac[2] : 1.0 - loc.frac[2];
        if (w == 0.0) continue;
        acc += w * corner(g.index(loc.base[0] + di, loc.base[1] + dj, loc.base[2] + dk));
      }
    }
  }
  return acc;
}

double node_curvature_at(const ScalarField& f, std::size_t index) {
  const Grid& g = f.grid();
  if (g.is_boundary(index)) return std::numeric_limits<double>::quiet_NaN();
  const auto c = g.ijk(index);
  const int d = g.dim();
  Vec3 grad = Vec3::Zero();
  Mat3 hess = Mat3::Zero();
  const double v0 = f[index];
  for (int a = 0; a < d; ++a) {
    const double p = along(f, c, a, 1), m = along(f, c, a, -1);
    grad[a] = (p - m) / (2.0 * g.h(a));
    hess(a, a) = (p - 2.0 * v0 + m) / (g.h(a) * g.h(a));
  }
  for (int a = 0; a < d; ++a) {
    for (int b = a + 1; b < d; ++b) {
      auto val = [&](int sa, int sb) {
        std::array<int, 3> q = c;
        q[a] += sa;
        q[b] += sb;
        return f.at(q[0], q[1], q[2]);
      };
      const double m = (val(1, 1) - val(1, -1) - val(-1, 1) + val(-1, -1)) /
                       (4.0 * g.h(a) * g.h(b));
      hess(a, b) = m;
      hess(b, a) = m;
    }
  }
  const double n2 = grad.squaredNorm();
  const double n = std::sqrt(n2);
  if (n <= 1e-6) return std::numeric_limits<double>::quiet_NaN();
  return (n2 * hess.trace() - grad.dot(hess * grad)) / (n2 * n);
}

}  // namespace

std::vector<Vec3> gradient(const ScalarField& field, GradientScheme scheme) {
  const Grid& g = field.grid();
  std::vector<Vec3> out(g.node_count(), Vec3::Zero());
  for (std::size_t n = 0; n < out.size(); ++n) {
    const auto c = g.ijk(n);
    for (int a = 0; a < g.dim(); ++a) {
      const double v0 = field[n];
      const double p = along(field, c, a, 1), m = along(field, c, a, -1);
      if (scheme.kind == GradientScheme::Kind::central) {
        out[n][a] = (p - m) / (2.0 * g.h(a));
      } else if (scheme.direction[a] > 0.0) {
        out[n][a] = (v0 - m) / g.h(a);
      } else if (scheme.direction[a] < 0.0) {
        out[n][a] = (p - v0) / g.h(a);
      } else {
        out[n][a] = (p - m) / (2.0 * g.h(a));
      }
    }
  }
  return out;
}

Vec3 node_gradient(const ScalarField& field, std::size_t index) {
  const Grid& g = field.grid();
  const auto c = g.ijk(index);
  Vec3 out = Vec3::Zero();
  for (int a = 0; a < g.dim(); ++a) {
    out[a] = (along(field, c, a, 1) - along(field, c, a, -1)) / (2.0 * g.h(a));
  }
  return out;
}

double interpolate(const ScalarField& field, const Vec3& x) {
  const Grid& g = field.grid();
  const auto loc = locate(g, x);
  return multilinear(g, loc, [&](std::size_t n) { return field[n]; }, 0.0);
}

Vec3 interpolate_gradient(const ScalarField& field, const Vec3& x) {
  const Grid& g = field.grid();
  const auto loc = locate(g, x);
  return multilinear(g, loc, [&](std::size_t n) { return node_gradient(field, n); },
                     Vec3(Vec3::Zero()));
}

Vec3 project_along_gradient(const Vec3& x, double phi, const Vec3& grad_phi) {
  return x - phi * grad_phi;
}

Vec3 metric_projection(const ScalarField& field, const Vec3& x, SdfGate gate) {
  const Vec3 grad = interpolate_gradient(field, x);
  const double n = grad.norm();
  if (n < gate.lower || n > gate.upper) {
    throw OutOfTube("|grad phi| = " + std::to_string(n) + " outside the signed-distance gate");
  }
  return project_along_gradient(x, interpolate(field, x), grad);
}

std::vector<double> node_curvature(const ScalarField& field) {
  std::vector<double> out(field.grid().node_count());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = node_curvature_at(field, n);
  return out;
}

double curvature(const ScalarField& field, const Vec3& at) {
  const Grid& g = field.grid();
  const auto loc = locate(g, at);
  const double k = multilinear(g, loc, [&](std::size_t n) { return node_curvature_at(field, n); },
                               0.0);
  if (!std::isfinite(k)) {
    throw DegenerateGradient("curvature undefined: |grad phi| too small or point at the boundary");
  }
  return k;
}

std::size_t PhaseMask::count(Phase p) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), p));
}

PhaseMask classify_phases(const ScalarField& field) {
  const Grid& g = field.grid();
  PhaseMask mask{g, std::vector<Phase>(g.node_count(), Phase::plus)};
  for (std::size_t n = 0; n < mask.labels.size(); ++n) {
    const double v = field[n];
    bool adjacent = v == 0.0;
    const auto c = g.ijk(n);
    for (int a = 0; a < g.dim() && !adjacent; ++a) {
      for (int s : {-1, 1}) {
        const int q = c[a] + s;
        if (q < 0 || q >= g.extent(a)) continue;
        const double w = s > 0 ? field[n + g.stride(a)] : field[n - g.stride(a)];
        if ((v > 0.0) != (w > 0.0) || w == 0.0) adjacent = true;
      }
    }
    mask.labels[n] = adjacent ? Phase::interface_adjacent : (v > 0.0 ? Phase::plus : Phase::minus);
  }
  return mask;
}

}  // namespace vem::geometry
