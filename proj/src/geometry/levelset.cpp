#include "vem/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace vem::geometry {

ScalarField LevelSetFunction::sample(const Grid& grid, double t) const {
  return ScalarField::sample(grid, [this](const Vec3& x) { return value(x); }, t);
}

SphereSdf::SphereSdf(int dim, const Vec3& center, double radius, bool positive_inside)
    : dim_(dim), center_(center), radius_(radius), sign_(positive_inside ? 1.0 : -1.0) {
  if (!(radius > 0.0)) throw ValidationError("sphere radius must be positive");
  if (dim_ == 2) center_[2] = 0.0;
}

double SphereSdf::value(const Vec3& x) const {
  Vec3 d = x - center_;
  if (dim_ == 2) d[2] = 0.0;
  return sign_ * (radius_ - d.norm());
}

Vec3 SphereSdf::gradient(const Vec3& x) const {
  Vec3 d = x - center_;
  if (dim_ == 2) d[2] = 0.0;
  const double r = d.norm();
  if (r == 0.0) return Vec3::Zero();
  return -sign_ * d / r;
}

EllipseSdf::EllipseSdf(const Vec3& center, double semi_x, double semi_y, bool positive_inside)
    : center_(center), a_(semi_x), b_(semi_y), sign_(positive_inside ? 1.0 : -1.0) {
  if (!(a_ > 0.0) || !(b_ > 0.0)) throw ValidationError("ellipse radii must be positive");
  center_[2] = 0.0;
}

Vec3 EllipseSdf::closest_point(const Vec3& x) const {
  // Work in the first quadrant and minimise the squared distance over the
  // parameter angle: coarse scan, then golden-section refinement.
  const double px = std::abs(x[0] - center_[0]);
  const double py = std::abs(x[1] - center_[1]);
  auto dist2 = [&](double th) {
    const double dx = a_ * std::cos(th) - px, dy = b_ * std::sin(th) - py;
    return dx * dx + dy * dy;
  };
  constexpr int coarse = 256;
  const double step = 0.5 * std::numbers::pi / coarse;
  int best = 0;
  double best_d = dist2(0.0);
  for (int i = 1; i <= coarse; ++i) {
    const double d = dist2(i * step);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  double lo = std::max(0.0, (best - 1) * step);
  double hi = std::min(0.5 * std::numbers::pi, (best + 1) * step);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
  double fc = dist2(c), fd = dist2(d);
  for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - g * (hi - lo);
      fc = dist2(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + g * (hi - lo);
      fd = dist2(d);
    }
  }
  const double th = 0.5 * (lo + hi);
  double qx = a_ * std::cos(th), qy = b_ * std::sin(th);
  if (x[0] < center_[0]) qx = -qx;
  if (x[1] < center_[1]) qy = -qy;
  return Vec3(center_[0] + qx, center_[1] + qy, 0.0);
}

double EllipseSdf::value(const Vec3& x) const {
  const Vec3 q = closest_point(x);
  const double dx = (x[0] - center_[0]) / a_, dy = (x[1] - center_[1]) / b_;
  const double d = std::hypot(x[0] - q[0], x[1] - q[1]);
  return sign_ * (dx * dx + dy * dy < 1.0 ? d : -d);
}

Vec3 EllipseSdf::gradient(const Vec3& x) const {
  const Vec3 q = closest_point(x);
  Vec3 n((q[0] - center_[0]) / (a_ * a_), (q[1] - center_[1]) / (b_ * b_), 0.0);
  const double len = n.norm();
  if (len == 0.0) return Vec3::Zero();
  return -sign_ * n / len;
}

ScaledLevelSet::ScaledLevelSet(LevelSetPtr base, double factor)
    : base_(std::move(base)), factor_(factor) {}

double ScaledLevelSet::value(const Vec3& x) const { return factor_ * base_->value(x); }
Vec3 ScaledLevelSet::gradient(const Vec3& x) const { return factor_ * base_->gradient(x); }

BoundaryTaperedLevelSet::BoundaryTaperedLevelSet(LevelSetPtr base, int dim, const Box& box,
                                                 double clamp, double clamp_width,
                                                 double taper_width)
    : base_(std::move(base)),
      dim_(dim),
      box_(box),
      clamp_(clamp),
      clamp_width_(clamp_width),
      taper_width_(taper_width) {
  if (clamp_ > 0.0 && !(clamp_width_ > 0.0 && clamp_width_ < clamp_)) {
    throw ValidationError("clamp width must lie in (0, clamp)");
  }
}

double BoundaryTaperedLevelSet::saturate(double s, double* slope) const {
  if (!(clamp_ > 0.0)) {
    *slope = 1.0;
    return s;
  }
  const double a = clamp_ - clamp_width_;
  const double m = std::abs(s);
  const double sg = s < 0.0 ? -1.0 : 1.0;
  if (m <= a) {
    *slope = 1.0;
    return s;
  }
  if (m >= a + 2.0 * clamp_width_) {
    *slope = 0.0;
    return sg * clamp_;
  }
  const double r = m - a;
  *slope = 1.0 - r / (2.0 * clamp_width_);
  return sg * (m - r * r / (4.0 * clamp_width_));
}

double BoundaryTaperedLevelSet::taper(const Vec3& x, Vec3* grad) const {
  grad->setZero();
  if (!(taper_width_ > 0.0)) return 1.0;
  double d = std::numeric_limits<double>::infinity();
  int axis = 0;
  double dir = 1.0;
  for (int a = 0; a < dim_; ++a) {
    if (x[a] - box_.lower[a] < d) {
      d = x[a] - box_.lower[a];
      axis = a;
      dir = 1.0;
    }
    if (box_.upper[a] - x[a] < d) {
      d = box_.upper[a] - x[a];
      axis = a;
      dir = -1.0;
    }
  }
  if (d <= 0.0) return 0.0;
  if (d >= taper_width_) return 1.0;
  const double s = d / taper_width_;
  (*grad)[axis] = dir * 6.0 * s * (1.0 - s) / taper_width_;
  return s * s * (3.0 - 2.0 * s);
}

double BoundaryTaperedLevelSet::value(const Vec3& x) const {
  double slope;
  Vec3 tg;
  return saturate(base_->value(x), &slope) * taper(x, &tg);
}

Vec3 BoundaryTaperedLevelSet::gradient(const Vec3& x) const {
  double slope;
  Vec3 tg;
  const double s = saturate(base_->value(x), &slope);
  const double tp = taper(x, &tg);
  return slope * tp * base_->gradient(x) + s * tg;
}

ExpressionLevelSet::ExpressionLevelSet(Expression expr, double fd_step)
    : expr_(std::move(expr)), fd_step_(fd_step) {}

double ExpressionLevelSet::value(const Vec3& x) const { return expr_(x[0], x[1], x[2], 0.0); }

Vec3 ExpressionLevelSet::gradient(const Vec3& x) const {
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 p = x, m = x;
    p[a] += fd_step_;
    m[a] -= fd_step_;
    g[a] = (value(p) - value(m)) / (2.0 * fd_step_);
  }
  return g;
}

InterpolatedLevelSet::InterpolatedLevelSet(ScalarField field) : field_(std::move(field)) {}

double InterpolatedLevelSet::value(const Vec3& x) const { return interpolate(field_, x); }
Vec3 InterpolatedLevelSet::gradient(const Vec3& x) const {
  return interpolate_gradient(field_, x);
}

}  // namespace vem::geometry
