#include "vem/velocity.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace vem::velocity {

namespace {

constexpr double pi = std::numbers::pi;

}  // namespace

Vec3 VelocityField::eval(double t, const Vec3& x) const {
  if (t >= 0.0) return eval_forward(t, x);
  return -eval_forward(-t, x) + 2.0 * eval_forward(0.0, x);
}

Mat3 VelocityField::grad(double t, const Vec3& x) const {
  if (t >= 0.0) return grad_forward(t, x);
  return -grad_forward(-t, x) + 2.0 * grad_forward(0.0, x);
}

void VelocityField::jet(double t, const Vec3& x, Vec3& value, Mat3& jacobian) const {
  if (t >= 0.0) {
    jet_forward(t, x, value, jacobian);
    return;
  }
  Vec3 v0;
  Mat3 j0;
  jet_forward(-t, x, value, jacobian);
  jet_forward(0.0, x, v0, j0);
  value = -value + 2.0 * v0;
  jacobian = -jacobian + 2.0 * j0;
}

RigidRotation::RigidRotation(double omega, const Vec3& center)
    : VelocityField(std::abs(omega), false), omega_(omega), center_(center) {}

Vec3 RigidRotation::eval_forward(double, const Vec3& x) const {
  return Vec3(-omega_ * (x[1] - center_[1]), omega_ * (x[0] - center_[0]), 0.0);
}

Mat3 RigidRotation::grad_forward(double, const Vec3&) const {
  Mat3 j = Mat3::Zero();
  j(0, 1) = -omega_;
  j(1, 0) = omega_;
  return j;
}

Translation::Translation(const Vec3& c) : VelocityField(0.0, false), c_(c) {}

Vec3 Translation::eval_forward(double, const Vec3&) const { return c_; }
Mat3 Translation::grad_forward(double, const Vec3&) const { return Mat3::Zero(); }

Shear::Shear(double sigma) : VelocityField(std::abs(sigma), false), sigma_(sigma) {}

Vec3 Shear::eval_forward(double, const Vec3& x) const { return Vec3(sigma_ * x[1], 0.0, 0.0); }

Mat3 Shear::grad_forward(double, const Vec3&) const {
  Mat3 j = Mat3::Zero();
  j(0, 1) = sigma_;
  return j;
}

SingleVortex::SingleVortex(double period) : VelocityField(0.0, true), period_(period) {
  if (!(period > 0.0)) throw ValidationError("single vortex period must be positive");
  const geometry::Box unit{Vec3::Zero(), Vec3(1.0, 1.0, 0.0)};
  set_lipschitz(lipschitz_estimate(*this, 2, unit, 4096, period));
}

Vec3 SingleVortex::eval_forward(double t, const Vec3& x) const {
  const double c = std::cos(pi * t / period_);
  const double sx = std::sin(pi * x[0]), sy = std::sin(pi * x[1]);
  return Vec3(-sx * sx * std::sin(2 * pi * x[1]) * c, std::sin(2 * pi * x[0]) * sy * sy * c, 0.0);
}

Mat3 SingleVortex::grad_forward(double t, const Vec3& x) const {
  const double c = std::cos(pi * t / period_);
  const double sx = std::sin(pi * x[0]), sy = std::sin(pi * x[1]);
  const double s2x = std::sin(2 * pi * x[0]), s2y = std::sin(2 * pi * x[1]);
  Mat3 j = Mat3::Zero();
  j(0, 0) = -pi * s2x * s2y * c;
  j(0, 1) = -2 * pi * sx * sx * std::cos(2 * pi * x[1]) * c;
  j(1, 0) = 2 * pi * std::cos(2 * pi * x[0]) * sy * sy * c;
  j(1, 1) = pi * s2x * s2y * c;
  return j;
}

ExpressionField::ExpressionField(std::array<Expression, 3> components, double lipschitz,
                                 double fd_step)
    : VelocityField(lipschitz, false), components_(std::move(components)), fd_step_(fd_step) {}

Vec3 ExpressionField::eval_forward(double t, const Vec3& x) const {
  Vec3 v;
  for (int i = 0; i < 3; ++i) v[i] = components_[i](x[0], x[1], x[2], t);
  return v;
}

Mat3 ExpressionField::grad_forward(double t, const Vec3& x) const {
  Mat3 j;
  for (int a = 0; a < 3; ++a) {
    Vec3 p = x, m = x;
    p[a] += fd_step_;
    m[a] -= fd_step_;
    j.col(a) = (eval_forward(t, p) - eval_forward(t, m)) / (2.0 * fd_step_);
  }
  return j;
}

std::string to_string(AnalyticFieldSpec::Kind kind) {
  switch (kind) {
    case AnalyticFieldSpec::Kind::rigid_rotation: return "rigid_rotation";
    case AnalyticFieldSpec::Kind::translation: return "translation";
    case AnalyticFieldSpec::Kind::shear: return "shear";
    case AnalyticFieldSpec::Kind::single_vortex: return "single_vortex";
    case AnalyticFieldSpec::Kind::user_expression: return "user_expression";
  }
  return "unknown";
}

AnalyticFieldSpec::Kind parse_kind(const std::string& name) {
  using K = AnalyticFieldSpec::Kind;
  for (K k : {K::rigid_rotation, K::translation, K::shear, K::single_vortex, K::user_expression}) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError("unknown velocity kind '" + name + "'");
}

FieldPtr make_field(const AnalyticFieldSpec& spec, int dim, const geometry::Box& box,
                    double horizon, std::uint64_t seed) {
  using K = AnalyticFieldSpec::Kind;
  switch (spec.kind) {
    case K::rigid_rotation: return std::make_shared<RigidRotation>(spec.omega, spec.center);
    case K::translation: return std::make_shared<Translation>(spec.c);
    case K::shear: return std::make_shared<Shear>(spec.sigma);
    case K::single_vortex: return std::make_shared<SingleVortex>(spec.period);
    case K::user_expression: {
      auto f = std::make_shared<ExpressionField>(std::array<Expression, 3>{
          Expression(spec.expressions[0]), Expression(spec.expressions[1]),
          Expression(spec.expressions[2])});
      f->set_lipschitz_constant(lipschitz_estimate(*f, dim, box, 4096, horizon, seed));
      return f;
    }
  }
  throw ValidationError("unknown velocity kind");
}

BoundaryCutoff::BoundaryCutoff(FieldPtr base, int dim, const geometry::Box& box, double width,
                               double horizon)
    : VelocityField(0.0, true), base_(std::move(base)), dim_(dim), box_(box), width_(width) {
  if (!base_) throw ValidationError("boundary cutoff needs a base field");
  for (int a = 0; a < dim_; ++a) {
    if (!(width_ > 0.0 && 2.0 * width_ < box_.upper[a] - box_.lower[a]))
      throw ValidationError("cutoff width must lie in (0, half the box width)");
  }
  set_lipschitz(lipschitz_estimate(*this, dim_, box_, 20000, horizon, 7));
}

double BoundaryCutoff::cutoff(const Vec3& x, Vec3* grad) const {
  // Quintic smootherstep 6s^5 - 15s^4 + 10s^3 per face.
  auto ramp = [](double s, double* slope) {
    if (s <= 0.0) {
      *slope = 0.0;
      return 0.0;
    }
    if (s >= 1.0) {
      *slope = 0.0;
      return 1.0;
    }
    *slope = 30.0 * s * s * (s - 1.0) * (s - 1.0);
    return s * s * s * (s * (6.0 * s - 15.0) + 10.0);
  };
  double chi = 1.0;
  Vec3 factors = Vec3::Ones();
  Vec3 slopes = Vec3::Zero();
  for (int a = 0; a < dim_; ++a) {
    double dl, du;
    const double fl = ramp((x[a] - box_.lower[a]) / width_, &dl);
    const double fu = ramp((box_.upper[a] - x[a]) / width_, &du);
    factors[a] = fl * fu;
    slopes[a] = (dl * fu - fl * du) / width_;
    chi *= factors[a];
  }
  if (grad) {
    grad->setZero();
    for (int a = 0; a < dim_; ++a) {
      double others = 1.0;
      for (int b = 0; b < dim_; ++b)
        if (b != a) others *= factors[b];
      (*grad)[a] = slopes[a] * others;
    }
  }
  return chi;
}

Vec3 BoundaryCutoff::eval_forward(double t, const Vec3& x) const {
  return cutoff(x) * base_->eval(t, x);
}

Mat3 BoundaryCutoff::grad_forward(double t, const Vec3& x) const {
  Vec3 g;
  const double chi = cutoff(x, &g);
  return chi * base_->grad(t, x) + base_->eval(t, x) * g.transpose();
}

void BoundaryCutoff::jet_forward(double t, const Vec3& x, Vec3& value, Mat3& jacobian) const {
  Vec3 g;
  const double chi = cutoff(x, &g);
  Vec3 b;
  Mat3 jb;
  base_->jet(t, x, b, jb);
  value = chi * b;
  jacobian = chi * jb + b * g.transpose();
}

double lipschitz_estimate(const VelocityField& v, int dim, const geometry::Box& box,
                          std::size_t samples, double horizon, std::uint64_t seed) {
  if (samples < 1000) throw ValidationError("lipschitz_estimate needs at least 1000 samples");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    Vec3 x = Vec3::Zero();
    for (int a = 0; a < dim; ++a) x[a] = box.lower[a] + unit(rng) * (box.upper[a] - box.lower[a]);
    const double t = unit(rng) * horizon;
    const Mat3 j = v.grad(t, x);
    const Eigen::MatrixXd block = j.topLeftCorner(dim, dim);
    const double norm = Eigen::JacobiSVD<Eigen::MatrixXd>(block).singularValues()(0);
    worst = std::max(worst, norm);
  }
  return 1.05 * worst;
}

}  // namespace vem::velocity
