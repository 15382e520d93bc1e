#include "vem/velocity.hpp"

#include <limits>

namespace vem::velocity {

LipschitzExtension::LipschitzExtension(FieldPtr field, double lambda, std::vector<Vec3> samples)
    : field_(std::move(field)), lambda_(lambda), samples_(std::move(samples)) {
  if (samples_.empty()) throw ValidationError("Lipschitz extension needs domain samples");
  if (lambda_ < 0.0) throw ValidationError("Lipschitz constant must be nonnegative");
}

LipschitzExtension::LipschitzExtension(FieldPtr field, double lambda, const geometry::Grid& grid)
    : LipschitzExtension(std::move(field), lambda, [&] {
        std::vector<Vec3> pts(grid.node_count());
        for (std::size_t n = 0; n < pts.size(); ++n) pts[n] = grid.node(n);
        return pts;
      }()) {}

LipschitzExtension::Frozen LipschitzExtension::at_time(double t) const {
  Frozen f;
  f.samples_ = &samples_;
  f.lambda_ = lambda_;
  f.values_.reserve(samples_.size());
  for (const Vec3& z : samples_) f.values_.push_back(field_->eval(t, z));
  return f;
}

Vec3 LipschitzExtension::Frozen::operator()(const Vec3& x) const {
  Vec3 best = Vec3::Constant(std::numeric_limits<double>::infinity());
  const auto& z = *samples_;
  for (std::size_t n = 0; n < z.size(); ++n) {
    const double d = lambda_ * (x - z[n]).norm();
    best = best.cwiseMin(values_[n] + Vec3::Constant(d));
  }
  return best;
}

Vec3 LipschitzExtension::operator()(double t, const Vec3& x) const { return at_time(t)(x); }

Vec3 lipschitz_extend(const VelocityField& v, double lambda, const geometry::Grid& grid, double t,
                      const Vec3& x) {
  Vec3 best = Vec3::Constant(std::numeric_limits<double>::infinity());
  for (std::size_t n = 0; n < grid.node_count(); ++n) {
    const Vec3 z = grid.node(n);
    best = best.cwiseMin(v.eval(t, z) + Vec3::Constant(lambda * (x - z).norm()));
  }
  return best;
}

Vec3 extended_velocity(const geometry::ScalarField& field, const VelocityField& v, double t,
                       const Vec3& x, geometry::SdfGate gate) {
  return v.eval(t, geometry::metric_projection(field, x, gate));
}

}  // namespace vem::velocity
