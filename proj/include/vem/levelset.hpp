#pragma once

#include "vem/common.hpp"
#include "vem/expression.hpp"
#include "vem/geometry.hpp"

#include <memory>

namespace vem::geometry {

/// Closed-form (or pointwise computable) level-set function phi0 with its
/// gradient. Characteristic seeding needs exact point values, which a grid
/// interpolant cannot supply.
class LevelSetFunction {
 public:
  virtual ~LevelSetFunction() = default;
  virtual double value(const Vec3& x) const = 0;
  virtual Vec3 gradient(const Vec3& x) const = 0;

  ScalarField sample(const Grid& grid, double t = 0.0) const;
};

using LevelSetPtr = std::shared_ptr<const LevelSetFunction>;

/// Signed distance to a circle (2D) or sphere (3D), positive inside by default.
class SphereSdf final : public LevelSetFunction {
 public:
  SphereSdf(int dim, const Vec3& center, double radius, bool positive_inside = true);
  double value(const Vec3& x) const override;
  Vec3 gradient(const Vec3& x) const override;

  const Vec3& center() const { return center_; }
  double radius() const { return radius_; }

 private:
  int dim_;
  Vec3 center_;
  double radius_;
  double sign_;
};

/// Signed distance to an axis-aligned ellipse in the xy-plane, positive inside.
class EllipseSdf final : public LevelSetFunction {
 public:
  EllipseSdf(const Vec3& center, double semi_x, double semi_y, bool positive_inside = true);
  double value(const Vec3& x) const override;
  Vec3 gradient(const Vec3& x) const override;
  /// Nearest point on the ellipse.
  Vec3 closest_point(const Vec3& x) const;

 private:
  Vec3 center_;
  double a_;
  double b_;
  double sign_;
};

/// factor * base(x).
class ScaledLevelSet final : public LevelSetFunction {
 public:
  ScaledLevelSet(LevelSetPtr base, double factor);
  double value(const Vec3& x) const override;
  Vec3 gradient(const Vec3& x) const override;

 private:
  LevelSetPtr base_;
  double factor_;
};

/// Saturates |base| at `clamp` (identity for |base| <= clamp - width, C^1)
/// and multiplies by a smoothstep taper that reaches zero on the box faces.
/// The result vanishes on the domain boundary as the grid solver requires.
class BoundaryTaperedLevelSet final : public LevelSetFunction {
 public:
  BoundaryTaperedLevelSet(LevelSetPtr base, int dim, const Box& box, double clamp,
                          double clamp_width, double taper_width);
  double value(const Vec3& x) const override;
  Vec3 gradient(const Vec3& x) const override;

 private:
  double saturate(double s, double* slope) const;
  double taper(const Vec3& x, Vec3* grad) const;

  LevelSetPtr base_;
  int dim_;
  Box box_;
  double clamp_;
  double clamp_width_;
  double taper_width_;
};

/// User expression phi0(x, y, z); gradient by central differences.
class ExpressionLevelSet final : public LevelSetFunction {
 public:
  explicit ExpressionLevelSet(Expression expr, double fd_step = 1e-6);
  double value(const Vec3& x) const override;
  Vec3 gradient(const Vec3& x) const override;

 private:
  Expression expr_;
  double fd_step_;
};

/// Grid-sampled phi0 seen through multilinear interpolation.
class InterpolatedLevelSet final : public LevelSetFunction {
 public:
  explicit InterpolatedLevelSet(ScalarField field);
  double value(const Vec3& x) const override;
  Vec3 gradient(const Vec3& x) const override;

 private:
  ScalarField field_;
};

}  // namespace vem::geometry
