#pragma once

#include "vem/common.hpp"
#include "vem/expression.hpp"
#include "vem/geometry.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace vem::velocity {

/// v(t, x) together with its Jacobian (row i, column j) = d v_i / d x_j.
///
/// Subclasses define the field for t >= 0. For t < 0 the field is continued
/// as v(t, x) = -v(-t, x) + 2 v(0, x) so characteristics can be traced
/// backwards through t = 0 with a continuous right-hand side.
class VelocityField {
 public:
  virtual ~VelocityField() = default;

  Vec3 eval(double t, const Vec3& x) const;
  Mat3 grad(double t, const Vec3& x) const;
  /// eval and grad together (fields may share work between the two).
  void jet(double t, const Vec3& x, Vec3& value, Mat3& jacobian) const;

  /// Lipschitz constant in x (V0 / lambda).
  double lipschitz() const { return lipschitz_; }
  /// Caller's assertion that +-v is subtangential to the domain boundary.
  bool subtangential_certified() const { return subtangential_; }
  virtual std::string name() const = 0;

 protected:
  VelocityField(double lipschitz, bool subtangential)
      : lipschitz_(lipschitz), subtangential_(subtangential) {}
  void set_lipschitz(double lambda) { lipschitz_ = lambda; }

  virtual Vec3 eval_forward(double t, const Vec3& x) const = 0;
  virtual Mat3 grad_forward(double t, const Vec3& x) const = 0;
  virtual void jet_forward(double t, const Vec3& x, Vec3& value, Mat3& jacobian) const {
    value = eval_forward(t, x);
    jacobian = grad_forward(t, x);
  }

 private:
  double lipschitz_;
  bool subtangential_;
};

using FieldPtr = std::shared_ptr<const VelocityField>;

/// omega * (-(y - cy), x - cx, 0).
class RigidRotation final : public VelocityField {
 public:
  explicit RigidRotation(double omega, const Vec3& center = Vec3::Zero());
  std::string name() const override { return "rigid_rotation"; }

 protected:
  Vec3 eval_forward(double t, const Vec3& x) const override;
  Mat3 grad_forward(double t, const Vec3& x) const override;

 private:
  double omega_;
  Vec3 center_;
};

class Translation final : public VelocityField {
 public:
  explicit Translation(const Vec3& c);
  std::string name() const override { return "translation"; }

 protected:
  Vec3 eval_forward(double t, const Vec3& x) const override;
  Mat3 grad_forward(double t, const Vec3& x) const override;

 private:
  Vec3 c_;
};

/// (sigma * y, 0, 0).
class Shear final : public VelocityField {
 public:
  explicit Shear(double sigma);
  std::string name() const override { return "shear"; }

 protected:
  Vec3 eval_forward(double t, const Vec3& x) const override;
  Mat3 grad_forward(double t, const Vec3& x) const override;

 private:
  double sigma_;
};

/// Time-reversing single vortex on the unit square:
/// u = -2 sin^2(pi x) sin(pi y) cos(pi y) cos(pi t / T),
/// v =  2 sin(pi x) cos(pi x) sin^2(pi y) cos(pi t / T).
/// Vanishes on the boundary of the unit square.
class SingleVortex final : public VelocityField {
 public:
  explicit SingleVortex(double period);
  std::string name() const override { return "single_vortex"; }

 protected:
  Vec3 eval_forward(double t, const Vec3& x) const override;
  Mat3 grad_forward(double t, const Vec3& x) const override;

 private:
  double period_;
};

/// Componentwise expressions in x, y, z, t; Jacobian by central differences.
class ExpressionField final : public VelocityField {
 public:
  /// `lipschitz` is usually filled in from lipschitz_estimate afterwards.
  ExpressionField(std::array<Expression, 3> components, double lipschitz = 0.0,
                  double fd_step = 1e-6);
  std::string name() const override { return "user_expression"; }
  void set_lipschitz_constant(double lambda) { set_lipschitz(lambda); }

 protected:
  Vec3 eval_forward(double t, const Vec3& x) const override;
  Mat3 grad_forward(double t, const Vec3& x) const override;

 private:
  std::array<Expression, 3> components_;
  double fd_step_;
};

/// chi(x) v(t, x) with chi = 1 farther than `width` from every face of the
/// box and a C^2 (quintic) ramp to 0 on the faces, so that +-v is
/// subtangential and the box is invariant under the flow. The Lipschitz
/// constant comes from lipschitz_estimate over the box.
class BoundaryCutoff final : public VelocityField {
 public:
  BoundaryCutoff(FieldPtr base, int dim, const geometry::Box& box, double width,
                 double horizon = 1.0);
  std::string name() const override { return base_->name(); }
  /// chi and its gradient.
  double cutoff(const Vec3& x, Vec3* grad = nullptr) const;

 protected:
  Vec3 eval_forward(double t, const Vec3& x) const override;
  Mat3 grad_forward(double t, const Vec3& x) const override;
  void jet_forward(double t, const Vec3& x, Vec3& value, Mat3& jacobian) const override;

 private:
  FieldPtr base_;
  int dim_;
  geometry::Box box_;
  double width_;
};

/// Catalog entry as it appears in scenario configs.
struct AnalyticFieldSpec {
  enum class Kind { rigid_rotation, translation, shear, single_vortex, user_expression };
  Kind kind = Kind::rigid_rotation;
  double omega = 1.0;
  Vec3 center = Vec3::Zero();
  Vec3 c = Vec3::Zero();
  double sigma = 1.0;
  double period = 2.0;
  std::array<std::string, 3> expressions{"0", "0", "0"};
};

std::string to_string(AnalyticFieldSpec::Kind kind);
/// Throws ValidationError for unknown names.
AnalyticFieldSpec::Kind parse_kind(const std::string& name);

/// Builds the field; user expressions get their Lipschitz constant from
/// lipschitz_estimate over `box` on [0, horizon].
FieldPtr make_field(const AnalyticFieldSpec& spec, int dim, const geometry::Box& box,
                    double horizon = 1.0, std::uint64_t seed = 1);

/// 1.05 times the largest sampled spectral norm of grad v over the box and
/// t in [0, horizon]. Requires samples >= 1000.
double lipschitz_estimate(const VelocityField& v, int dim, const geometry::Box& box,
                          std::size_t samples = 4096, double horizon = 1.0,
                          std::uint64_t seed = 1);

/// McShane-type extension v~_i(t, x) = inf_z { v_i(t, z) + lambda |x - z| }
/// with z over a fixed sample of the closed domain.
class LipschitzExtension {
 public:
  LipschitzExtension(FieldPtr field, double lambda, std::vector<Vec3> samples);
  /// Samples are the nodes of `grid` (all of them lie in the closed box).
  LipschitzExtension(FieldPtr field, double lambda, const geometry::Grid& grid);

  Vec3 operator()(double t, const Vec3& x) const;

  /// Extension with v(t, z) pre-evaluated at every sample.
  class Frozen {
   public:
    Vec3 operator()(const Vec3& x) const;

   private:
    friend class LipschitzExtension;
    const std::vector<Vec3>* samples_ = nullptr;
    std::vector<Vec3> values_;
    double lambda_ = 0.0;
  };
  Frozen at_time(double t) const;

  const std::vector<Vec3>& samples() const { return samples_; }
  double lambda() const { return lambda_; }

 private:
  FieldPtr field_;
  double lambda_;
  std::vector<Vec3> samples_;
};

/// Single evaluation of the extension over the nodes of `grid`.
Vec3 lipschitz_extend(const VelocityField& v, double lambda, const geometry::Grid& grid, double t,
                      const Vec3& x);

/// v(t, P x) with P the metric projection onto the zero level set of a
/// signed-distance field. Throws OutOfTube outside the distance gate.
Vec3 extended_velocity(const geometry::ScalarField& field, const VelocityField& v, double t,
                       const Vec3& x, geometry::SdfGate gate = {});

}  // namespace vem::velocity
