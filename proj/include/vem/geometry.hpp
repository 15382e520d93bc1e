#pragma once

#include "vem/common.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vem::geometry {

/// Axis-aligned box standing in for the bounded domain.
struct Box {
  Vec3 lower = Vec3::Zero();
  Vec3 upper = Vec3::Zero();

  bool contains(const Vec3& x, int dim, double tol = 0.0) const;
  /// Grows every active axis by `fraction` of its length on each side.
  Box inflated(double fraction, int dim) const;
  /// Distance from an interior point to the nearest face (negative outside).
  double distance_to_boundary(const Vec3& x, int dim) const;
};

/// Uniform node-centred grid in 2 or 3 dimensions. Node (i,j,k) sits at
/// origin + (i*h0, j*h1, k*h2); in 2D the third extent is 1.
class Grid {
 public:
  Grid(int dim, const Vec3& origin, const Vec3& spacing, std::array<int, 3> extents);

  /// Grid covering [lower, upper] with spacing as close to `h` as the box allows.
  static Grid from_box(int dim, const Vec3& lower, const Vec3& upper, double h);

  int dim() const { return dim_; }
  const Vec3& origin() const { return origin_; }
  const Vec3& spacing() const { return spacing_; }
  double h(int axis) const { return spacing_[axis]; }
  /// Smallest spacing over active axes.
  double min_spacing() const;
  const std::array<int, 3>& extents() const { return extents_; }
  int extent(int axis) const { return extents_[axis]; }
  std::size_t node_count() const;

  std::size_t index(int i, int j, int k = 0) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(extents_[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(extents_[1]) * k);
  }
  std::array<int, 3> ijk(std::size_t index) const;
  Vec3 node(int i, int j, int k = 0) const;
  Vec3 node(std::size_t index) const;
  /// Offset between linear indices of neighbours along `axis`.
  std::size_t stride(int axis) const;
  bool is_boundary(std::size_t index) const;
  Box box() const;

  bool same_layout(const Grid& other) const;

 private:
  int dim_;
  Vec3 origin_;
  Vec3 spacing_;
  std::array<int, 3> extents_;
};

/// Node samples of a level-set function at a single time.
class ScalarField {
 public:
  ScalarField(Grid grid, std::vector<double> values, double t = 0.0);
  ScalarField(Grid grid, double fill, double t = 0.0);

  template <typename F>
  static ScalarField sample(const Grid& grid, F&& f, double t = 0.0) {
    std::vector<double> values(grid.node_count());
    for (std::size_t n = 0; n < values.size(); ++n) values[n] = f(grid.node(n));
    return ScalarField(grid, std::move(values), t);
  }

  const Grid& grid() const { return grid_; }
  double time() const { return t_; }
  void set_time(double t) { t_ = t; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t n) const { return values_[n]; }
  double& operator[](std::size_t n) { return values_[n]; }
  double at(int i, int j, int k = 0) const { return values_[grid_.index(i, j, k)]; }

  bool all_finite() const;
  double max_abs() const;

 private:
  Grid grid_;
  std::vector<double> values_;
  double t_;
};

struct GradientScheme {
  enum class Kind { central, upwind };
  Kind kind = Kind::central;
  /// For upwind: per-axis characteristic direction; a positive component
  /// selects the backward difference on that axis.
  Vec3 direction = Vec3::Zero();

  static GradientScheme central() { return {}; }
  static GradientScheme upwind(const Vec3& dir) { return {Kind::upwind, dir}; }
};

/// Per-node gradient. Boundary nodes use a linearly extrapolated ghost, which
/// reduces to a one-sided difference.
std::vector<Vec3> gradient(const ScalarField& field,
                           GradientScheme scheme = GradientScheme::central());

/// Central-difference gradient at a single node.
Vec3 node_gradient(const ScalarField& field, std::size_t index);

/// Multilinear interpolation; points outside the box are clamped to it.
double interpolate(const ScalarField& field, const Vec3& x);
/// Multilinear interpolation of node central-difference gradients.
Vec3 interpolate_gradient(const ScalarField& field, const Vec3& x);

/// Sampled zero level set. In 2D each element is a segment (third index -1);
/// in 3D each element is a triangle.
struct InterfaceMesh {
  int dim = 2;
  double t = 0.0;
  std::vector<Vec3> points;
  /// nu = -grad(phi)/|grad(phi)|, pointing from the positive to the negative phase.
  std::vector<Vec3> normals;
  /// Empty when curvature was not requested.
  std::vector<double> curvature;
  std::vector<std::array<int, 3>> elements;
  /// Set when some crossing had |grad(phi)| < 1e-10.
  bool degenerate = false;

  bool empty() const { return points.empty(); }
};

/// Piecewise-linear zero isocontour: marching squares in 2D, marching
/// tetrahedra (six per cell) in 3D.
InterfaceMesh extract_interface(const ScalarField& field, bool with_curvature = true);

/// Band of |grad(phi)| accepted as the signed-distance regime.
struct SdfGate {
  double lower = 0.9;
  double upper = 1.1;
};

/// x - phi(x) grad(phi)(x) with interpolated field data. Throws OutOfTube
/// when |grad(phi)(x)| is outside the gate.
Vec3 metric_projection(const ScalarField& field, const Vec3& x, SdfGate gate = {});
/// Same formula with caller-supplied value and gradient.
Vec3 project_along_gradient(const Vec3& x, double phi, const Vec3& grad_phi);

/// Distance from x to a segment (2D mesh) or triangle (3D mesh) element.
double distance_to_element(const InterfaceMesh& mesh, std::size_t element, const Vec3& x);
/// Unsigned distance from x to the mesh (points when there are no elements).
double distance_to_mesh(const InterfaceMesh& mesh, const Vec3& x);
/// sign(sign_reference(x)) times the distance to the mesh.
double signed_distance_oracle(const InterfaceMesh& mesh, const ScalarField& sign_reference,
                              const Vec3& x);
/// Symmetric Hausdorff distance between a mesh and a point cloud on the
/// reference interface.
double hausdorff_distance(const InterfaceMesh& mesh, std::span<const Vec3> reference);

/// kappa = -div(nu) = div(grad(phi)/|grad(phi)|), interpolated to `at`.
/// For phi = 1 - |x| (positive inside) this is -1 on the unit circle and -2 on
/// the unit sphere.
double curvature(const ScalarField& field, const Vec3& at);
/// kappa at every node (NaN where |grad(phi)| <= 1e-6).
std::vector<double> node_curvature(const ScalarField& field);

enum class Phase : std::uint8_t { plus, minus, interface_adjacent };

struct PhaseMask {
  Grid grid;
  std::vector<Phase> labels;

  std::size_t count(Phase p) const;
};

/// Nodes with a sign change to an axis neighbour (or a zero value) are
/// interface-adjacent; the rest split by sign.
PhaseMask classify_phases(const ScalarField& field);

// --- text formats -------------------------------------------------------

/// CSV: t,x,y[,z],nx,ny[,nz],kappa (kappa is "nan" when unavailable).
void write_mesh_csv(std::ostream& os, const InterfaceMesh& mesh);
/// Header lines (dim, origin, h, extents, t) then one value per line with the
/// x index varying fastest.
void write_field_text(std::ostream& os, const ScalarField& field);
ScalarField read_field_text(std::istream& is);
/// CSV x,y[,z],value over the whole 2D field or the k = `slice` plane in 3D.
void write_field_csv(std::ostream& os, const ScalarField& field, int slice = 0);

}  // namespace vem::geometry
