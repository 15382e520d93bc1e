#include "vem/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace vem::geometry {

bool Box::contains(const Vec3& x, int dim, double tol) const {
  for (int a = 0; a < dim; ++a) {
    if (x[a] < lower[a] - tol || x[a] > upper[a] + tol) return false;
  }
  return true;
}

Box Box::inflated(double fraction, int dim) const {
  Box b = *this;
  for (int a = 0; a < dim; ++a) {
    const double pad = fraction * (upper[a] - lower[a]);
    b.lower[a] -= pad;
    b.upper[a] += pad;
  }
  return b;
}

double Box::distance_to_boundary(const Vec3& x, int dim) const {
  double d = std::numeric_limits<double>::infinity();
  for (int a = 0; a < dim; ++a) {
    d = std::min({d, x[a] - lower[a], upper[a] - x[a]});
  }
  return d;
}

Grid::Grid(int dim, const Vec3& origin, const Vec3& spacing, std::array<int, 3> extents)
    : dim_(dim), origin_(origin), spacing_(spacing), extents_(extents) {
  if (dim != 2 && dim != 3) throw ValidationError("grid dimension must be 2 or 3");
  for (int a = 0; a < dim; ++a) {
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a])) {
      throw ValidationError("grid spacing must be positive on every axis");
    }
    if (extents[a] < 4) {
      throw ValidationError("grid needs at least 4 nodes per axis, axis " +
                            std::to_string(a) + " has " + std::to_string(extents[a]));
    }
  }
  if (dim == 2) {
    extents_[2] = 1;
    origin_[2] = 0.0;
    spacing_[2] = spacing_[0];
  }
}

Grid Grid::from_box(int dim, const Vec3& lower, const Vec3& upper, double h) {
  if (!(h > 0.0)) throw ValidationError("grid spacing must be positive");
  Vec3 spacing = Vec3::Constant(h);
  std::array<int, 3> ext{1, 1, 1};
  for (int a = 0; a < dim; ++a) {
    const double len = upper[a] - lower[a];
    if (!(len > 0.0)) throw ValidationError("grid box must have positive extent");
    const int cells = std::max(1, static_cast<int>(std::lround(len / h)));
    spacing[a] = len / cells;
    ext[a] = cells + 1;
  }
  return Grid(dim, lower, spacing, ext);
}

double Grid::min_spacing() const {
  double m = spacing_[0];
  for (int a = 1; a < dim_; ++a) m = std::min(m, spacing_[a]);
  return m;
}

std::size_t Grid::node_count() const {
  return static_cast<std::size_t>(extents_[0]) * extents_[1] * extents_[2];
}

std::array<int, 3> Grid::ijk(std::size_t index) const {
  const auto n0 = static_cast<std::size_t>(extents_[0]);
  const auto n1 = static_cast<std::size_t>(extents_[1]);
  return {static_cast<int>(index % n0), static_cast<int>((index / n0) % n1),
          static_cast<int>(index / (n0 * n1))};
}

Vec3 Grid::node(int i, int j, int k) const {
  Vec3 x = origin_;
  x[0] += i * spacing_[0];
  x[1] += j * spacing_[1];
  if (dim_ == 3) x[2] += k * spacing_[2];
  return x;
}

Vec3 Grid::node(std::size_t index) const {
  const auto c = ijk(index);
  return node(c[0], c[1], c[2]);
}

std::size_t Grid::stride(int axis) const {
  if (axis == 0) return 1;
  if (axis == 1) return static_cast<std::size_t>(extents_[0]);
  return static_cast<std::size_t>(extents_[0]) * extents_[1];
}

bool Grid::is_boundary(std::size_t index) const {
  const auto c = ijk(index);
  for (int a = 0; a < dim_; ++a) {
    if (c[a] == 0 || c[a] == extents_[a] - 1) return true;
  }
  return false;
}

Box Grid::box() const {
  Box b;
  b.lower = origin_;
  b.upper = origin_;
  for (int a = 0; a < dim_; ++a) b.upper[a] += (extents_[a] - 1) * spacing_[a];
  return b;
}

bool Grid::same_layout(const Grid& other) const {
  if (dim_ != other.dim_ || extents_ != other.extents_) return false;
  for (int a = 0; a < dim_; ++a) {
    const double tol = 1e-12 * std::max(1.0, std::abs(spacing_[a]));
    if (std::abs(spacing_[a] - other.spacing_[a]) > tol) return false;
    if (std::abs(origin_[a] - other.origin_[a]) > 1e-12 * std::max(1.0, std::abs(origin_[a]))) {
      return false;
    }
  }
  return true;
}

ScalarField::ScalarField(Grid grid, std::vector<double> values, double t)
    : grid_(std::move(grid)), values_(std::move(values)), t_(t) {
  if (values_.size() != grid_.node_count()) {
    throw GridMismatch("field has " + std::to_string(values_.size()) + " values for " +
                       std::to_string(grid_.node_count()) + " nodes");
  }
}

ScalarField::ScalarField(Grid grid, double fill, double t)
    : grid_(std::move(grid)), values_(grid_.node_count(), fill), t_(t) {}

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace vem::geometry
