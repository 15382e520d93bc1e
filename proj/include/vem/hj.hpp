#pragma once

#include "vem/common.hpp"
#include "vem/geometry.hpp"
#include "vem/velocity.hpp"

#include <vector>

namespace vem::hj {

using velocity::VelocityField;

/// eta: [0, inf) -> [0, 1], C^1 and nonincreasing, 1 at r = 0 and 0 for
/// r >= r_star. The profile is the cubic smoothstep 1 - 3s^2 + 2s^3, s = r/r_star.
struct Regularizer {
  double r_star = 0.25;

  double eta(double r) const;
  double eta_prime(double r) const;

  /// r_star = 0.9 (inf |grad phi0| / 2)^2, kept inside (0, 1).
  static Regularizer from_gradient_bound(double inf_grad);
};

double eta(double r, const Regularizer& reg);

/// theta2 u p / (theta2 |p|^2 + eta(theta2 |p|^2)): the offset subtracted from
/// x before v is evaluated. theta2 = 1 for the plain equation and e^{2 V0 t}
/// after the monotonizing change of variables.
Vec3 projection_offset(const Vec3& p, double u, const Regularizer& reg, double theta2 = 1.0);

/// v(t, x - u p / (|p|^2 + eta(|p|^2))) . p; continuous through p = 0.
double regularized_hamiltonian(double t, const Vec3& x, const Vec3& p, double u,
                               const VelocityField& v, const Regularizer& reg);

/// Per-node artificial viscosities for one step, frozen from the field at
/// the start of the step.
struct StepCoefficients {
  std::vector<Vec3> alpha;
  /// max over interior nodes of sum_a alpha_a / h_a + V0 (V0 bounds |dH/du|);
  /// dt * rate <= 1 is the CFL bound.
  double rate = 0.0;
};

/// alpha_a at a node is the largest of |v_a(t, y)| + |u| |p| |dR/dp| |grad v(t, y)|
/// over the three-point stencil along a, with y = x - u R(p) and R(p) = p /
/// (|p|^2 + eta(|p|^2)). This bounds |dH/dp_a| at the stencil's central gradient.
StepCoefficients llf_coefficients(const geometry::ScalarField& field, const VelocityField& v,
                                  const Regularizer& reg, double V0);

/// One forward-Euler local Lax-Friedrichs step of
///   phi_t + v(t, x - phi grad phi / (|grad phi|^2 + eta)) . grad phi = 0
/// with central p and viscosity alpha_a (D+ - D-)/2 per axis. Boundary
/// nodes keep their value (the Dirichlet data). Throws CflViolation when
/// dt * rate > 1 and Error when a non-finite value appears.
geometry::ScalarField lax_friedrichs_step(const geometry::ScalarField& field,
                                          const VelocityField& v, const Regularizer& reg,
                                          double dt, double V0,
                                          const StepCoefficients* frozen = nullptr);

struct SolverConfig {
  double cfl = 0.5;
  double horizon = 1.0;
  /// Time between stored frames; 0 stores only the initial and final fields.
  double output_every = 0.0;
  /// Lipschitz constant of v; 0 takes v.lipschitz().
  double V0 = 0.0;
};

struct ViscositySolution {
  std::vector<geometry::ScalarField> frames;
  std::size_t steps = 0;
  double min_dt = 0.0;
  double max_dt = 0.0;

  const geometry::ScalarField& final() const { return frames.back(); }
};

/// Steps phi0 (zero on boundary nodes) to the horizon.
ViscositySolution solve_viscosity(const geometry::ScalarField& phi0, const VelocityField& v,
                                  const Regularizer& reg, const SolverConfig& config);

/// Sets boundary nodes to exactly 0 (tapered data is only 0 up to round-off there).
void zero_boundary(geometry::ScalarField& field);

/// Zero level set away from the Dirichlet boundary: boundary nodes take the
/// value of the nearest interior node before extraction.
geometry::InterfaceMesh interior_interface(const geometry::ScalarField& field,
                                           bool with_curvature = false);

/// Output times 0, every, 2 every, ..., horizon.
std::vector<double> output_times(double horizon, double every);

}  // namespace vem::hj
