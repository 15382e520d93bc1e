#pragma once

#include "vem/characteristics.hpp"
#include "vem/common.hpp"
#include "vem/geometry.hpp"
#include "vem/levelset.hpp"
#include "vem/velocity.hpp"

#include <string>
#include <vector>

namespace vem::baselines {

using velocity::VelocityField;

/// f(t, x) = phi0(X(0, t, x)) with the backward flow integrated by RK4.
double linear_transport_exact(const geometry::LevelSetFunction& phi0, const VelocityField& v,
                              double t, const Vec3& x, double dt = 1e-3,
                              const characteristics::Guard* guard = nullptr);

/// linear_transport_exact at every grid node.
geometry::ScalarField linear_transport_field(const geometry::LevelSetFunction& phi0,
                                             const VelocityField& v, double t,
                                             const geometry::Grid& grid, double dt = 1e-3);

/// State of q = grad f along x' = v(s, x), where q' = -grad v^T q, so that
/// (1/2) d|q|^2/ds = -<grad v q, q>.
struct GradientTrace {
  double s = 0.0;
  Vec3 x = Vec3::Zero();
  Vec3 q = Vec3::Zero();
};

std::vector<GradientTrace> trace_transport_gradient(const geometry::LevelSetFunction& phi0,
                                                    const VelocityField& v, const Vec3& xi,
                                                    double t1, double dt = 1e-3);

/// phi <grad v n, n> with n = grad phi / |grad phi| (central differences),
/// the source of the nonlinear modification. Throws DegenerateGradient when
/// |grad phi| <= 1e-10 at the node.
double nmm_rhs(const geometry::ScalarField& field, const VelocityField& v, std::size_t node);

/// phi (beta - |grad phi|).
double nmm_beta_rhs(double phi, double grad_norm, double beta);
/// Same, with phi and the central gradient taken from the field.
double nmm_beta_rhs(const geometry::ScalarField& field, double beta, std::size_t node);

enum class BaselineKind { linear_transport, nmm_full, nmm_beta, reinit_corrector };

std::string to_string(BaselineKind kind);
BaselineKind parse_baseline(const std::string& text);

/// One step of phi_t + v . grad phi = source with the same local
/// Lax-Friedrichs discretization as the grid solver (alpha_a = max |v_a|
/// over the stencil) and an explicit source. Boundary nodes are held.
/// `kind` selects the source: none, nmm_full or nmm_beta.
geometry::ScalarField transport_step(const geometry::ScalarField& field, const VelocityField& v,
                                     double dt, BaselineKind kind, double beta = 1.0);

/// Largest stable step for transport_step.
double transport_stable_dt(const geometry::ScalarField& field, const VelocityField& v);

/// One explicit step of psi_s = sign_eps(psi) (1 - |grad psi|) with the
/// Godunov upwind eikonal gradient and sign_eps(psi) = psi / sqrt(psi^2 + h^2).
/// Throws CflViolation when dtau > h/2.
geometry::ScalarField reinit_corrector_step(const geometry::ScalarField& psi, double dtau);

/// Runs a baseline to the horizon with frames at the given times (the
/// linear-transport baseline is evaluated exactly, not stepped).
/// `reinit_every` > 0 applies `reinit_iterations` corrector steps after each
/// such interval of transport for the reinit_corrector kind.
struct BaselineConfig {
  BaselineKind kind = BaselineKind::linear_transport;
  double beta = 1.0;
  double cfl = 0.5;
  double reinit_every = 0.1;
  int reinit_iterations = 10;
};

std::vector<geometry::ScalarField> run_baseline(const geometry::LevelSetFunction& phi0,
                                                const geometry::ScalarField& phi0_field,
                                                const VelocityField& v,
                                                const std::vector<double>& times,
                                                const BaselineConfig& config);

}  // namespace vem::baselines
