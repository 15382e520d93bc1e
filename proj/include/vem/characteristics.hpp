#pragma once

#include "vem/common.hpp"
#include "vem/geometry.hpp"
#include "vem/levelset.hpp"
#include "vem/velocity.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

namespace vem::characteristics {

using velocity::VelocityField;

/// |p|^2 I - 2 p p^T.
Mat3 eval_B(const Vec3& p);

/// H(t, x, p, Phi) = v(t, x - Phi p / |p|^2) . p. Throws DegenerateGradient
/// when |p| <= 1e-12.
double hamiltonian(double t, const Vec3& x, const Vec3& p, double Phi, const VelocityField& v);

/// Point (x, p, Phi) of the characteristic system, or its s-derivative.
struct Phase {
  Vec3 x = Vec3::Zero();
  Vec3 p = Vec3::Zero();
  double Phi = 0.0;
};

/// Right-hand side of the characteristic system of the velocity-extension
/// equation. With y = x - Phi p/|p|^2 and J = grad v(s, y):
///   x'   = v(s, y) - Phi/|p|^4 (J B(p))^T p
///   p'   = -J^T p + <J^T p, p>/|p|^2 p
///   Phi' = -Phi/|p|^4 <(J B(p))^T p, p>
Phase characteristic_rhs(double s, const Phase& state, const VelocityField& v);

struct CharacteristicState {
  double s = 0.0;
  Vec3 x = Vec3::Zero();
  Vec3 p = Vec3::Zero();
  double Phi = 0.0;
  Vec3 seed = Vec3::Zero();
  Vec3 seed_p = Vec3::Zero();
  double seed_Phi = 0.0;
};

struct Seed {
  Vec3 xi = Vec3::Zero();
  Vec3 p0 = Vec3::Zero();
  double Phi0 = 0.0;

  static Seed from(const geometry::LevelSetFunction& phi0, const Vec3& xi);
};

/// Blow-up guard: integration throws FlowBlowUp once x leaves `box`.
struct Guard {
  int dim = 3;
  geometry::Box box;
};

/// One classical RK4 step of size ds (negative ds integrates backwards).
Phase rk4_step(double s, const Phase& state, double ds, const VelocityField& v);

/// Advances from s0 to s1 in ceil(|s1 - s0| / dt) equal RK4 steps.
Phase advance(const Phase& state, double s0, double s1, double dt, const VelocityField& v,
              const Guard* guard = nullptr);

/// Full RK4 trajectory (including both end points). Requires dt <= 1e-2.
std::vector<CharacteristicState> integrate_characteristic(const Seed& seed,
                                                          const VelocityField& v, double s0,
                                                          double s1, double dt,
                                                          const Guard* guard = nullptr);

/// Plain flow x' = v(s, x) from s0 to s1 (RK4).
Vec3 flow(const Vec3& x, double s0, double s1, double dt, const VelocityField& v,
          const Guard* guard = nullptr);

/// CSV columns seed_id,s,x,y,z,px,py,pz,Phi,p2_drift.
void write_trajectory_csv(std::ostream& os, int seed_id,
                          const std::vector<CharacteristicState>& trajectory, bool header = true);

// --- a priori bounds and step size -----------------------------------------

struct CharacteristicBounds {
  double U0 = 0, U1 = 0, U2 = 0, U3 = 0, U4 = 0, U5 = 0, U6 = 0, U7 = 0;
  double t_star = 1.0;
  double delta = 0.1;

  /// 1 - {3(2 U7 t) + 6(2 U7 t)^2 + 6(2 U7 t)^3}.
  double margin(double t) const;
};

/// Positive root of 6a^3 + 6a^2 + 3a = 1, by bisection.
double cubic_root_a_star();

/// min(1, 0.9 a* / (2 U7)); 1 when U7 == 0.
double estimate_t_star(double U7);

/// U6 and U7 from U0..U5 via the Gronwall bound on [0, 1].
void complete_bounds(CharacteristicBounds& b);

struct BoundsOptions {
  double s0 = 0.0;
  double window = 1.0;
  double dt = 1e-2;
  double inflation = 1.1;
  std::size_t max_points = 256;
  const Guard* guard = nullptr;
};

/// Samples grad v along the interface trajectories started from `points`
/// (on Sigma(s0)) with momenta `momenta` over [s0, s0 + window]; U0..U4 are
/// the sampled suprema (times `inflation`), U5 = grad_range.max * inflation,
/// and terms carrying 1/|p| use grad_range.min.
CharacteristicBounds estimate_bounds(const VelocityField& v, const std::vector<Vec3>& points,
                                     const std::vector<Vec3>& momenta, double grad_min,
                                     double grad_max, const BoundsOptions& options = {});

/// Same, with directions taken from the mesh normals (p parallel to -nu).
CharacteristicBounds estimate_bounds(const VelocityField& v,
                                     const geometry::InterfaceMesh& seed_surface,
                                     double grad_min, double grad_max,
                                     const BoundsOptions& options = {});

// --- variational system ------------------------------------------------------

struct VariationalState {
  double s = 0.0;
  Phase base;
  /// Column i is d x / d xi_i.
  Mat3 dx_dxi = Mat3::Identity();
  Vec3 dPhi_dxi = Vec3::Zero();
};

/// Variational equations for an interface seed (Phi0 = 0):
///   d/ds dx/dxi_i = J dx/dxi_i - J p/|p|^2 dPhi/dxi_i - (J B)^T p/|p|^4 dPhi/dxi_i
///   d/ds dPhi/dxi = -<(J B)^T p, p>/|p|^4 dPhi/dxi
/// with J = grad v(s, x(s)), dx/dxi(0) = I, dPhi/dxi(0) = grad phi0(xi).
std::vector<VariationalState> variational_system(const Seed& seed, const VelocityField& v,
                                                 double s0, double s1, double dt,
                                                 const Guard* guard = nullptr);

// --- tube solver -------------------------------------------------------------

struct TubeOptions {
  int dim = 2;
  geometry::Box domain;
  /// Seed lattice spacing (aligned with domain.lower).
  double h = 0.02;
  /// Initial band half-width; 0 means 5h.
  double band = 0.0;
  double dt = 1e-3;
  int max_retries = 3;
  double shrink = 0.5;
  /// Seeds need |grad phi0| >= min_gradient.
  double min_gradient = 1e-3;
  /// Particle states are stored at least this often (and at every leg end).
  double snapshot_cadence = 0.05;
  BoundsOptions bounds;
  /// Newton tolerance on |x(t; xi) - x|.
  double newton_tol = 1e-11;
  int newton_max_iter = 30;
};

struct LegInfo {
  double t_begin = 0.0;
  double t_end = 0.0;
  CharacteristicBounds bounds;
  double band = 0.0;
  std::size_t particles = 0;
  int retries = 0;
  /// Smallest distance between distinct particles at the leg end.
  double min_separation = 0.0;
  /// Smallest det dx/dxi (lattice differences) at the leg end.
  double min_jacobian = 0.0;
  /// Largest disagreement on (t_end - delta, t_end) between this leg's
  /// forward states and the next leg's seeds traced backwards.
  double overlap_mismatch = 0.0;
};

struct TubeValue {
  double phi = 0.0;
  Vec3 grad = Vec3::Zero();
  Vec3 seed = Vec3::Zero();
  std::size_t leg = 0;
  int iterations = 0;
};

struct TubeSample {
  geometry::ScalarField phi;
  std::vector<Vec3> grad;
  std::vector<unsigned char> in_tube;
  std::size_t count = 0;
};

/// Method-of-characteristics solution of the velocity-extension equation in
/// a tube around the moving interface, assembled leg by leg.
///
/// Seeds are the lattice points of spacing h in the band |phi0|/|grad phi0| <
/// band around Sigma(0), plus marker points on Sigma(0). Each leg recomputes
/// the a priori bounds from the markers, advances by t* and checks that the
/// particle map stays injective with positive Jacobian, shrinking the band on
/// failure. Particles that leave the band at a leg start are dropped; the
/// survivors continue, so every reconstructed value comes from one
/// characteristic traced back to t = 0. Queries invert xi -> x(t; xi) by
/// Newton's method started from the nearest stored particle.
class TubeSolution {
 public:
  TubeSolution(geometry::LevelSetPtr phi0, velocity::FieldPtr v, double horizon,
               TubeOptions options);

  double horizon() const { return horizon_; }
  const TubeOptions& options() const { return options_; }
  const std::vector<LegInfo>& legs() const { return legs_; }
  std::size_t seed_count() const { return seeds_.size(); }

  /// phi and grad phi at (t, x), or nothing outside the tube.
  std::optional<TubeValue> evaluate(double t, const Vec3& x) const;
  /// Throws OutOfTube outside the tube.
  TubeValue evaluate_or_throw(double t, const Vec3& x) const;

  /// Characteristic state at time t of the seed xi (integrated from 0 with the
  /// solver's step sequence).
  Phase trace(const Vec3& xi, double t) const;

  /// Interface markers carried to time t.
  std::vector<Vec3> markers(double t) const;
  /// Marker momenta (grad phi on Sigma(t)).
  std::vector<Vec3> marker_momenta(double t) const;
  /// Particle positions and states at time t (alive particles only).
  std::vector<Phase> particles(double t) const;

  /// Tube values at every grid node; nodes outside hold NaN.
  TubeSample sample(double t, const geometry::Grid& grid) const;
  /// Sign of phi0 at the plain backward flow X(0, t, x).
  double phase_sign(double t, const Vec3& x) const;
  /// Zero level set at time t from the tube values on `grid` (nodes outside
  /// the tube hold the backward-flow phase times a constant beyond the band).
  geometry::InterfaceMesh interface_mesh(double t, const geometry::Grid& grid) const;

 private:
  struct Snapshot {
    double t = 0.0;
    std::size_t leg = 0;
    std::vector<int> ids;
    std::vector<Phase> states;
    std::vector<Phase> markers;
    std::unordered_map<long long, std::vector<int>> buckets;
    std::unordered_map<int, int> where;  // seed id -> index into states
  };

  void run();
  bool run_leg(std::size_t l, double t0, double band, std::vector<int>& ids,
               std::vector<Phase>& states, std::vector<Phase>& markers, LegInfo& info);
  void store_snapshot(double t, std::size_t l, const std::vector<int>& ids,
                      const std::vector<Phase>& states, const std::vector<Phase>& markers);
  std::size_t leg_of(double t) const;
  const Snapshot& snapshot_near(double t) const;
  /// Advances through the solver's step sequence from t_from to t_to (both
  /// inside [0, horizon]); returns nullopt if the band test fails at a leg
  /// start when `check_band` is set.
  std::optional<Phase> propagate(Phase state, double t_from, double t_to, bool check_band) const;
  Phase propagate_short(const Phase& state, double t_from, double t_to) const;
  Vec3 seed_position(int id) const { return seeds_[id].xi; }
  long long bucket_key(const Vec3& x) const;
  std::optional<int> lattice_neighbor(int id, int axis, int offset) const;
  double band_distance(const Phase& s) const;

  geometry::LevelSetPtr phi0_;
  velocity::FieldPtr v_;
  double horizon_;
  TubeOptions options_;
  Guard guard_;

  std::vector<Seed> seeds_;
  std::vector<std::array<int, 3>> lattice_;
  std::unordered_map<long long, int> lattice_index_;
  std::vector<Phase> marker_seeds_;

  /// Leg boundaries t_0 = 0 < t_1 < ... < t_L = horizon and per-leg bands.
  std::vector<double> breaks_;
  std::vector<int> steps_;
  std::vector<LegInfo> legs_;
  std::vector<Snapshot> snapshots_;
};

/// Builds the tube solution over [0, horizon].
std::shared_ptr<const TubeSolution> solve_tube(geometry::LevelSetPtr phi0, velocity::FieldPtr v,
                                               double horizon, TubeOptions options);

}  // namespace vem::characteristics
