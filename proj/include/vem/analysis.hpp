#pragma once

#include "vem/characteristics.hpp"
#include "vem/common.hpp"
#include "vem/geometry.hpp"
#include "vem/hj.hpp"
#include "vem/levelset.hpp"
#include "vem/velocity.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace vem::analysis {

using velocity::VelocityField;

/// Sub- and supersolution of the extension equation built from linear
/// transport: with f = phi0(X(0, t, x)),
///   rho = f exp(-s V0 t), rho_tilde = f exp(+s V0 t), s = sign(f),
/// so rho <= rho_tilde and both vanish where f does.
struct EnvelopePair {
  geometry::ScalarField rho;
  geometry::ScalarField rho_tilde;
  double V0 = 0.0;
};

EnvelopePair compute_envelopes(const geometry::LevelSetFunction& phi0, const VelocityField& v,
                               double t, const geometry::Grid& grid, double V0,
                               double dt = 1e-3);

struct SandwichEntry {
  double t = 0.0;
  /// max(rho - phi, 0) and max(phi - rho_tilde, 0) over nodes.
  double lower = 0.0;
  double upper = 0.0;
  /// Nodes with a violation above the tolerance.
  std::size_t violations = 0;
  bool pass = true;
};

struct SandwichReport {
  double tolerance = 0.0;
  std::vector<SandwichEntry> entries;
  bool pass() const;
  double worst() const;
};

/// Throws GridMismatch unless each phi/envelope pair shares grid layout and
/// time stamp (to 1e-12).
SandwichReport check_sandwich(const std::vector<geometry::ScalarField>& phi,
                              const std::vector<EnvelopePair>& env, double tolerance);

/// G(t, x, p, u) = v(t, x - theta u p / (theta |p|^2 + eta(theta |p|^2))) . p + V0 u
/// with theta = exp(2 V0 t); nondecreasing in u.
double monotonized_G(double t, const Vec3& x, const Vec3& p, double u, const VelocityField& v,
                     const hj::Regularizer& reg, double V0);

struct MonotonicityReport {
  std::size_t samples = 0;
  /// min over samples of G(u + eps) - G(u), eps >= 0.
  double min_margin = 0.0;
  /// min over samples of (G(u + eps) - G(u)) / eps.
  double min_ratio = 0.0;
};

/// Randomized check of u -> G nondecreasing with t in [0, T], x in the box,
/// |p| and eps log-uniform and u uniform in [-2, 2].
MonotonicityReport check_G_monotonicity(const VelocityField& v, const hj::Regularizer& reg,
                                        double V0, double T, const geometry::Box& box, int dim,
                                        std::size_t samples, std::uint64_t seed);

struct GRegularity {
  std::size_t samples = 0;
  /// max |(i) - v(t, x) . q| / (|u| |q|) and max |(ii)| / (|u| |p| |q|), where
  ///   G(p + q) - G(p) = (i) + (ii),
  ///   (i)  = v(t, x - u R(p + q)) . q,
  ///   (ii) = (v(t, x - u R(p + q)) - v(t, x - u R(p))) . p.
  double c1 = 0.0;
  double c2 = 0.0;
  /// Largest left side seen on samples with u = 0 or q = 0 (should be 0).
  double degenerate_residual = 0.0;
};

/// Throws ValidationError for fewer than 1e4 samples. A tenth of the
/// samples have u = 0 or q = 0.
GRegularity check_G_regularity(const VelocityField& v, const hj::Regularizer& reg, double V0,
                               double T, const geometry::Box& box, int dim,
                               std::size_t samples, std::uint64_t seed);

struct TubeGate {
  /// Nodes with |reference| < width count (0 keeps every defined node).
  double width = 0.0;
};

struct TubeErrors {
  std::size_t nodes = 0;
  double max_error = 0.0;
  /// sqrt(sum e^2 h^d) and sqrt(mean e^2).
  double l2_error = 0.0;
  double rms_error = 0.0;
  /// | |grad phi| - |grad reference| | (central differences for phi).
  double max_grad_deviation = 0.0;
  double mean_grad_deviation = 0.0;
  /// | |grad phi| - 1 |.
  double max_unit_defect = 0.0;
};

/// Against precomputed tube samples (NaN / in_tube = 0 outside the tube).
TubeErrors tube_error_norms(const geometry::ScalarField& phi,
                            const characteristics::TubeSample& reference, TubeGate gate = {});
/// Against the method-of-characteristics tube at phi.time().
TubeErrors tube_error_norms(const geometry::ScalarField& phi,
                            const characteristics::TubeSolution& reference, TubeGate gate = {});
/// Against an analytic profile.
TubeErrors tube_error_norms(const geometry::ScalarField& phi,
                            const geometry::LevelSetFunction& reference, TubeGate gate = {});

/// Per-output-time diagnostics of a run. Series that were not measured stay
/// empty; the others have one entry per time.
struct DiagnosticsReport {
  std::vector<double> times;
  std::vector<double> tube_grad_defect;
  std::vector<double> hausdorff;
  std::vector<double> sandwich_lower;
  std::vector<double> sandwich_upper;
  std::vector<double> sandwich_violations;
  std::vector<double> p2_drift;
  std::vector<double> g_margin;
  std::map<std::string, std::string> metadata;

  /// Throws ValidationError on a non-finite entry or a length mismatch.
  void validate() const;
  std::string to_json() const;
  /// Header t followed by the non-empty series names.
  void write_csv(std::ostream& os) const;
};

}  // namespace vem::analysis
