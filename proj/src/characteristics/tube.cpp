#include "vem/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace vem::characteristics {

namespace {

constexpr int kOffset = 1 << 20;

long long pack(int i, int j, int k) {
  return (static_cast<long long>(i + kOffset) << 42) | (static_cast<long long>(j + kOffset) << 21) |
         static_cast<long long>(k + kOffset);
}

int step_count(double span, double dt) {
  return std::max(1, static_cast<int>(std::ceil(std::abs(span) / dt - 1e-9)));
}

}  // namespace

TubeSolution::TubeSolution(geometry::LevelSetPtr phi0, velocity::FieldPtr v, double horizon,
                           TubeOptions options)
    : phi0_(std::move(phi0)), v_(std::move(v)), horizon_(horizon), options_(std::move(options)) {
  if (!(horizon_ > 0.0)) throw ValidationError("horizon > 0");
  if (!(options_.h > 0.0)) throw ValidationError("tube lattice spacing must be positive");
  if (!(options_.dt > 0.0) || options_.dt > 1e-2) {
    throw ValidationError("integration step must lie in (0, 1e-2]");
  }
  if (options_.band <= 0.0) options_.band = 5.0 * options_.h;
  const int dim = options_.dim;
  guard_ = {dim, options_.domain.inflated(0.1, dim)};

  // Lattice seeds in the initial band.
  const geometry::Box& box = options_.domain;
  std::array<int, 3> n{0, 0, 0};
  for (int a = 0; a < dim; ++a) {
    n[a] = static_cast<int>(std::floor((box.upper[a] - box.lower[a]) / options_.h + 1e-9));
  }
  const double band = options_.band;
  for (int k = 0; k <= n[2]; ++k) {
    for (int j = 0; j <= n[1]; ++j) {
      for (int i = 0; i <= n[0]; ++i) {
        Vec3 xi = box.lower;
        xi[0] += i * options_.h;
        xi[1] += j * options_.h;
        if (dim == 3) xi[2] += k * options_.h;
        const double val = phi0_->value(xi);
        if (std::abs(val) > band * 1e3) continue;
        const Vec3 grad = phi0_->gradient(xi);
        const double g = grad.norm();
        if (g < options_.min_gradient) {
          if (std::abs(val) < band * options_.min_gradient) {
            throw DegenerateGradient("|grad phi0| below the gate inside the seed band");
          }
          continue;
        }
        if (std::abs(val) / g >= band) continue;
        lattice_index_[pack(i, j, k)] = static_cast<int>(seeds_.size());
        lattice_.push_back({i, j, k});
        seeds_.push_back({xi, grad, val});
      }
    }
  }
  if (seeds_.empty()) throw EmptyTube("no seeds in the initial band");

  // Interface markers: mesh vertices pulled onto phi0 = 0 by Newton steps.
  const auto grid = geometry::Grid::from_box(dim, box.lower, box.upper, options_.h);
  const auto mesh = geometry::extract_interface(phi0_->sample(grid), false);
  for (Vec3 x : mesh.points) {
    for (int it = 0; it < 50; ++it) {
      const double val = phi0_->value(x);
      if (std::abs(val) < 1e-15) break;
      const Vec3 g = phi0_->gradient(x);
      x -= val * g / g.squaredNorm();
    }
    marker_seeds_.push_back({x, phi0_->gradient(x), 0.0});
  }
  if (marker_seeds_.empty()) throw EmptyTube("initial data has no zero level set");

  run();
}

double TubeSolution::band_distance(const Phase& s) const { return std::abs(s.Phi) / s.p.norm(); }

long long TubeSolution::bucket_key(const Vec3& x) const {
  const double h = options_.h;
  return pack(static_cast<int>(std::floor(x[0] / h)), static_cast<int>(std::floor(x[1] / h)),
              options_.dim == 3 ? static_cast<int>(std::floor(x[2] / h)) : 0);
}

void TubeSolution::store_snapshot(double t, std::size_t l, const std::vector<int>& ids,
                                  const std::vector<Phase>& states,
                                  const std::vector<Phase>& markers) {
  Snapshot s;
  s.t = t;
  s.leg = l;
  s.ids = ids;
  s.states = states;
  s.markers = markers;
  for (std::size_t k = 0; k < states.size(); ++k) {
    s.buckets[bucket_key(states[k].x)].push_back(static_cast<int>(k));
    s.where[ids[k]] = static_cast<int>(k);
  }
  snapshots_.push_back(std::move(s));
}

void TubeSolution::run() {
  std::vector<int> ids(seeds_.size());
  std::vector<Phase> states(seeds_.size());
  for (std::size_t i = 0; i < seeds_.size(); ++i) {
    ids[i] = static_cast<int>(i);
    states[i] = {seeds_[i].xi, seeds_[i].p0, seeds_[i].Phi0};
  }
  std::vector<Phase> markers = marker_seeds_;
  breaks_ = {0.0};
  store_snapshot(0.0, 0, ids, states, markers);

  double band = options_.band;
  double t0 = 0.0;
  while (t0 < horizon_) {
    const std::size_t l = legs_.size();
    LegInfo info;
    bool ok = false;
    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
      std::vector<int> leg_ids = ids;
      std::vector<Phase> leg_states = states;
      std::vector<Phase> leg_markers = markers;
      info = LegInfo{};
      info.retries = attempt;
      if (run_leg(l, t0, band, leg_ids, leg_states, leg_markers, info)) {
        ids = std::move(leg_ids);
        states = std::move(leg_states);
        markers = std::move(leg_markers);
        ok = true;
        break;
      }
      band *= options_.shrink;
    }
    if (!ok) {
      throw InjectivityViolation("particle map not injective on leg " + std::to_string(l) +
                                 " after " + std::to_string(options_.max_retries) +
                                 " band reductions");
    }
    legs_.push_back(info);
    t0 = info.t_end;
  }
}

bool TubeSolution::run_leg(std::size_t l, double t0, double band, std::vector<int>& ids,
                           std::vector<Phase>& states, std::vector<Phase>& markers,
                           LegInfo& info) {
  const int dim = options_.dim;
  const double h = options_.h;

  // Reseed: keep the characteristics that arrive inside the current band.
  {
    std::size_t w = 0;
    for (std::size_t k = 0; k < states.size(); ++k) {
      if (band_distance(states[k]) < band) {
        ids[w] = ids[k];
        states[w] = states[k];
        ++w;
      }
    }
    ids.resize(w);
    states.resize(w);
  }
  if (states.empty()) throw EmptyTube("tube band emptied at t = " + std::to_string(t0));

  double gmin = std::numeric_limits<double>::infinity(), gmax = 0.0;
  std::vector<Vec3> mx, mp;
  for (const Phase& m : markers) {
    gmin = std::min(gmin, m.p.norm());
    gmax = std::max(gmax, m.p.norm());
    mx.push_back(m.x);
    mp.push_back(m.p);
  }
  BoundsOptions bo = options_.bounds;
  bo.s0 = t0;
  bo.guard = &guard_;
  info.bounds = estimate_bounds(*v_, mx, mp, gmin, gmax, bo);
  double t1 = std::min(horizon_, t0 + info.bounds.t_star);
  if (horizon_ - t1 < 1e-9 * std::max(1.0, horizon_)) t1 = horizon_;
  info.t_begin = t0;
  info.t_end = t1;
  info.band = band;
  info.particles = states.size();

  // A few particles are also traced independently for the overlap check.
  const std::size_t probes = std::min<std::size_t>(16, states.size());
  std::vector<Phase> probe_start(probes);
  std::vector<std::size_t> probe_index(probes);
  for (std::size_t q = 0; q < probes; ++q) {
    probe_index[q] = q * states.size() / probes;
    probe_start[q] = states[probe_index[q]];
  }

  const int n = step_count(t1 - t0, options_.dt);
  const double ds = (t1 - t0) / n;
  const int cadence =
      std::max(1, static_cast<int>(std::floor(options_.snapshot_cadence / ds + 1e-9)));
  std::vector<Snapshot> pending;
  for (int i = 0; i < n; ++i) {
    const double s = t0 + i * ds;
    for (Phase& st : states) {
      st = rk4_step(s, st, ds, *v_);
      if (!guard_.box.contains(st.x, dim)) {
        throw FlowBlowUp("tube particle left the guarded domain at t = " + std::to_string(s + ds));
      }
    }
    for (Phase& m : markers) m = rk4_step(s, m, ds, *v_);
    if ((i + 1) % cadence == 0 && i + 1 < n) {
      const std::size_t before = snapshots_.size();
      store_snapshot(s + ds, l, ids, states, markers);
      pending.push_back(std::move(snapshots_.back()));
      snapshots_.resize(before);
    }
  }

  // Injectivity: distinct particles must stay at least h/2 apart.
  std::unordered_map<long long, std::vector<int>> buckets;
  for (std::size_t k = 0; k < states.size(); ++k) {
    buckets[bucket_key(states[k].x)].push_back(static_cast<int>(k));
  }
  double min_sep = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < states.size(); ++k) {
    const Vec3& x = states[k].x;
    const int bi = static_cast<int>(std::floor(x[0] / h));
    const int bj = static_cast<int>(std::floor(x[1] / h));
    const int bk = dim == 3 ? static_cast<int>(std::floor(x[2] / h)) : 0;
    const int kr = dim == 3 ? 1 : 0;
    for (int dk = -kr; dk <= kr; ++dk) {
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          auto it = buckets.find(pack(bi + di, bj + dj, bk + dk));
          if (it == buckets.end()) continue;
          for (int o : it->second) {
            if (o <= static_cast<int>(k)) continue;
            min_sep = std::min(min_sep, (states[o].x - x).norm());
          }
        }
      }
    }
  }
  info.min_separation = std::isfinite(min_sep) ? min_sep : h;

  // Orientation: det of the lattice-difference Jacobian of xi -> x(t1; xi).
  std::unordered_map<int, int> where;
  for (std::size_t k = 0; k < ids.size(); ++k) where[ids[k]] = static_cast<int>(k);
  double min_det = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < ids.size(); ++k) {
    Mat3 J = Mat3::Identity();
    bool complete = true;
    for (int a = 0; a < dim && complete; ++a) {
      auto lookup = [&](int offset) -> const Phase* {
        const auto nb = lattice_neighbor(ids[k], a, offset);
        if (!nb) return nullptr;
        auto it = where.find(*nb);
        return it == where.end() ? nullptr : &states[it->second];
      };
      const Phase* plus = lookup(1);
      const Phase* minus = lookup(-1);
      if (plus && minus) {
        J.col(a) = (plus->x - minus->x) / (2.0 * h);
      } else if (plus) {
        J.col(a) = (plus->x - states[k].x) / h;
      } else if (minus) {
        J.col(a) = (states[k].x - minus->x) / h;
      } else {
        complete = false;
      }
    }
    if (complete) min_det = std::min(min_det, J.determinant());
  }
  info.min_jacobian = std::isfinite(min_det) ? min_det : 1.0;

  if (info.min_separation < 0.5 * h || info.min_jacobian <= 0.0) return false;

  // Overlap: this leg's forward states against the leg-end states traced
  // backwards over (t1 - delta, t1).
  const double delta = std::min(0.5 * (t1 - t0), std::max(options_.dt, info.bounds.delta));
  double mismatch = 0.0;
  for (std::size_t q = 0; q < probes; ++q) {
    const Phase fwd = advance(probe_start[q], t0, t1 - delta, options_.dt, *v_);
    const Phase bwd = advance(states[probe_index[q]], t1, t1 - delta, options_.dt, *v_);
    mismatch = std::max({mismatch, (fwd.x - bwd.x).norm(), (fwd.p - bwd.p).norm(),
                         std::abs(fwd.Phi - bwd.Phi)});
  }
  info.overlap_mismatch = mismatch;

  for (Snapshot& s : pending) snapshots_.push_back(std::move(s));
  breaks_.push_back(t1);
  steps_.push_back(n);
  store_snapshot(t1, l, ids, states, markers);
  return true;
}

std::optional<int> TubeSolution::lattice_neighbor(int id, int axis, int offset) const {
  auto c = lattice_[id];
  c[axis] += offset;
  auto it = lattice_index_.find(pack(c[0], c[1], c[2]));
  if (it == lattice_index_.end()) return std::nullopt;
  return it->second;
}

std::size_t TubeSolution::leg_of(double t) const {
  const auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
  const auto idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - breaks_.begin() - 1));
  return std::min(idx, legs_.size() - 1);
}

const TubeSolution::Snapshot& TubeSolution::snapshot_near(double t) const {
  auto it = std::lower_bound(snapshots_.begin(), snapshots_.end(), t,
                             [](const Snapshot& s, double v) { return s.t < v; });
  if (it == snapshots_.end()) return snapshots_.back();
  if (it == snapshots_.begin()) return *it;
  auto prev = std::prev(it);
  return (t - prev->t <= it->t - t) ? *prev : *it;
}

Phase TubeSolution::propagate_short(const Phase& state, double t_from, double t_to) const {
  return advance(state, t_from, t_to, options_.dt, *v_);
}

std::optional<Phase> TubeSolution::propagate(Phase st, double t_from, double t_to,
                                             bool check_band) const {
  (void)t_from;  // always 0: values are traced from the initial data
  for (std::size_t l = 0; l < legs_.size(); ++l) {
    const double b0 = breaks_[l], b1 = breaks_[l + 1];
    if (check_band && l > 0 && band_distance(st) >= legs_[l].band) return std::nullopt;
    if (t_to < b1 && std::abs(t_to - b1) > 1e-14) {
      return advance(st, b0, t_to, options_.dt, *v_, &guard_);
    }
    const int n = steps_[l];
    const double ds = (b1 - b0) / n;
    for (int i = 0; i < n; ++i) {
      st = rk4_step(b0 + i * ds, st, ds, *v_);
      if (!guard_.box.contains(st.x, options_.dim)) {
        throw FlowBlowUp("characteristic left the guarded domain");
      }
    }
    if (std::abs(t_to - b1) <= 1e-14) return st;
  }
  return st;
}

Phase TubeSolution::trace(const Vec3& xi, double t) const {
  const Seed s = Seed::from(*phi0_, xi);
  return *propagate({s.xi, s.p0, s.Phi0}, 0.0, t, false);
}

std::optional<TubeValue> TubeSolution::evaluate(double t, const Vec3& x) const {
  if (t < 0.0 || t > horizon_ * (1.0 + 1e-12)) return std::nullopt;
  t = std::min(t, horizon_);
  const int dim = options_.dim;
  const double h = options_.h;
  try {
    const Snapshot& snap = snapshot_near(t);
    const Vec3 xs = flow(x, t, snap.t, options_.dt, *v_);

    // Nearest stored particle, searching outwards ring by ring.
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    const int bi = static_cast<int>(std::floor(xs[0] / h));
    const int bj = static_cast<int>(std::floor(xs[1] / h));
    const int bk = dim == 3 ? static_cast<int>(std::floor(xs[2] / h)) : 0;
    const int max_ring = static_cast<int>(std::ceil(options_.band / h)) + 2;
    for (int r = 0; r <= max_ring && best < 0; ++r) {
      const int kr = dim == 3 ? r : 0;
      for (int dk = -kr; dk <= kr; ++dk) {
        for (int dj = -r; dj <= r; ++dj) {
          for (int di = -r; di <= r; ++di) {
            if (std::max({std::abs(di), std::abs(dj), std::abs(dk)}) != r) continue;
            auto it = snap.buckets.find(pack(bi + di, bj + dj, bk + dk));
            if (it == snap.buckets.end()) continue;
            for (int k : it->second) {
              const double d = (snap.states[k].x - xs).norm();
              if (d < best_d) {
                best_d = d;
                best = k;
              }
            }
          }
        }
      }
      // A closer particle can sit one ring further out.
      if (best >= 0 && r < max_ring) {
        const int r2 = r + 1;
        const int kr2 = dim == 3 ? r2 : 0;
        for (int dk = -kr2; dk <= kr2; ++dk) {
          for (int dj = -r2; dj <= r2; ++dj) {
            for (int di = -r2; di <= r2; ++di) {
              if (std::max({std::abs(di), std::abs(dj), std::abs(dk)}) != r2) continue;
              auto it = snap.buckets.find(pack(bi + di, bj + dj, bk + dk));
              if (it == snap.buckets.end()) continue;
              for (int k : it->second) {
                const double d = (snap.states[k].x - xs).norm();
                if (d < best_d) {
                  best_d = d;
                  best = k;
                }
              }
            }
          }
        }
      }
    }
    if (best < 0) return std::nullopt;

    const int id = snap.ids[best];
    const Phase near = propagate_short(snap.states[best], snap.t, t);
    Vec3 xi = seeds_[id].xi;

    // Chord Jacobian from lattice neighbours carried to time t.
    Mat3 J = Mat3::Identity();
    bool have_jacobian = true;
    for (int a = 0; a < dim && have_jacobian; ++a) {
      auto neighbour = [&](int offset) -> std::optional<Vec3> {
        const auto nb = lattice_neighbor(id, a, offset);
        if (!nb) return std::nullopt;
        auto it = snap.where.find(*nb);
        if (it == snap.where.end()) return std::nullopt;
        return propagate_short(snap.states[it->second], snap.t, t).x;
      };
      const auto plus = neighbour(1), minus = neighbour(-1);
      if (plus && minus) {
        J.col(a) = (*plus - *minus) / (2.0 * h);
      } else if (plus) {
        J.col(a) = (*plus - near.x) / h;
      } else if (minus) {
        J.col(a) = (near.x - *minus) / h;
      } else {
        have_jacobian = false;
      }
    }

    auto fd_jacobian = [&](const Vec3& at) {
      Mat3 F = Mat3::Identity();
      const double eps = 1e-6;
      for (int a = 0; a < dim; ++a) {
        Vec3 p = at, m = at;
        p[a] += eps;
        m[a] -= eps;
        F.col(a) = (trace(p, t).x - trace(m, t).x) / (2.0 * eps);
      }
      return F;
    };
    if (!have_jacobian) J = fd_jacobian(xi);
    auto lu = J.partialPivLu();
    xi += lu.solve(Vec3(x - near.x));
    for (int a = dim; a < 3; ++a) xi[a] = x[a];

    double previous = std::numeric_limits<double>::infinity();
    for (int it = 0; it < options_.newton_max_iter; ++it) {
      const Seed seed = Seed::from(*phi0_, xi);
      const double g = seed.p0.norm();
      if (g < options_.min_gradient) return std::nullopt;
      const auto st = propagate({seed.xi, seed.p0, seed.Phi0}, 0.0, t, true);
      Vec3 r = Vec3::Zero();
      std::optional<Phase> reached = st;
      if (!st) {
        // Band failure: still need the residual to know whether we converged.
        reached = propagate({seed.xi, seed.p0, seed.Phi0}, 0.0, t, false);
      }
      r = reached->x - x;
      const double res = r.norm();
      if (res <= options_.newton_tol) {
        if (!st) return std::nullopt;
        if (std::abs(seed.Phi0) / g >= legs_.front().band) return std::nullopt;
        return TubeValue{st->Phi, st->p, xi, leg_of(t), it};
      }
      if (res > 0.5 * previous) {
        J = fd_jacobian(xi);
        lu = J.partialPivLu();
      }
      previous = res;
      xi -= lu.solve(r);
    }
  } catch (const FlowBlowUp&) {
    return std::nullopt;
  } catch (const DegenerateGradient&) {
    return std::nullopt;
  }
  return std::nullopt;
}

TubeValue TubeSolution::evaluate_or_throw(double t, const Vec3& x) const {
  auto v = evaluate(t, x);
  if (!v) throw OutOfTube("point outside the characteristic tube");
  return *v;
}

std::vector<Vec3> TubeSolution::markers(double t) const {
  const Snapshot& snap = snapshot_near(t);
  std::vector<Vec3> out;
  out.reserve(snap.markers.size());
  for (const Phase& m : snap.markers) out.push_back(propagate_short(m, snap.t, t).x);
  return out;
}

std::vector<Vec3> TubeSolution::marker_momenta(double t) const {
  const Snapshot& snap = snapshot_near(t);
  std::vector<Vec3> out;
  out.reserve(snap.markers.size());
  for (const Phase& m : snap.markers) out.push_back(propagate_short(m, snap.t, t).p);
  return out;
}

std::vector<Phase> TubeSolution::particles(double t) const {
  const Snapshot& snap = snapshot_near(t);
  std::vector<Phase> out;
  out.reserve(snap.states.size());
  for (const Phase& s : snap.states) out.push_back(propagate_short(s, snap.t, t));
  return out;
}

TubeSample TubeSolution::sample(double t, const geometry::Grid& grid) const {
  TubeSample out{geometry::ScalarField(grid, std::numeric_limits<double>::quiet_NaN(), t),
                 std::vector<Vec3>(grid.node_count(), Vec3::Zero()),
                 std::vector<unsigned char>(grid.node_count(), 0), 0};
  const int dim = grid.dim();
  std::vector<unsigned char> candidate(grid.node_count(), 0);
  const double reach = std::max(options_.h, grid.min_spacing());
  for (const Phase& p : particles(t)) {
    std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
      lo[a] = std::max(0, static_cast<int>(std::floor((p.x[a] - reach - grid.origin()[a]) / grid.h(a))));
      hi[a] = std::min(grid.extent(a) - 1,
                       static_cast<int>(std::ceil((p.x[a] + reach - grid.origin()[a]) / grid.h(a))));
    }
    for (int k = lo[2]; k <= hi[2]; ++k) {
      for (int j = lo[1]; j <= hi[1]; ++j) {
        for (int i = lo[0]; i <= hi[0]; ++i) candidate[grid.index(i, j, k)] = 1;
      }
    }
  }
  for (std::size_t n = 0; n < grid.node_count(); ++n) {
    if (!candidate[n]) continue;
    const auto v = evaluate(t, grid.node(n));
    if (!v) continue;
    out.phi[n] = v->phi;
    out.grad[n] = v->grad;
    out.in_tube[n] = 1;
    ++out.count;
  }
  return out;
}

double TubeSolution::phase_sign(double t, const Vec3& x) const {
  const Vec3 x0 = flow(x, t, 0.0, options_.dt, *v_);
  return phi0_->value(x0) >= 0.0 ? 1.0 : -1.0;
}

geometry::InterfaceMesh TubeSolution::interface_mesh(double t, const geometry::Grid& grid) const {
  TubeSample s = sample(t, grid);
  geometry::ScalarField f = s.phi;
  const std::size_t N = grid.node_count();
  double fill = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    if (s.in_tube[n]) fill = std::max(fill, std::abs(f[n]));
  }
  fill = 2.0 * fill + grid.min_spacing();
  // Nodes outside the tube take the phase of their backward-flow foot point.
  // They sit at least a band away from the interface, so a coarse RK4 step
  // resolves the sign; a flood fill from the tube would leak through
  // undefined nodes at the band edge.
  const double coarse = std::max(options_.dt, 1e-2);
  for (std::size_t n = 0; n < N; ++n) {
    if (s.in_tube[n]) continue;
    const Vec3 x0 = flow(grid.node(n), t, 0.0, coarse, *v_);
    f[n] = (phi0_->value(x0) >= 0.0 ? 1.0 : -1.0) * fill;
  }
  return geometry::extract_interface(f, false);
}

std::shared_ptr<const TubeSolution> solve_tube(geometry::LevelSetPtr phi0, velocity::FieldPtr v,
                                               double horizon, TubeOptions options) {
  return std::make_shared<const TubeSolution>(std::move(phi0), std::move(v), horizon,
                                              std::move(options));
}

}  // namespace vem::characteristics
