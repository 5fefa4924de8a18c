#include "barrierkit/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace barrierkit {

std::string to_string(ArcTermination t) {
  switch (t) {
    case ArcTermination::LeftConstraintSet: return "left_constraint_set";
    case ArcTermination::ReachedHorizon: return "reached_horizon";
    case ArcTermination::HamiltonianDrift: return "hamiltonian_drift";
    case ArcTermination::SelfIntersection: return "self_intersection";
  }
  return "?";
}

namespace {

Vec switching_vector(const SystemModel& sys, const Vec& x, const Vec& lam) {
  const Mat B = sys.affine->input_matrix(x);
  return mat_tvec(B, lam);
}

// Spatial hash over the state part of arc nodes, for self-intersection
// detection. A revisiting trajectory passes between earlier nodes, so the
// proximity test measures distance to the polyline segment starting at each
// candidate node; the scan radius adapts to the observed node spacing.
class NodeHash {
public:
  NodeHash(std::size_t n, double tol) : n_(n), tol_(tol), cell_(std::max(tol, 1e-2)) {}

  void insert(const Vec& x, std::size_t node) {
    if (!last_.empty()) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        const double d = x[i] - last_[i];
        d2 += d * d;
      }
      max_spacing_ = std::max(max_spacing_, std::sqrt(d2));
    }
    last_.assign(x.begin(), x.begin() + n_);
    map_[key(x)].push_back(node);
  }

  // Earliest node whose outgoing polyline segment passes within tol of x,
  // restricted to |t_old - t_new| > min_sep.
  std::optional<std::size_t> find_revisit(const Vec& x, double t_new,
                                          const std::vector<double>& times,
                                          const std::vector<Vec>& states, std::size_t n,
                                          double min_sep) const {
    const long long reach =
        1 + static_cast<long long>(std::ceil((0.5 * max_spacing_ + tol_) / cell_));
    std::vector<long long> base(n_), offs(n_, -reach);
    for (std::size_t i = 0; i < n_; ++i) base[i] = cell_index(x[i]);
    std::optional<std::size_t> best;
    for (;;) {
      std::vector<long long> cellv(n_);
      for (std::size_t i = 0; i < n_; ++i) cellv[i] = base[i] + offs[i];
      auto it = map_.find(key_of(cellv));
      if (it != map_.end()) {
        for (std::size_t node : it->second) {
          if (std::fabs(times[node] - t_new) <= min_sep) continue;
          if (best && *best <= node) continue;
          if (segment_point_dist(states, node, x, n) <= tol_) best = node;
        }
      }
      std::size_t k = 0;
      while (k < n_ && ++offs[k] > reach) offs[k++] = -reach;
      if (k == n_) break;
    }
    return best;
  }

private:
  // Distance from x to the segment [node, node+1] of the stored polyline.
  double segment_point_dist(const std::vector<Vec>& states, std::size_t node, const Vec& x,
                            std::size_t n) const {
    const Vec& a = states[node];
    const std::size_t next = node + 1 < states.size() ? node + 1 : node;
    const Vec& b = states[next];
    double ab2 = 0.0, apab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = b[i] - a[i];
      ab2 += d * d;
      apab += (x[i] - a[i]) * d;
    }
    const double s = ab2 > 0.0 ? std::clamp(apab / ab2, 0.0, 1.0) : 0.0;
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = a[i] + s * (b[i] - a[i]);
      const double d = x[i] - p;
      d2 += d * d;
    }
    return std::sqrt(d2);
  }

  long long cell_index(double v) const { return static_cast<long long>(std::floor(v / cell_)); }

  std::uint64_t key(const Vec& x) const {
    std::vector<long long> cv(n_);
    for (std::size_t i = 0; i < n_; ++i) cv[i] = cell_index(x[i]);
    return key_of(cv);
  }

  static std::uint64_t key_of(const std::vector<long long>& cv) {
    std::uint64_t h = 1469598103934665603ull;
    for (long long c : cv) {
      h ^= static_cast<std::uint64_t>(c);
      h *= 1099511628211ull;
    }
    return h;
  }

  std::size_t n_;
  double tol_;
  double cell_;
  double max_spacing_ = 0.0;
  Vec last_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> map_;
};

class ArcBuilder {
public:
  ArcBuilder(const SystemModel& sys, const ConstraintSet& cs, const ControlSet& ctrl,
             const TangencyPoint& tp, const BarrierOptions& opts)
      : sys_(sys), cs_(cs), ctrl_(ctrl), tp_(tp), opts_(opts), hash_(sys.n, opts.loop_tol) {
    arc_.n = sys.n;
    arc_.endpoint = tp;
    arc_.t_bar = 0.0;
    arc_.bang_mode = bang_mode();
  }

  BarrierArc run() {
    const Vec lam0 = cs_.gradient(tp_.i_star, tp_.z);
    Vec y(2 * sys_.n);
    std::copy(tp_.z.begin(), tp_.z.end(), y.begin());
    std::copy(lam0.begin(), lam0.end(), y.begin() + sys_.n);

    Vec u = opts_.initial_control ? *opts_.initial_control
                                  : minimize_hamiltonian(sys_, ctrl_, tp_.z, lam0).u_star;
    if (!ctrl_.contains(u, 1e-9))
      throw ContractError("integrate_barrier_arc: initial control outside the control set");

    x0_norm_ = norm(tp_.z);
    append_node(0.0, y, u);

    double t = 0.0;
    bool blanking = false;  // short no-switch-event window right after a switch
    double last_sigma_sign = 0.0;
    std::size_t switch_count = 0;

    while (t > -opts_.t_max + 1e-15) {
      const double t_stop =
          blanking ? std::max(t - 2.0 * opts_.ode.step, -opts_.t_max) : -opts_.t_max;
      Trajectory seg = integrate_segment(y, t, t_stop, u, /*with_switch_events=*/!blanking);
      const auto outcome = absorb_segment(seg, u);
      if (outcome == Outcome::Stop) return std::move(arc_);

      t = arc_.traj.times.back();
      y = arc_.traj.states.back();

      if (outcome == Outcome::Exit) {
        arc_.termination = ArcTermination::LeftConstraintSet;
        return std::move(arc_);
      }
      if (outcome == Outcome::Switch) {
        // Which component crossed?
        const std::size_t comp = seg.events.back().event_id - cs_.p;
        const double t_sw = seg.events.back().time;
        if (!arc_.switch_times.empty() &&
            std::fabs(arc_.switch_times.back() - t_sw) < 10.0 * opts_.ode.event_tol) {
          arc_.termination = ArcTermination::HamiltonianDrift;
          arc_.diagnostic = "chattering: switching events closer than 10*event_tol";
          return std::move(arc_);
        }
        if (++switch_count > 2000) {
          arc_.termination = ArcTermination::HamiltonianDrift;
          arc_.diagnostic = "chattering: switch count exceeded 2000";
          return std::move(arc_);
        }
        arc_.switch_times.push_back(t_sw);
        // Sign before the crossing, read from the last node that is clearly
        // off zero (the value at the localised crossing itself is noise).
        last_sigma_sign = 0.0;
        for (std::size_t back = arc_.traj.size() - 1; back-- > 0;) {
          const double s =
              switching_vector(sys_, arc_.state_at(back), arc_.adjoint_at(back))[comp];
          if (std::fabs(s) > 1e-13) {
            last_sigma_sign = s > 0 ? 1.0 : -1.0;
            break;
          }
          if (arc_.traj.size() - 1 - back > 50) break;
        }
        u = flipped(u, comp);
        // Duplicate the switch node a hair later in backward time: the field
        // is discontinuous here, and dense evaluation needs the one-sided
        // derivative on each side.
        append_node(t_sw - 1e-12, y, u);
        blanking = true;
        continue;
      }
      if (blanking) {
        // End of the post-switch window: confirm the sign actually flipped
        // (still equal to the pre-crossing sign means a grazing touch).
        const Vec x(y.begin(), y.begin() + sys_.n);
        const Vec lam(y.begin() + sys_.n, y.end());
        const std::size_t comp = last_switch_component();
        const double s = switching_vector(sys_, x, lam)[comp];
        if (last_sigma_sign != 0.0 && s * last_sigma_sign > 0.0) {
          u = flipped(u, comp);
          arc_.switch_times.pop_back();
          arc_.diagnostic = "grazing switching function; sign restored";
        }
        blanking = false;
        continue;
      }
      if (t <= -opts_.t_max + 1e-12) {
        arc_.termination = ArcTermination::ReachedHorizon;
        return std::move(arc_);
      }
    }
    arc_.termination = ArcTermination::ReachedHorizon;
    return std::move(arc_);
  }

private:
  enum class Outcome { Continue, Exit, Switch, Stop };

  bool bang_mode() const {
    return sys_.affine && (sys_.m == 1 || ctrl_.kind == ControlSet::Kind::Box);
  }

  std::size_t last_switch_component() const { return last_comp_; }

  Vec flipped(Vec u, std::size_t comp) const {
    last_comp_ = comp;
    if (ctrl_.kind == ControlSet::Kind::Box) {
      const double mid = 0.5 * (ctrl_.lower[comp] + ctrl_.upper[comp]);
      u[comp] = u[comp] > mid ? ctrl_.lower[comp] : ctrl_.upper[comp];
    } else {
      u[comp] = -u[comp];
    }
    return u;
  }

  Trajectory integrate_segment(const Vec& y0, double t_from, double t_to, const Vec& u,
                               bool with_switch_events) {
    Field field;
    if (arc_.bang_mode) {
      field = [this, u](double, const Vec& y) { return augmented_field(y, u); };
    } else {
      // Feedback mode: re-resolve the minimiser at every evaluation, with
      // hysteresis toward the previous control where the Hamiltonian is flat
      // (degenerate minimisers would otherwise jitter between branches).
      u_prev_ = u;
      field = [this](double, const Vec& y) {
        const Vec x(y.begin(), y.begin() + sys_.n);
        const Vec lam(y.begin() + sys_.n, y.end());
        const HamiltonianMin hm = minimize_hamiltonian(sys_, ctrl_, x, lam);
        Vec uu = hm.u_star;
        if (u_prev_.size() == uu.size() &&
            hamiltonian(sys_, x, lam, u_prev_) <= hm.value + 1e-9)
          uu = u_prev_;
        u_prev_ = uu;
        return augmented_field(y, uu);
      };
    }
    std::vector<EventSpec> events;
    for (std::size_t i = 0; i < cs_.p; ++i) {
      events.push_back({[this, i](double, const Vec& y) {
                          const Vec x(y.begin(), y.begin() + sys_.n);
                          return cs_.g(x)[i] - cs_.activation_tol;
                        },
                        /*terminal=*/true});
    }
    if (arc_.bang_mode && with_switch_events) {
      for (std::size_t j = 0; j < sys_.m; ++j) {
        events.push_back({[this, j](double, const Vec& y) {
                            const Vec x(y.begin(), y.begin() + sys_.n);
                            const Vec lam(y.begin() + sys_.n, y.end());
                            return switching_vector(sys_, x, lam)[j];
                          },
                          /*terminal=*/true});
      }
    }
    return integrate(field, y0, t_from, t_to, opts_.ode, events);
  }

  Vec augmented_field(const Vec& y, const Vec& u) const {
    const Vec x(y.begin(), y.begin() + sys_.n);
    const Vec lam(y.begin() + sys_.n, y.end());
    const Vec f = sys_.dynamics(x, u);
    const Mat J = sys_.jacobian_x(x, u);
    Vec out(2 * sys_.n);
    for (std::size_t i = 0; i < sys_.n; ++i) out[i] = f[i];
    const Vec jl = mat_tvec(J, lam);
    for (std::size_t i = 0; i < sys_.n; ++i) out[sys_.n + i] = -jl[i];
    return out;
  }

  void append_node(double t, const Vec& y, const Vec& u) {
    arc_.traj.times.push_back(t);
    arc_.traj.states.push_back(y);
    arc_.traj.derivs.push_back(augmented_field_for_record(y, u));
    arc_.controls.push_back(u);
    hash_.insert(Vec(y.begin(), y.begin() + sys_.n), arc_.traj.times.size() - 1);
  }

  Vec augmented_field_for_record(const Vec& y, const Vec& u) const {
    if (arc_.bang_mode) return augmented_field(y, u);
    const Vec x(y.begin(), y.begin() + sys_.n);
    const Vec lam(y.begin() + sys_.n, y.end());
    return augmented_field(y, minimize_hamiltonian(sys_, ctrl_, x, lam).u_star);
  }

  // Move segment nodes into the arc, running per-node checks. The segment's
  // first node duplicates the arc's last node and is skipped.
  Outcome absorb_segment(const Trajectory& seg, const Vec& u) {
    for (std::size_t k = 1; k < seg.size(); ++k) {
      const double t = seg.times[k];
      const Vec& y = seg.states[k];
      const Vec x(y.begin(), y.begin() + sys_.n);
      const Vec lam(y.begin() + sys_.n, y.end());

      const Vec u_node = arc_.bang_mode ? u : minimize_hamiltonian(sys_, ctrl_, x, lam).u_star;
      const double H = hamiltonian(sys_, x, lam, u_node);
      if (std::fabs(H) > opts_.hamiltonian_tol) {
        push_raw(seg, k, u);
        arc_.termination = ArcTermination::HamiltonianDrift;
        arc_.diagnostic = "|H| = " + std::to_string(std::fabs(H)) + " exceeded tolerance";
        return Outcome::Stop;
      }
      if (norm(lam) < 1e-30) {
        push_raw(seg, k, u);
        arc_.termination = ArcTermination::HamiltonianDrift;
        arc_.diagnostic = "adjoint collapsed to zero";
        return Outcome::Stop;
      }
      if (opts_.gronwall_C > 0.0 && !arc_.gronwall_exceeded) {
        const double bound =
            gronwall_bound(opts_.gronwall_C, opts_.gronwall_alpha, x0_norm_, std::fabs(t));
        if (norm(x) > bound) arc_.gronwall_exceeded = true;  // advisory, not a stop
      }
      const auto revisit =
          hash_.find_revisit(x, t, arc_.traj.times, arc_.traj.states, sys_.n, 1.0);
      if (revisit) {
        // Require a genuine excursion between the two visits and an aligned
        // adjoint direction, otherwise slow motion near an equilibrium would
        // trigger this.
        const Vec lam_old = arc_.adjoint_at(*revisit);
        const double c = dot(lam, lam_old) / (norm(lam) * norm(lam_old) + 1e-300);
        bool excursion = false;
        for (std::size_t q = *revisit; q < arc_.traj.times.size(); ++q) {
          if (dist(arc_.state_at(q), x) > 1000.0 * opts_.loop_tol) {
            excursion = true;
            break;
          }
        }
        if (c > 0.99 && excursion) {
          push_raw(seg, k, u);
          arc_.termination = ArcTermination::SelfIntersection;
          return Outcome::Stop;
        }
      }
      push_raw(seg, k, u);
    }
    if (!seg.events.empty()) {
      const std::size_t id = seg.events.back().event_id;
      if (id < cs_.p) return Outcome::Exit;
      return Outcome::Switch;
    }
    return Outcome::Continue;
  }

  void push_raw(const Trajectory& seg, std::size_t k, const Vec& u) {
    append_node(seg.times[k], seg.states[k], arc_.bang_mode ? u : Vec{});
    if (!arc_.bang_mode) {
      const Vec& y = seg.states[k];
      const Vec x(y.begin(), y.begin() + sys_.n);
      const Vec lam(y.begin() + sys_.n, y.end());
      arc_.controls.back() = minimize_hamiltonian(sys_, ctrl_, x, lam).u_star;
    }
  }

  const SystemModel& sys_;
  const ConstraintSet& cs_;
  const ControlSet& ctrl_;
  const TangencyPoint& tp_;
  const BarrierOptions& opts_;
  BarrierArc arc_;
  NodeHash hash_;
  double x0_norm_ = 0.0;
  mutable std::size_t last_comp_ = 0;
  Vec u_prev_;  // feedback-mode hysteresis
};

}  // namespace

Vec control_at(const BarrierArc& arc, double t) {
  if (arc.traj.empty()) throw RangeError("control_at: empty arc");
  if (t > arc.traj.times.front() + 1e-12 || t < arc.traj.times.back() - 1e-12)
    throw RangeError("control_at: time outside arc span");
  if (arc.bang_mode) {
    // Controls are constant between switch times; times run 0 -> -T. A switch
    // node carries the control of the segment that follows it (more negative
    // times), so strict interiors of earlier segments use the previous node.
    for (std::size_t k = 0; k < arc.traj.times.size(); ++k) {
      if (arc.traj.times[k] == t) return arc.controls[k];
      if (arc.traj.times[k] < t) return arc.controls[k == 0 ? 0 : k - 1];
    }
    return arc.controls.back();
  }
  // Feedback mode: nearest node.
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < arc.traj.times.size(); ++k) {
    const double d = std::fabs(arc.traj.times[k] - t);
    if (d < bd) {
      bd = d;
      best = k;
    }
  }
  return arc.controls[best];
}

BarrierArc integrate_barrier_arc(const SystemModel& sys, const ConstraintSet& cs,
                                 const ControlSet& ctrl, const TangencyPoint& tp,
                                 const BarrierOptions& opts) {
  if (classify_region(cs, tp.z) != RegionLabel::Boundary)
    throw ContractError("integrate_barrier_arc: endpoint is not on the constraint boundary");
  if (tp.residual > 1e-6)
    throw ContractError("integrate_barrier_arc: endpoint tangentiality residual too large");
  return ArcBuilder(sys, cs, ctrl, tp, opts).run();
}

std::vector<BarrierArc> integrate_barrier_arcs(const SystemModel& sys, const ConstraintSet& cs,
                                               const ControlSet& ctrl, const TangencyPoint& tp,
                                               const BarrierOptions& opts) {
  const Vec lam0 = cs.gradient(tp.i_star, tp.z);
  std::vector<Vec> candidates;

  if (sys.affine && (sys.m == 1 || ctrl.kind == ControlSet::Kind::Box)) {
    const Vec sigma = switching_vector(sys, tp.z, lam0);
    std::vector<std::size_t> zero_comps;
    for (std::size_t j = 0; j < sys.m; ++j)
      if (std::fabs(sigma[j]) <= 1e-12) zero_comps.push_back(j);
    const HamiltonianMin hm = minimize_hamiltonian(sys, ctrl, tp.z, lam0);
    if (zero_comps.empty()) {
      candidates.push_back(hm.u_star);
    } else {
      // Every sign choice of the degenerate components.
      const std::size_t combos = std::size_t{1} << zero_comps.size();
      for (std::size_t mask = 0; mask < combos; ++mask) {
        Vec u = hm.u_star;
        for (std::size_t b = 0; b < zero_comps.size(); ++b) {
          const std::size_t j = zero_comps[b];
          double lo = -1.0, hi = 1.0;
          if (ctrl.kind == ControlSet::Kind::Box) {
            lo = ctrl.lower[j];
            hi = ctrl.upper[j];
          }
          u[j] = (mask >> b) & 1 ? hi : lo;
        }
        candidates.push_back(u);
      }
    }
  } else {
    // General path: a degenerate endpoint minimiser is a branch point too.
    const HamiltonianMin hm = minimize_hamiltonian(sys, ctrl, tp.z, lam0);
    if (hm.degenerate) {
      for (const Vec& e : ctrl.extreme_controls()) candidates.push_back(e);
      candidates.push_back(hm.u_star);
    } else {
      candidates.push_back(hm.u_star);
    }
  }

  std::vector<BarrierArc> arcs;
  for (const Vec& u0 : candidates) {
    BarrierOptions probe_opts = opts;
    probe_opts.initial_control = u0;
    BarrierArc arc = integrate_barrier_arc(sys, cs, ctrl, tp, probe_opts);

    // Candidates that exit the constraint set or lose the Hamiltonian within
    // the probe window are spurious branches.
    if ((arc.termination == ArcTermination::LeftConstraintSet ||
         arc.termination == ArcTermination::HamiltonianDrift) &&
        arc.traj.size() <= static_cast<std::size_t>(opts.discard_steps) + 1)
      continue;
    // Hamiltonian minimality: shortly after the start, the control must agree
    // with the sign rule u_j * sigma_j <= 0.
    if (arc.bang_mode && sys.affine && arc.traj.size() > 3) {
      const std::size_t probe =
          std::min<std::size_t>(arc.traj.size() - 1, static_cast<std::size_t>(opts.discard_steps));
      const Vec x = arc.state_at(probe);
      const Vec lam = arc.adjoint_at(probe);
      const Vec sigma = switching_vector(sys, x, lam);
      bool consistent = true;
      for (std::size_t j = 0; j < sys.m; ++j)
        if (arc.controls[probe][j] * sigma[j] > 1e-12) consistent = false;
      if (!consistent) continue;
    }
    // Feedback-mode candidates self-correct onto the valid branch through the
    // minimiser hysteresis, so several launches can yield the same arc.
    bool duplicate = false;
    for (const BarrierArc& kept : arcs) {
      if (kept.termination != arc.termination) continue;
      if (kept.traj.empty() || arc.traj.empty()) continue;
      if (std::fabs(kept.traj.times.back() - arc.traj.times.back()) > 1e-3) continue;
      if (dist(kept.state_at(kept.traj.size() - 1), arc.state_at(arc.traj.size() - 1)) <= 1e-6)
        duplicate = true;
    }
    if (!duplicate) arcs.push_back(std::move(arc));
  }
  return arcs;
}

double hamiltonian_residual(const SystemModel& sys, const BarrierArc& arc) {
  double worst = 0.0;
  for (std::size_t k = 0; k < arc.traj.size(); ++k) {
    const double t = arc.traj.times[k];
    bool near_switch = false;
    for (double ts : arc.switch_times)
      if (std::fabs(t - ts) <= 1e-10) near_switch = true;
    if (near_switch) continue;
    worst = std::max(worst,
                     std::fabs(hamiltonian(sys, arc.state_at(k), arc.adjoint_at(k),
                                           arc.controls[k])));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Boundary assembly
// ---------------------------------------------------------------------------

namespace {

// Closest-approach parameters of segments [p0,p1] and [q0,q1].
double segment_distance(const Vec& p0, const Vec& p1, const Vec& q0, const Vec& q1, Vec* closest) {
  // Constrained quadratic in (s, t) over the unit square, solved by projection
  // onto the candidate edges. Small and dimension-generic.
  const Vec d1 = sub(p1, p0), d2 = sub(q1, q0), r = sub(p0, q0);
  const double a = dot(d1, d1), e = dot(d2, d2), f = dot(d2, r);
  double s = 0.0, t = 0.0;
  const double c = dot(d1, r), b = dot(d1, d2);
  const double denom = a * e - b * b;
  if (denom > 1e-300) s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
  t = e > 1e-300 ? (b * s + f) / e : 0.0;
  if (t < 0.0) {
    t = 0.0;
    s = a > 1e-300 ? std::clamp(-c / a, 0.0, 1.0) : 0.0;
  } else if (t > 1.0) {
    t = 1.0;
    s = a > 1e-300 ? std::clamp((b - c) / a, 0.0, 1.0) : 0.0;
  }
  const Vec cp = axpy(p0, s, d1);
  const Vec cq = axpy(q0, t, d2);
  if (closest) {
    *closest = cp;
    for (std::size_t i = 0; i < cp.size(); ++i) (*closest)[i] = 0.5 * (cp[i] + cq[i]);
  }
  return dist(cp, cq);
}

// 2-D segment intersection point, if the segments properly cross.
std::optional<Vec> segment_cross_2d(const Vec& p0, const Vec& p1, const Vec& q0, const Vec& q1) {
  const double rx = p1[0] - p0[0], ry = p1[1] - p0[1];
  const double sx = q1[0] - q0[0], sy = q1[1] - q0[1];
  const double denom = rx * sy - ry * sx;
  if (std::fabs(denom) < 1e-300) return std::nullopt;
  const double qpx = q0[0] - p0[0], qpy = q0[1] - p0[1];
  const double tt = (qpx * sy - qpy * sx) / denom;
  const double uu = (qpx * ry - qpy * rx) / denom;
  if (tt < -1e-12 || tt > 1.0 + 1e-12 || uu < -1e-12 || uu > 1.0 + 1e-12) return std::nullopt;
  return Vec{p0[0] + tt * rx, p0[1] + tt * ry};
}

std::vector<Vec> arc_polyline(const BarrierArc& arc) {
  std::vector<Vec> pts;
  pts.reserve(arc.traj.size());
  for (std::size_t k = 0; k < arc.traj.size(); ++k) pts.push_back(arc.state_at(k));
  return pts;
}

}  // namespace

AdmissibleBoundary assemble_boundary(const SystemModel& sys, const ConstraintSet& cs,
                                     const ControlSet& ctrl, std::vector<BarrierArc> arcs,
                                     const BoundaryOptions& opts) {
  if (opts.lo.size() != sys.n || opts.hi.size() != sys.n)
    throw ArgumentError("assemble_boundary: sampling window must have state dimension");
  AdmissibleBoundary out;

  // --- usable part of each face ------------------------------------------
  bool all_usable = true;
  for (std::size_t face = 0; face < cs.p; ++face) {
    // Reuse the face projection machinery through a fine scan.
    Vec center(sys.n);
    for (std::size_t j = 0; j < sys.n; ++j) center[j] = 0.5 * (opts.lo[j] + opts.hi[j]);
    const Vec grad_c = cs.gradient(face, center);
    std::size_t dep = 0;
    double best = -1.0;
    for (std::size_t j = 0; j < sys.n; ++j)
      if (std::fabs(grad_c[j]) > best) {
        best = std::fabs(grad_c[j]);
        dep = j;
      }
    if (best < 1e-14) continue;
    std::vector<std::size_t> free_axes;
    for (std::size_t j = 0; j < sys.n; ++j)
      if (j != dep) free_axes.push_back(j);
    if (free_axes.size() != 1) continue;  // sampling polylines only meaningful in 2-D
    const std::size_t ax = free_axes[0];

    UsableSegment seg;
    seg.face = face;
    for (int i = 0; i < opts.density; ++i) {
      Vec z(sys.n, 0.0);
      z[ax] = opts.lo[ax] + (opts.hi[ax] - opts.lo[ax]) * i / (opts.density - 1);
      z[dep] = center[dep];
      bool ok = true;
      for (int it = 0; it < 50; ++it) {
        const double gv = cs.g(z)[face];
        if (std::fabs(gv) <= 1e-12) break;
        const double slope = cs.gradient(face, z)[dep];
        if (std::fabs(slope) < 1e-14) {
          ok = false;
          break;
        }
        z[dep] -= gv / slope;
      }
      ok = ok && std::fabs(cs.g(z)[face]) <= 1e-12;
      for (std::size_t j = 0; j < sys.n && ok; ++j)
        if (z[j] < opts.lo[j] - 1e-9 || z[j] > opts.hi[j] + 1e-9) ok = false;
      if (ok && classify_region(cs, z) != RegionLabel::Boundary) ok = false;
      bool usable = false;
      if (ok) usable = usable_part(sys, cs, ctrl, z);
      if (!usable && ok) all_usable = false;
      if (usable) {
        seg.points.push_back(z);
      } else if (!seg.points.empty()) {
        out.usable_segments.push_back(std::move(seg));
        seg = UsableSegment{};
        seg.face = face;
      }
    }
    if (!seg.points.empty()) out.usable_segments.push_back(std::move(seg));
  }
  if (arcs.empty() && !all_usable)
    throw ContractError(
        "assemble_boundary: no arcs and the constraint boundary is not fully usable");

  // --- corners: pairwise arc intersections --------------------------------
  std::vector<std::vector<Vec>> polys;
  for (const BarrierArc& a : arcs) polys.push_back(arc_polyline(a));

  for (std::size_t ia = 0; ia < polys.size(); ++ia) {
    for (std::size_t ib = ia + 1; ib < polys.size(); ++ib) {
      const auto& A = polys[ia];
      const auto& B = polys[ib];
      if (A.size() < 2 || B.size() < 2) continue;
      // Coarse-to-fine: bounding-box prefilter on B segments via a uniform
      // grid over the first axis keeps this near-linear for long arcs.
      Corner best_corner;
      double best_d = std::numeric_limits<double>::infinity();
      std::vector<Corner> hits;
      for (std::size_t i = 0; i + 1 < A.size(); ++i) {
        for (std::size_t j = 0; j + 1 < B.size(); ++j) {
          // Cheap reject on axis-0 intervals.
          const double alo = std::min(A[i][0], A[i + 1][0]) - opts.corner_tol;
          const double ahi = std::max(A[i][0], A[i + 1][0]) + opts.corner_tol;
          if (std::max(B[j][0], B[j + 1][0]) < alo || std::min(B[j][0], B[j + 1][0]) > ahi)
            continue;
          Vec closest;
          const double d = segment_distance(A[i], A[i + 1], B[j], B[j + 1], &closest);
          if (d >= opts.corner_tol) continue;
          Vec pt = closest;
          if (sys.n == 2) {
            const auto cross = segment_cross_2d(A[i], A[i + 1], B[j], B[j + 1]);
            if (cross) pt = *cross;
          }
          // Exclude shared tangency endpoints: those are meeting points on
          // the constraint boundary, not interior corners.
          if (dist(pt, arcs[ia].endpoint.z) < 1e-6 || dist(pt, arcs[ib].endpoint.z) < 1e-6)
            continue;
          Corner c;
          c.point = pt;
          c.arc_a = ia;
          c.arc_b = ib;
          c.dist = d;
          hits.push_back(c);
          if (d < best_d) {
            best_d = d;
            best_corner = c;
          }
        }
      }
      // Cluster hits (adjacent segment pairs all flag the same crossing) and
      // keep one representative per cluster.
      std::vector<Corner> cluster_reps;
      for (const Corner& c : hits) {
        bool merged = false;
        for (Corner& rep : cluster_reps) {
          if (dist(rep.point, c.point) < 1e-3) {
            if (c.dist < rep.dist) rep = c;
            merged = true;
            break;
          }
        }
        if (!merged) cluster_reps.push_back(c);
      }
      for (const Corner& rep : cluster_reps) out.corners.push_back(rep);
    }
  }

  // --- trimming (2-D): cut each arc past its first corner -----------------
  out.trimmed.resize(arcs.size());
  out.kept_nodes.resize(arcs.size());
  for (std::size_t k = 0; k < arcs.size(); ++k) {
    out.trimmed[k] = polys[k];
    out.kept_nodes[k] = polys[k].size();
  }
  if (sys.n != 2) {
    if (!out.corners.empty())
      out.note = "corner trimming is only defined for n=2; arcs returned untrimmed";
  } else if (opts.trim) {
    for (const Corner& c : out.corners) {
      for (std::size_t which : {c.arc_a, c.arc_b}) {
        const std::size_t other = which == c.arc_a ? c.arc_b : c.arc_a;
        auto& poly = out.trimmed[which];
        // Locate the nearest vertex to the corner along this arc.
        std::size_t cut = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < poly.size(); ++i) {
          const double d = dist(poly[i], c.point);
          if (d < bd) {
            bd = d;
            cut = i;
          }
        }
        if (cut + 1 >= poly.size()) continue;
        // Orientation test: the part to be discarded must lie outward of the
        // other arc (its adjoint is the outward normal at the corner).
        std::size_t near_other = 0;
        double bd2 = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < arcs[other].traj.size(); ++i) {
          const double d = dist(arcs[other].state_at(i), c.point);
          if (d < bd2) {
            bd2 = d;
            near_other = i;
          }
        }
        const Vec lam_other = arcs[other].adjoint_at(near_other);
        const Vec probe = poly[std::min(cut + 5, poly.size() - 1)];
        const double side = dot(lam_other, sub(probe, c.point));
        // Past a transversal barrier crossing the continuation dives into the
        // region the other arc bounds (strictly inward of its normal); that
        // piece is no longer boundary.
        if (side < 0.0) {
          poly.resize(cut + 1);
          poly.back() = c.point;
          out.kept_nodes[which] = std::min(out.kept_nodes[which], cut + 1);
        }
      }
    }
  }

  out.arcs = std::move(arcs);
  return out;
}

}  // namespace barrierkit
