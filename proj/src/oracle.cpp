#include "barrierkit/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "barrierkit/parallel.hpp"

namespace barrierkit {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double uniform01(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

double max_g(const ConstraintSet& cs, const Vec& x) {
  const Vec gv = cs.g(x);
  double m = -std::numeric_limits<double>::infinity();
  for (double v : gv) m = std::max(m, v);
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// ControlSignal
// ---------------------------------------------------------------------------

ControlSignal ControlSignal::constant(Vec u) {
  ControlSignal s;
  s.kind = Kind::Constant;
  s.constant_value = std::move(u);
  return s;
}

ControlSignal ControlSignal::piecewise(std::vector<double> times, std::vector<Vec> vals) {
  if (vals.size() != times.size() + 1)
    throw ArgumentError("piecewise signal needs switch_times.size()+1 values");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1]))
      throw ArgumentError("piecewise signal switch times must be strictly increasing");
  ControlSignal s;
  s.kind = Kind::PiecewiseConstant;
  s.switch_times = std::move(times);
  s.values = std::move(vals);
  return s;
}

ControlSignal ControlSignal::bang_bang(const ControlSet& ctrl, int switch_count,
                                       std::uint64_t seed, double horizon) {
  if (switch_count < 0 || horizon <= 0.0)
    throw ArgumentError("bang_bang: switch_count >= 0 and horizon > 0 required");
  ControlSignal s;
  s.kind = Kind::BangBang;
  s.switch_count = switch_count;
  s.seed = seed;
  s.horizon = horizon;
  std::mt19937_64 rng(splitmix64(seed));

  s.switch_times.resize(switch_count);
  for (int k = 0; k < switch_count; ++k) s.switch_times[k] = horizon * uniform01(rng);
  std::sort(s.switch_times.begin(), s.switch_times.end());

  auto extreme = [&](const Vec* avoid) {
    for (int attempt = 0; attempt < 8; ++attempt) {
      Vec u(ctrl.dim, 0.0);
      if (ctrl.kind == ControlSet::Kind::UnitBall) {
        if (ctrl.dim == 1) {
          u[0] = uniform01(rng) < 0.5 ? -1.0 : 1.0;
        } else {
          double nn = 0.0;
          for (std::size_t j = 0; j < ctrl.dim; ++j) {
            // Box-Muller, deterministic from the stream
            const double a = std::max(uniform01(rng), 1e-300);
            const double b = uniform01(rng);
            u[j] = std::sqrt(-2.0 * std::log(a)) * std::cos(2.0 * M_PI * b);
            nn += u[j] * u[j];
          }
          nn = std::sqrt(nn);
          for (double& v : u) v /= nn > 0 ? nn : 1.0;
        }
      } else {
        for (std::size_t j = 0; j < ctrl.dim; ++j)
          u[j] = uniform01(rng) < 0.5 ? ctrl.lower[j] : ctrl.upper[j];
      }
      if (!avoid || dist(u, *avoid) > 1e-12) return u;
    }
    Vec u = *avoid;
    if (ctrl.kind == ControlSet::Kind::UnitBall)
      u = scaled(u, -1.0);
    else
      u[0] = u[0] == ctrl.lower[0] ? ctrl.upper[0] : ctrl.lower[0];
    return u;
  };

  s.values.push_back(extreme(nullptr));
  for (int k = 0; k < switch_count; ++k) s.values.push_back(extreme(&s.values.back()));
  return s;
}

const Vec& ControlSignal::at(double t) const {
  if (kind == Kind::Constant) return constant_value;
  const auto it = std::upper_bound(switch_times.begin(), switch_times.end(), t);
  return values[static_cast<std::size_t>(it - switch_times.begin())];
}

std::string ControlSignal::describe() const {
  switch (kind) {
    case Kind::Constant: {
      std::string s = "constant(";
      for (std::size_t j = 0; j < constant_value.size(); ++j)
        s += (j ? "," : "") + std::to_string(constant_value[j]);
      return s + ")";
    }
    case Kind::PiecewiseConstant:
      return "piecewise(" + std::to_string(values.size()) + " pieces)";
    case Kind::BangBang:
      return "bangbang(switches=" + std::to_string(switch_count) +
             ", seed=" + std::to_string(seed) + ")";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// simulate_forward
// ---------------------------------------------------------------------------

double SimResult::sup_until(double T) const {
  double s = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.times[k] > T + 1e-12) break;
    s = std::max(s, node_gmax[k]);
  }
  return s;
}

SimResult simulate_forward(const SystemModel& sys, const ConstraintSet& cs, const Vec& x0,
                           const ControlSignal& sig, double T, const SimOptions& opts) {
  if (!(T > 0.0)) throw ArgumentError("simulate_forward: horizon must be positive");
  if (x0.size() != sys.n) throw ArgumentError("simulate_forward: state dimension mismatch");

  // Control discontinuities land on segment boundaries.
  std::vector<double> cuts = {0.0};
  if (sig.kind != ControlSignal::Kind::Constant)
    for (double ts : sig.switch_times)
      if (ts > 0.0 && ts < T) cuts.push_back(ts);
  cuts.push_back(T);

  SimResult res;
  const bool has_stop = std::isfinite(opts.stop_above);

  Vec x = x0;
  const Vec g0 = cs.g(x0);
  std::vector<int> inside(cs.p);
  for (std::size_t i = 0; i < cs.p; ++i) inside[i] = g0[i] <= 0.0;

  for (std::size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
    const double a = cuts[seg], b = cuts[seg + 1];
    const Vec u = sig.at(0.5 * (a + b));
    Field field = [&sys, &u](double, const Vec& y) { return sys.dynamics(y, u); };

    std::vector<EventSpec> events;
    for (std::size_t i = 0; i < cs.p; ++i)
      events.push_back({[&cs, i](double, const Vec& y) { return cs.g(y)[i]; }, false});
    if (has_stop)
      events.push_back(
          {[&cs, &opts](double, const Vec& y) { return max_g(cs, y) - opts.stop_above; }, true});

    Trajectory part = integrate(field, x, a, b, opts.ode, events);

    const std::size_t skip = res.traj.empty() ? 0 : 1;
    for (std::size_t k = skip; k < part.size(); ++k) {
      res.traj.times.push_back(part.times[k]);
      res.traj.states.push_back(part.states[k]);
      res.traj.derivs.push_back(part.derivs[k]);
    }
    bool stopped = false;
    for (const EventHit& hit : part.events) {
      if (has_stop && hit.event_id == cs.p) {
        stopped = true;
        continue;
      }
      res.traj.events.push_back(hit);
      if (inside[hit.event_id] && !res.first_violation) res.first_violation = hit.time;
      inside[hit.event_id] = !inside[hit.event_id];
    }
    if (stopped) {
      res.stopped_early = true;
      break;
    }
    x = part.states.back();
  }

  res.node_gmax.reserve(res.traj.size());
  for (const Vec& y : res.traj.states) {
    const double gm = max_g(cs, y);
    res.node_gmax.push_back(gm);
    res.sup_max_g = std::max(res.sup_max_g, gm);
  }
  // A start exactly on the boundary produces no sign change for the event
  // detector; fall back to the first node that is clearly outside.
  if (!res.first_violation && res.sup_max_g > cs.activation_tol) {
    for (std::size_t k = 0; k < res.traj.size(); ++k) {
      if (res.node_gmax[k] > cs.activation_tol) {
        res.first_violation = res.traj.times[k];
        break;
      }
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Guided rollout
// ---------------------------------------------------------------------------

namespace {

// Raw-array evaluation preferring the compiled allocation-free hooks; systems
// built from plain closures fall back to the Vec interface.
class RawSystem {
public:
  RawSystem(const SystemModel& sys, const ConstraintSet& cs)
      : sys_(sys), cs_(cs), n_(sys.n), m_(sys.m), p_(cs.p) {}

  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }

  void f(const double* x, const double* u, double* out) const {
    if (sys_.dynamics_into) {
      sys_.dynamics_into(x, u, out);
      return;
    }
    const Vec fv = sys_.dynamics(Vec(x, x + n_), Vec(u, u + m_));
    std::copy(fv.begin(), fv.end(), out);
  }

  double gmax(const double* x) const {
    double worst = -std::numeric_limits<double>::infinity();
    if (cs_.g_into && p_ <= 64) {
      double buf[64];
      cs_.g_into(x, buf);
      for (std::size_t i = 0; i < p_; ++i) worst = std::max(worst, buf[i]);
      return worst;
    }
    const Vec gv = cs_.g(Vec(x, x + n_));
    for (double v : gv) worst = std::max(worst, v);
    return worst;
  }

  // One classic RK4 step in place; scratch must hold 5n doubles.
  void rk4_step(double* x, const double* u, double h, double* scratch) const {
    double* k1 = scratch;
    double* k2 = scratch + n_;
    double* k3 = scratch + 2 * n_;
    double* k4 = scratch + 3 * n_;
    double* tmp = scratch + 4 * n_;
    f(x, u, k1);
    for (std::size_t i = 0; i < n_; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    f(tmp, u, k2);
    for (std::size_t i = 0; i < n_; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    f(tmp, u, k3);
    for (std::size_t i = 0; i < n_; ++i) tmp[i] = x[i] + h * k3[i];
    f(tmp, u, k4);
    for (std::size_t i = 0; i < n_; ++i)
      x[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }

private:
  const SystemModel& sys_;
  const ConstraintSet& cs_;
  std::size_t n_, m_, p_;
};

struct ProbeScore {
  double t_viol;  // first time max g went positive (lookahead length if never)
  double sup_g;
  double end_speed;
};

ProbeScore probe_constant(const RawSystem& rs, const Vec& x0, const Vec& u, double lookahead,
                          double h, Vec& scratch) {
  // Doomed candidates are ranked by overshoot in a short grace window past the
  // first violation; holding them further only measures how bad blind
  // continuation gets, which is not informative.
  constexpr double kGrace = 0.5;
  ProbeScore sc{lookahead, -std::numeric_limits<double>::infinity(), 0.0};
  scratch.resize(6 * rs.n());
  double* x = scratch.data() + 5 * rs.n();
  std::copy(x0.begin(), x0.end(), x);
  const int steps = std::max(1, static_cast<int>(std::ceil(lookahead / h)));
  for (int s = 0; s <= steps; ++s) {
    const double gm = rs.gmax(x);
    sc.sup_g = std::max(sc.sup_g, gm);
    if (gm > 0.0 && sc.t_viol >= lookahead) sc.t_viol = s * h;
    if (s * h > sc.t_viol + kGrace) break;
    if (gm > 1e3 || !std::isfinite(gm)) break;
    if (s < steps) rs.rk4_step(x, u.data(), h, scratch.data());
  }
  double* fx = scratch.data();  // reuse the k1 slot
  rs.f(x, u.data(), fx);
  double speed = 0.0;
  for (std::size_t i = 0; i < rs.n(); ++i) speed += fx[i] * fx[i];
  sc.end_speed = std::sqrt(speed);
  return sc;
}

// Least-squares control that makes the vector field smallest (affine systems),
// projected into the control set. A cheap "hold still" candidate.
std::optional<Vec> equilibrium_control(const SystemModel& sys, const ControlSet& ctrl,
                                       const Vec& x) {
  if (!sys.affine) return std::nullopt;
  const Vec f0 = sys.affine->drift(x);
  const Mat B = sys.affine->input_matrix(x);
  const std::size_t m = sys.m;
  // Solve (B^T B + ridge I) u = -B^T f0 by Gaussian elimination.
  Mat A(m, m);
  Vec rhs(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < sys.n; ++r) s += B(r, i) * B(r, j);
      A(i, j) = s + (i == j ? 1e-12 : 0.0);
    }
    double s = 0.0;
    for (std::size_t r = 0; r < sys.n; ++r) s += B(r, i) * f0[r];
    rhs[i] = -s;
  }
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < m; ++r)
      if (std::fabs(A(r, col)) > std::fabs(A(piv, col))) piv = r;
    if (std::fabs(A(piv, col)) < 1e-14) return std::nullopt;
    if (piv != col) {
      for (std::size_t cc = 0; cc < m; ++cc) std::swap(A(piv, cc), A(col, cc));
      std::swap(rhs[piv], rhs[col]);
    }
    for (std::size_t r = col + 1; r < m; ++r) {
      const double f = A(r, col) / A(col, col);
      for (std::size_t cc = col; cc < m; ++cc) A(r, cc) -= f * A(col, cc);
      rhs[r] -= f * rhs[col];
    }
  }
  Vec u(m, 0.0);
  for (std::size_t r = m; r-- > 0;) {
    double s = rhs[r];
    for (std::size_t cc = r + 1; cc < m; ++cc) s -= A(r, cc) * u[cc];
    u[r] = s / A(r, r);
  }
  return ctrl.project(u);
}

std::vector<Vec> rollout_candidates(const SystemModel& sys, const ControlSet& ctrl, const Vec& x,
                                    const GuidedOptions& opts) {
  std::vector<Vec> cands;
  if (ctrl.dim == 1) {
    double lo = -1.0, hi = 1.0;
    if (ctrl.kind == ControlSet::Kind::Box) {
      lo = ctrl.lower[0];
      hi = ctrl.upper[0];
    }
    const int k = std::max(2, opts.values_per_axis);
    for (int i = 0; i < k; ++i) cands.push_back({lo + (hi - lo) * i / (k - 1)});
  } else {
    cands.push_back(ctrl.center());
    for (const Vec& e : ctrl.extreme_controls()) cands.push_back(e);
  }
  if (opts.include_equilibrium_control) {
    if (auto eq = equilibrium_control(sys, ctrl, x)) {
      bool fresh = true;
      for (const Vec& c : cands)
        if (dist(c, *eq) < 1e-9) fresh = false;
      if (fresh) cands.push_back(*eq);
    }
  }
  return cands;
}

}  // namespace

ControlSignal safety_rollout(const SystemModel& sys, const ConstraintSet& cs,
                             const ControlSet& ctrl, const Vec& x0, double T,
                             const GuidedOptions& opts) {
  const RawSystem rs(sys, cs);
  Vec scratch;
  Vec x = x0;
  std::vector<double> times;
  std::vector<Vec> values;
  const int pieces = std::max(1, static_cast<int>(std::ceil(T / opts.replan_dt)));
  for (int piece = 0; piece < pieces; ++piece) {
    const double t0 = piece * opts.replan_dt;
    const double t1 = std::min(T, t0 + opts.replan_dt);
    Vec u_best;
    ProbeScore best{-1.0, std::numeric_limits<double>::infinity(), 0.0};
    bool first = true;
    for (const Vec& u : rollout_candidates(sys, ctrl, x, opts)) {
      const ProbeScore sc = probe_constant(rs, x, u, opts.lookahead, opts.coarse_step, scratch);
      bool better = false;
      if (first) {
        better = true;
      } else if (sc.t_viol != best.t_viol) {
        better = sc.t_viol > best.t_viol;
      } else if (sc.sup_g != best.sup_g) {
        better = sc.sup_g < best.sup_g;
      } else if (sc.end_speed != best.end_speed) {
        better = sc.end_speed < best.end_speed;
      }
      if (better) {
        best = sc;
        u_best = u;
        first = false;
      }
    }
    if (values.empty() || dist(values.back(), u_best) > 1e-12) {
      if (!values.empty()) times.push_back(t0);
      values.push_back(u_best);
    }
    const int sub = std::max(1, static_cast<int>(std::round((t1 - t0) / opts.coarse_step)));
    scratch.resize(5 * rs.n());
    const double h = (t1 - t0) / sub;
    for (int s = 0; s < sub; ++s) rs.rk4_step(x.data(), u_best.data(), h, scratch.data());
    if (!all_finite(x)) break;
  }
  if (values.empty()) values.push_back(ctrl.center());
  return ControlSignal::piecewise(std::move(times), std::move(values));
}

namespace {

// Allocation-light mirror of simulate_forward for the classification search:
// same segmentation at control switch times, same fixed-step RK4, g at every
// node, early stop above the threshold. Returns prefix sups per horizon.
struct LeanResult {
  Vec prefix_sup;  // aligned with the horizons argument
  double sup = -std::numeric_limits<double>::infinity();
  bool stopped = false;
};

LeanResult lean_simulate(const RawSystem& rs, const Vec& x0, const ControlSignal& sig,
                         const std::vector<double>& horizons, double step, double stop_above) {
  const double T = *std::max_element(horizons.begin(), horizons.end());
  std::vector<double> cuts = {0.0};
  if (sig.kind != ControlSignal::Kind::Constant)
    for (double ts : sig.switch_times)
      if (ts > 0.0 && ts < T) cuts.push_back(ts);
  cuts.push_back(T);

  LeanResult res;
  res.prefix_sup.assign(horizons.size(), -std::numeric_limits<double>::infinity());
  Vec x = x0;
  Vec scratch(5 * rs.n());

  auto visit = [&](double t, double gm) {
    res.sup = std::max(res.sup, gm);
    for (std::size_t k = 0; k < horizons.size(); ++k)
      if (t <= horizons[k] + 1e-12) res.prefix_sup[k] = std::max(res.prefix_sup[k], gm);
    return gm >= stop_above || !std::isfinite(gm);
  };

  if (visit(0.0, rs.gmax(x.data()))) {
    res.stopped = true;
    return res;
  }
  for (std::size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
    const double a = cuts[seg], b = cuts[seg + 1];
    const Vec& u = sig.at(0.5 * (a + b));
    const std::size_t steps = static_cast<std::size_t>(std::ceil((b - a) / step - 1e-12));
    for (std::size_t s = 0; s < steps; ++s) {
      const double t0 = a + s * step;
      const double h = std::min(step, b - t0);
      rs.rk4_step(x.data(), u.data(), h, scratch.data());
      if (visit(t0 + h, rs.gmax(x.data()))) {
        res.stopped = true;
        return res;
      }
    }
  }
  return res;
}

}  // namespace

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

std::string to_string(Admissibility a) {
  switch (a) {
    case Admissibility::Admissible: return "admissible";
    case Admissibility::Inadmissible: return "inadmissible";
    case Admissibility::Unknown: return "unknown";
  }
  return "?";
}

std::vector<AdmissibilityVerdict> classify_ladder(const SystemModel& sys, const ConstraintSet& cs,
                                                  const ControlSet& ctrl, const Vec& x0,
                                                  const std::vector<double>& horizons,
                                                  const ClassifyOptions& opts) {
  if (horizons.empty()) throw ArgumentError("classify_ladder: need at least one horizon");
  const double T_max = *std::max_element(horizons.begin(), horizons.end());
  std::size_t longest = 0;
  for (std::size_t i = 0; i < horizons.size(); ++i)
    if (horizons[i] == T_max) longest = i;

  std::vector<AdmissibilityVerdict> out(horizons.size());
  for (std::size_t i = 0; i < horizons.size(); ++i) out[i].horizon = horizons[i];

  // Outside the constraint set: trivially inadmissible at every horizon.
  if (classify_region(cs, x0) == RegionLabel::Outside) {
    const double g0 = max_g(cs, x0);
    for (auto& v : out) {
      v.label = Admissibility::Inadmissible;
      v.min_sup_estimate = g0;
    }
    return out;
  }

  SimOptions so;
  so.ode.step = opts.step;
  so.stop_above = opts.stop_above;
  const RawSystem rs(sys, cs);

  // Candidate order: constant extremes, the set centre, the guided rollout,
  // then the seeded bang-bang batch. First full-horizon witness wins; the
  // rollout is only built when the constants fail.
  std::vector<ControlSignal> head;
  for (const Vec& e : ctrl.extreme_controls()) head.push_back(ControlSignal::constant(e));
  head.push_back(ControlSignal::constant(ctrl.center()));

  int samples = 0;
  auto consider = [&](const ControlSignal& sig) -> bool {
    const LeanResult lean = lean_simulate(rs, x0, sig, horizons, opts.step, opts.stop_above);
    ++samples;
    bool witness_candidate = false;
    for (std::size_t i = 0; i < horizons.size(); ++i) {
      out[i].min_sup_estimate = std::min(out[i].min_sup_estimate, lean.prefix_sup[i]);
      if (!out[i].witness && lean.prefix_sup[i] <= cs.activation_tol) witness_candidate = true;
    }
    if (witness_candidate) {
      // Confirm through the full simulate_forward path before granting the
      // witness label, so every Admissible verdict replays cleanly.
      const SimResult res = simulate_forward(sys, cs, x0, sig, T_max, so);
      for (std::size_t i = 0; i < horizons.size(); ++i) {
        if (out[i].witness) continue;
        const double s = res.sup_until(horizons[i]);
        if (s <= cs.activation_tol) {
          out[i].witness = sig;
          out[i].label = Admissibility::Admissible;
          out[i].min_sup_estimate = std::min(out[i].min_sup_estimate, s);
        }
      }
    }
    return out[longest].witness.has_value();
  };

  bool done = false;
  for (const ControlSignal& sig : head)
    if ((done = consider(sig))) break;
  if (!done && opts.guided.enabled)
    done = consider(safety_rollout(sys, cs, ctrl, x0, T_max, opts.guided));
  if (!done) {
    for (int k = 0; k < opts.n_signals; ++k) {
      const std::uint64_t sk = splitmix64(opts.seed ^ (0x9E3779B97F4A7C15ull * (k + 1)));
      if (consider(ControlSignal::bang_bang(ctrl, opts.switch_count, sk, T_max))) break;
    }
  }

  for (auto& v : out) {
    v.samples = samples;
    if (v.witness) continue;
    v.label = v.min_sup_estimate >= opts.confident_margin ? Admissibility::Inadmissible
                                                          : Admissibility::Unknown;
  }
  return out;
}

AdmissibilityVerdict classify_admissible(const SystemModel& sys, const ConstraintSet& cs,
                                         const ControlSet& ctrl, const Vec& x0,
                                         const ClassifyOptions& opts) {
  return classify_ladder(sys, cs, ctrl, x0, {opts.T}, opts)[0];
}

// ---------------------------------------------------------------------------
// grid classification
// ---------------------------------------------------------------------------

GridResult grid_classify(const SystemModel& sys, const ConstraintSet& cs, const ControlSet& ctrl,
                         const GridSpec& spec, const ClassifyOptions& opts,
                         std::vector<double> horizons) {
  if (spec.lo.size() != sys.n || spec.hi.size() != sys.n || spec.resolution.size() != sys.n)
    throw ArgumentError("grid_classify: spec dimensions must match the state dimension");
  if (horizons.empty()) horizons = {opts.T};

  GridResult grid;
  grid.spec = spec;
  grid.horizons = horizons;

  std::size_t cells = 1;
  for (std::size_t r : spec.resolution) cells *= r;
  if (cells == 0 || spec.resolution.empty()) return grid;

  grid.centers.resize(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    Vec x(sys.n);
    std::size_t rem = c;
    for (std::size_t ax = 0; ax < sys.n; ++ax) {
      const std::size_t i = rem % spec.resolution[ax];
      rem /= spec.resolution[ax];
      x[ax] = spec.lo[ax] + (spec.hi[ax] - spec.lo[ax]) * (i + 0.5) / spec.resolution[ax];
    }
    grid.centers[c] = x;
  }

  grid.labels.assign(horizons.size(), std::vector<Admissibility>(cells, Admissibility::Unknown));
  grid.min_sup.assign(horizons.size(),
                      std::vector<double>(cells, std::numeric_limits<double>::infinity()));

  parallel_for(cells, [&](std::size_t c) {
    ClassifyOptions copt = opts;
    copt.seed = splitmix64(opts.seed ^ c);
    const auto verdicts = classify_ladder(sys, cs, ctrl, grid.centers[c], horizons, copt);
    for (std::size_t h = 0; h < horizons.size(); ++h) {
      grid.labels[h][c] = verdicts[h].label;
      grid.min_sup[h][c] = verdicts[h].min_sup_estimate;
    }
  });
  return grid;
}

std::size_t count_components(const GridResult& grid, Admissibility which,
                             std::size_t horizon_index) {
  if (horizon_index >= grid.labels.size()) throw ArgumentError("count_components: bad horizon");
  const auto& labels = grid.labels[horizon_index];
  const auto& res = grid.spec.resolution;
  std::vector<int> comp(labels.size(), -1);
  std::size_t count = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < labels.size(); ++start) {
    if (labels[start] != which || comp[start] >= 0) continue;
    ++count;
    comp[start] = static_cast<int>(count);
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      // neighbours: +-1 along each axis
      std::size_t rem = c, stride = 1;
      for (std::size_t ax = 0; ax < res.size(); ++ax) {
        const std::size_t i = rem % res[ax];
        rem /= res[ax];
        if (i > 0) {
          const std::size_t nb = c - stride;
          if (labels[nb] == which && comp[nb] < 0) {
            comp[nb] = static_cast<int>(count);
            stack.push_back(nb);
          }
        }
        if (i + 1 < res[ax]) {
          const std::size_t nb = c + stride;
          if (labels[nb] == which && comp[nb] < 0) {
            comp[nb] = static_cast<int>(count);
            stack.push_back(nb);
          }
        }
        stride *= res[ax];
      }
    }
  }
  return count;
}

std::size_t containment_violations(const GridResult& inner, const GridResult& outer,
                                   std::size_t horizon_index) {
  if (inner.cell_count() != outer.cell_count())
    throw ArgumentError("containment_violations: grids have different cell counts");
  std::size_t bad = 0;
  for (std::size_t c = 0; c < inner.cell_count(); ++c) {
    if (inner.labels[horizon_index][c] == Admissibility::Admissible &&
        outer.labels[horizon_index][c] != Admissibility::Admissible)
      ++bad;
  }
  return bad;
}

// ---------------------------------------------------------------------------
// semipermeability
// ---------------------------------------------------------------------------

SemiReport semipermeability_report(const SystemModel& sys, const ConstraintSet& cs,
                                   const ControlSet& ctrl, const AdmissibleBoundary& boundary,
                                   const SemiOptions& opts) {
  if (!(opts.delta > 0.0))
    throw ArgumentError("semipermeability_report: displacement delta must be positive (on-arc "
                        "points are excluded by contract)");
  SemiReport report;
  report.arcs.resize(boundary.arcs.size());

  struct Task {
    std::size_t arc;
    std::size_t node;
    bool outward;
  };
  std::vector<Task> tasks;
  for (std::size_t a = 0; a < boundary.arcs.size(); ++a) {
    const BarrierArc& arc = boundary.arcs[a];
    report.arcs[a].arc_index = a;
    // Sample the part of the arc that is actually boundary: continuations past
    // a corner dive into the admissible region, where Cor. 7 says nothing.
    const std::size_t nn = a < boundary.kept_nodes.size()
                               ? std::min(boundary.kept_nodes[a], arc.traj.size())
                               : arc.traj.size();
    if (nn < 3) continue;
    std::vector<std::size_t> picks;
    for (int i = 0; i < opts.points_per_arc; ++i) {
      std::size_t k = 1 + static_cast<std::size_t>((static_cast<double>(i) + 0.5) /
                                                   opts.points_per_arc * (nn - 2));
      k = std::min(k, nn - 2);
      if (picks.empty() || picks.back() != k) picks.push_back(k);
    }
    for (std::size_t k : picks) {
      tasks.push_back({a, k, true});
      tasks.push_back({a, k, false});
    }
  }

  std::vector<int> outward_viol(tasks.size(), 0), inward_wit(tasks.size(), 0);
  parallel_for(tasks.size(), [&](std::size_t ti) {
    const Task& task = tasks[ti];
    const BarrierArc& arc = boundary.arcs[task.arc];
    const Vec xi = arc.state_at(task.node);
    Vec lam = arc.adjoint_at(task.node);
    const double ln = norm(lam);
    if (ln < 1e-300) return;
    for (double& v : lam) v /= ln;
    const Vec x = axpy(xi, task.outward ? opts.delta : -opts.delta, lam);

    ClassifyOptions copt = opts.classify;
    copt.T = opts.T;
    copt.n_signals = opts.n_signals;
    copt.seed = splitmix64(opts.seed ^ (0x517CC1B727220A95ull * (ti + 1)));
    const AdmissibilityVerdict verdict = classify_admissible(sys, cs, ctrl, x, copt);
    if (task.outward) {
      // A witness (or a strictly-interior min-sup) from an outward point
      // breaks semipermeability.
      if (verdict.witness || verdict.min_sup_estimate < -0.5 * opts.delta) outward_viol[ti] = 1;
    } else {
      if (verdict.witness) inward_wit[ti] = 1;
    }
  });

  int inward_total = 0, inward_hits = 0;
  for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
    ArcSemiReport& ar = report.arcs[tasks[ti].arc];
    if (tasks[ti].outward) {
      ++ar.outward_points;
      ar.outward_violations += outward_viol[ti];
      report.total_outward_violations += outward_viol[ti];
    } else {
      ++ar.inward_points;
      ar.inward_witnesses += inward_wit[ti];
      ++inward_total;
      inward_hits += inward_wit[ti];
    }
  }
  report.inward_witness_fraction =
      inward_total == 0 ? 1.0 : static_cast<double>(inward_hits) / inward_total;
  return report;
}

}  // namespace barrierkit
