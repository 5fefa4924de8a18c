#include "barrierkit/ode.hpp"

#include <algorithm>
#include <cmath>

namespace barrierkit {

namespace {

Vec hermite(double t, double ta, const Vec& ya, const Vec& fa, double tb, const Vec& yb,
            const Vec& fb) {
  const double dt = tb - ta;
  const double th = (t - ta) / dt;
  const double th2 = th * th;
  const double th3 = th2 * th;
  const double h00 = 2 * th3 - 3 * th2 + 1;
  const double h10 = th3 - 2 * th2 + th;
  const double h01 = -2 * th3 + 3 * th2;
  const double h11 = th3 - th2;
  Vec y(ya.size());
  for (std::size_t i = 0; i < ya.size(); ++i)
    y[i] = h00 * ya[i] + h10 * dt * fa[i] + h01 * yb[i] + h11 * dt * fb[i];
  return y;
}

struct StepRecord {
  double ta, tb;
  const Vec *ya, *fa, *yb, *fb;
  Vec at(double t) const { return hermite(t, ta, *ya, *fa, tb, *yb, *fb); }
};

class Integrator {
public:
  Integrator(const Field& field, const Vec& y0, double t0, double t1,
             const IntegratorOptions& opts, const std::vector<EventSpec>& events)
      : field_(field), opts_(opts), events_(events), t0_(t0), t1_(t1) {
    if (t1 == t0) throw ArgumentError("integrate: t1 must differ from t0");
    if (!(opts.step > 0.0)) throw ArgumentError("integrate: step must be positive");
    if (!(opts.rel_tol > 0.0) || !(opts.abs_tol > 0.0))
      throw ArgumentError("integrate: tolerances must be positive");
    sgn_ = t1 > t0 ? 1.0 : -1.0;
    span_ = std::fabs(t1 - t0);
    push_node(0.0, y0, eval(0.0, y0));
    ev_prev_.resize(events_.size());
    for (std::size_t e = 0; e < events_.size(); ++e) ev_prev_[e] = events_[e].fn(t0, y0);
  }

  Trajectory run() {
    double s = 0.0;
    double h = opts_.scheme == IntegratorOptions::Scheme::RK4
                   ? opts_.step
                   : std::min(opts_.step, span_ / 10.0);
    std::size_t steps = 0;
    while (s < span_) {
      if (++steps > opts_.max_steps)
        throw DivergenceError("integrate: max_steps exceeded at t=" + std::to_string(time_at(s)),
                              std::move(traj_));
      double h_try = std::min(h, span_ - s);
      Vec y_new;
      double s_new;
      if (opts_.scheme == IntegratorOptions::Scheme::RK4) {
        y_new = rk4_step(s, traj_.states.back(), h_try);
        s_new = s + h_try;
      } else {
        if (!rkf45_step(s, traj_.states.back(), h_try, h, y_new)) continue;  // rejected, retry
        s_new = s + h_try;
      }
      check_finite(y_new, s_new);
      const Vec f_new = eval(s_new, y_new);
      push_node(s_new, y_new, f_new);
      if (scan_events()) return std::move(traj_);
      s = s_new;
    }
    return std::move(traj_);
  }

private:
  double time_at(double s) const { return t0_ + sgn_ * s; }

  Vec eval(double s, const Vec& y) const {
    Vec f = field_(time_at(s), y);
    if (sgn_ < 0)
      for (double& v : f) v = -v;
    return f;  // derivative w.r.t. s
  }

  void check_finite(const Vec& y, double s) const {
    for (double v : y)
      if (!std::isfinite(v))
        throw NumericError("integrate: non-finite state at t=" + std::to_string(time_at(s)));
  }

  Vec rk4_step(double s, const Vec& y, double h) const {
    const Vec k1 = eval(s, y);
    const Vec k2 = eval(s + h / 2, axpy(y, h / 2, k1));
    const Vec k3 = eval(s + h / 2, axpy(y, h / 2, k2));
    const Vec k4 = eval(s + h, axpy(y, h, k3));
    Vec out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
      out[i] = y[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    return out;
  }

  // One Fehlberg 4(5) attempt; adjusts h and reports acceptance.
  bool rkf45_step(double s, const Vec& y, double& h_try, double& h, Vec& out) const {
    const std::size_t k = y.size();
    const Vec k1 = eval(s, y);
    Vec tmp(k);

    for (std::size_t i = 0; i < k; ++i) tmp[i] = y[i] + h_try * (k1[i] / 4);
    const Vec k2 = eval(s + h_try / 4, tmp);
    for (std::size_t i = 0; i < k; ++i)
      tmp[i] = y[i] + h_try * (3.0 / 32 * k1[i] + 9.0 / 32 * k2[i]);
    const Vec k3 = eval(s + 3 * h_try / 8, tmp);
    for (std::size_t i = 0; i < k; ++i)
      tmp[i] = y[i] + h_try * (1932.0 / 2197 * k1[i] - 7200.0 / 2197 * k2[i] +
                               7296.0 / 2197 * k3[i]);
    const Vec k4 = eval(s + 12 * h_try / 13, tmp);
    for (std::size_t i = 0; i < k; ++i)
      tmp[i] = y[i] + h_try * (439.0 / 216 * k1[i] - 8.0 * k2[i] + 3680.0 / 513 * k3[i] -
                               845.0 / 4104 * k4[i]);
    const Vec k5 = eval(s + h_try, tmp);
    for (std::size_t i = 0; i < k; ++i)
      tmp[i] = y[i] + h_try * (-8.0 / 27 * k1[i] + 2.0 * k2[i] - 3544.0 / 2565 * k3[i] +
                               1859.0 / 4104 * k4[i] - 11.0 / 40 * k5[i]);
    const Vec k6 = eval(s + h_try / 2, tmp);

    out.assign(k, 0.0);
    double err_ratio = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double y5 = y[i] + h_try * (16.0 / 135 * k1[i] + 6656.0 / 12825 * k3[i] +
                                        28561.0 / 56430 * k4[i] - 9.0 / 50 * k5[i] +
                                        2.0 / 55 * k6[i]);
      const double y4 = y[i] + h_try * (25.0 / 216 * k1[i] + 1408.0 / 2565 * k3[i] +
                                        2197.0 / 4104 * k4[i] - 1.0 / 5 * k5[i]);
      const double scale = opts_.abs_tol + opts_.rel_tol * std::max(std::fabs(y[i]), std::fabs(y5));
      err_ratio = std::max(err_ratio, std::fabs(y5 - y4) / scale);
      out[i] = y5;
    }
    const double grow = std::isfinite(err_ratio) && err_ratio > 0.0
                            ? 0.9 * std::pow(err_ratio, -0.2)
                            : 5.0;
    const double factor = std::clamp(grow, 0.2, 5.0);
    if (err_ratio <= 1.0) {
      h = h_try * factor;
      return true;
    }
    h_try *= factor;
    h = h_try;  // retry from the shrunken step
    if (h_try < 1e-14 * std::max(1.0, span_))
      throw NumericError("integrate: step size underflow at t=" +
                         std::to_string(time_at(s)));
    return false;
  }

  void push_node(double s, const Vec& y, const Vec& f_s) {
    traj_.times.push_back(time_at(s));
    traj_.states.push_back(y);
    // Store dy/dt in original time; f_s is dy/ds.
    traj_.derivs.push_back(sgn_ < 0 ? scaled(f_s, -1.0) : f_s);
  }

  // Scan the freshly appended step for event sign changes. Returns true when a
  // terminal event truncated the trajectory.
  bool scan_events() {
    if (events_.empty()) return false;
    const std::size_t nnode = traj_.size();
    const StepRecord seg{traj_.times[nnode - 2], traj_.times[nnode - 1],
                         &traj_.states[nnode - 2], &traj_.derivs[nnode - 2],
                         &traj_.states[nnode - 1], &traj_.derivs[nnode - 1]};
    struct Pending {
      std::size_t id;
      double t;
      Vec y;
    };
    std::vector<Pending> hits;
    for (std::size_t e = 0; e < events_.size(); ++e) {
      const double va = ev_prev_[e];
      const double vb = events_[e].fn(seg.tb, *seg.yb);
      ev_prev_[e] = vb;
      if (va == 0.0 || va * vb >= 0.0) continue;
      // Bisect in time on the interpolant.
      double ta = seg.ta, tb = seg.tb, fa = va;
      while (std::fabs(tb - ta) > opts_.event_tol) {
        const double tm = 0.5 * (ta + tb);
        const double fm = events_[e].fn(tm, seg.at(tm));
        if (fm == 0.0) {
          ta = tb = tm;
          break;
        }
        if ((fa < 0) == (fm < 0)) {
          ta = tm;
          fa = fm;
        } else {
          tb = tm;
        }
      }
      const double t_hit = 0.5 * (ta + tb);
      hits.push_back({e, t_hit, seg.at(t_hit)});
    }
    if (hits.empty()) return false;
    // Traversal order (increasing s).
    std::sort(hits.begin(), hits.end(), [this](const Pending& a, const Pending& b) {
      return sgn_ * a.t < sgn_ * b.t;
    });
    for (const Pending& hit : hits) {
      traj_.events.push_back({hit.id, hit.t, hit.y});
      if (events_[hit.id].terminal) {
        // Replace the last node with the crossing point.
        traj_.times.back() = hit.t;
        traj_.states.back() = hit.y;
        traj_.derivs.back() = field_(hit.t, hit.y);
        return true;
      }
    }
    return false;
  }

  const Field& field_;
  const IntegratorOptions& opts_;
  const std::vector<EventSpec>& events_;
  double t0_, t1_, sgn_ = 1.0, span_ = 0.0;
  std::vector<double> ev_prev_;
  Trajectory traj_;
};

}  // namespace

Trajectory integrate(const Field& field, const Vec& y0, double t0, double t1,
                     const IntegratorOptions& opts, const std::vector<EventSpec>& events) {
  return Integrator(field, y0, t0, t1, opts, events).run();
}

Vec dense_eval(const Trajectory& traj, double t) {
  if (traj.empty()) throw RangeError("dense_eval: empty trajectory");
  const bool fwd = traj.times.back() >= traj.times.front();
  const double lo = fwd ? traj.times.front() : traj.times.back();
  const double hi = fwd ? traj.times.back() : traj.times.front();
  if (t < lo || t > hi)
    throw RangeError("dense_eval: t=" + std::to_string(t) + " outside trajectory span [" +
                     std::to_string(lo) + ", " + std::to_string(hi) + "]");
  // Locate the segment containing t.
  std::size_t a = 0, b = traj.size() - 1;
  while (b - a > 1) {
    const std::size_t mid = (a + b) / 2;
    const bool left = fwd ? t <= traj.times[mid] : t >= traj.times[mid];
    if (left)
      b = mid;
    else
      a = mid;
  }
  if (t == traj.times[a]) return traj.states[a];
  if (t == traj.times[b]) return traj.states[b];
  return hermite(t, traj.times[a], traj.states[a], traj.derivs[a], traj.times[b], traj.states[b],
                 traj.derivs[b]);
}

}  // namespace barrierkit
