#pragma once

// Shared helpers for arc-level checks: forward replay of an arc's recorded
// control schedule, and the fundamental matrix of the variational equation
// integrated along the arc.

#include "barrierkit/barrier.hpp"
#include "barrierkit/ode.hpp"

namespace test_support {

using namespace barrierkit;

/// Forward integration of x' = f(x, u(t)) under the arc's control schedule
/// from (t_from, x_from) to t = 0, split at the recorded switch times so the
/// integrator never steps across a control discontinuity.
inline Vec replay_flow(const SystemModel& sys, const BarrierArc& arc, const Vec& x_from,
                       double t_from) {
  std::vector<double> cuts{t_from};
  for (double ts : arc.switch_times)
    if (ts > t_from && ts < 0.0) cuts.push_back(ts);
  cuts.push_back(0.0);
  std::sort(cuts.begin(), cuts.end());
  IntegratorOptions opts;
  opts.step = 1e-3;
  Vec x = x_from;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const Vec u = control_at(arc, 0.5 * (cuts[s] + cuts[s + 1]));
    const Field field = [&](double, const Vec& y) { return sys.dynamics(y, u); };
    x = integrate(field, x, cuts[s], cuts[s + 1], opts).states.back();
  }
  return x;
}

/// Fundamental matrix Phi(0, t_from): d/dt Phi = (df/dx) Phi along the arc.
inline Mat transition_to_zero(const SystemModel& sys, const BarrierArc& arc, double t_from) {
  const std::size_t n = sys.n;
  const Field field = [&](double t, const Vec& phi_flat) {
    const Vec y = dense_eval(arc.traj, std::min(t, 0.0));
    const Vec x(y.begin(), y.begin() + n);
    const Mat A = sys.jacobian_x(x, control_at(arc, std::min(t, 0.0)));
    Vec out(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += A(i, k) * phi_flat[k * n + j];
        out[i * n + j] = s;
      }
    return out;
  };
  Vec eye(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) eye[i * n + i] = 1.0;
  IntegratorOptions opts;
  opts.step = 1e-3;
  const Vec flat = integrate(field, eye, t_from, 0.0, opts).states.back();
  Mat phi(n, n);
  phi.data = flat;
  return phi;
}

}  // namespace test_support
