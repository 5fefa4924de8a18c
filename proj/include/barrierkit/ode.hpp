#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "barrierkit/errors.hpp"
#include "barrierkit/linalg.hpp"

namespace barrierkit {

struct IntegratorOptions {
  enum class Scheme { RK4, RKF45 };
  Scheme scheme = Scheme::RK4;
  double step = 1e-3;        // fixed step (RK4), initial step (RKF45)
  double rel_tol = 1e-8;     // RKF45
  double abs_tol = 1e-10;    // RKF45
  std::size_t max_steps = 10'000'000;
  double event_tol = 1e-10;  // time tolerance for event localisation
};

/// Scalar function whose sign changes along the solution are localised.
/// Terminal events truncate the trajectory at the crossing.
struct EventSpec {
  std::function<double(double, const Vec&)> fn;
  bool terminal = false;
};

struct EventHit {
  std::size_t event_id = 0;
  double time = 0.0;
  Vec state;
};

/// Discrete solution: strictly monotone times (decreasing for backward runs),
/// states and field values per node (the latter for Hermite interpolation),
/// plus localised event hits in traversal order.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> derivs;
  std::vector<EventHit> events;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
};

using Field = std::function<Vec(double, const Vec&)>;

/// Integration blew past max_steps; carries whatever was computed so far.
class DivergenceError : public Error {
public:
  DivergenceError(const std::string& msg, Trajectory partial)
      : Error(msg), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

private:
  Trajectory partial_;
};

/// Integrate y' = field(t,y) from t0 to t1 (t1 < t0 runs backward via time
/// reparameterisation, so events behave identically in both directions).
/// Every sign change of every event function within a step is localised by
/// bisection on the interpolated solution to within event_tol.
Trajectory integrate(const Field& field, const Vec& y0, double t0, double t1,
                     const IntegratorOptions& opts = {},
                     const std::vector<EventSpec>& events = {});

/// Cubic Hermite evaluation between stored nodes; exact at the nodes.
Vec dense_eval(const Trajectory& traj, double t);

}  // namespace barrierkit
