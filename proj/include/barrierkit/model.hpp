#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "barrierkit/linalg.hpp"

namespace barrierkit {

/// Optional split f(x,u) = f0(x) + B(x) u, detected or supplied at build time.
/// Closed-form Hamiltonian minimisation and switching-function events are only
/// available when this is present.
struct AffineDecomposition {
  std::function<Vec(const Vec&)> drift;         // f0 : R^n -> R^n
  std::function<Mat(const Vec&)> input_matrix;  // B  : R^n -> n x m
};

/// A controlled vector field x' = f(x,u) together with its exact state
/// Jacobian. Immutable after construction; all evaluations are pure.
struct SystemModel {
  std::size_t n = 0;  // state dimension
  std::size_t m = 0;  // control dimension
  std::function<Vec(const Vec&, const Vec&)> dynamics;
  std::function<Mat(const Vec&, const Vec&)> jacobian_x;
  std::optional<AffineDecomposition> affine;
  /// Optional allocation-free evaluation (same map as dynamics, no checks);
  /// compiled systems provide it, the simulation loops prefer it.
  std::function<void(const double* x, const double* u, double* out)> dynamics_into;
};

/// The p smooth scalar constraints g_i(x) <= 0 defining the constraint set,
/// with exact gradients. activation_tol is the numeric band for "on the
/// boundary".
struct ConstraintSet {
  std::size_t p = 0;
  std::function<Vec(const Vec&)> g;
  std::function<Vec(std::size_t, const Vec&)> gradient;  // row Dg_i(x), length n
  double activation_tol = 1e-8;
  /// Optional allocation-free evaluation of all g_i at once.
  std::function<void(const double* x, double* out)> g_into;
};

/// Compact admissible control set: the closed unit ball, or an axis-aligned
/// box (the two coincide for scalar controls with bounds [-1,1]).
struct ControlSet {
  enum class Kind { UnitBall, Box };

  Kind kind = Kind::UnitBall;
  std::size_t dim = 1;
  Vec lower;  // Box only
  Vec upper;  // Box only
  int sample_count = 0;  // 0 = default (64 for m=1, 256 otherwise)

  static ControlSet unit_ball(std::size_t m, int sample_count = 0);
  static ControlSet box(Vec lower, Vec upper, int sample_count = 0);

  bool contains(const Vec& u, double tol = 1e-12) const;
  /// Ball centre / box midpoint; also the degenerate-minimiser tie-break value.
  Vec center() const;
  /// Componentwise clamp (box) or radial projection (ball).
  Vec project(const Vec& u) const;
  /// Extreme controls: box vertices, or +-1 along each axis for the ball.
  std::vector<Vec> extreme_controls() const;
  /// Deterministic enumeration of the whole set (endpoint+grid for m=1,
  /// Fibonacci sphere shells for the ball, lattice for the box).
  std::vector<Vec> sample_controls() const;
  int effective_sample_count() const;
};

/// Trichotomy of a point w.r.t. the constraint set given activation_tol.
enum class RegionLabel { Interior, Boundary, Outside };

std::string to_string(RegionLabel label);

// ---------------------------------------------------------------------------
// Pointwise operations
// ---------------------------------------------------------------------------

/// f(x,u) with dimension and finiteness checks.
Vec eval_dynamics(const SystemModel& sys, const Vec& x, const Vec& u);

/// Interior / Boundary / Outside per the activation_tol band on max_i g_i.
RegionLabel classify_region(const ConstraintSet& cs, const Vec& x);

/// Indices i with |g_i(x)| < activation_tol. Precondition: x is Boundary.
std::vector<std::size_t> active_indices(const ConstraintSet& cs, const Vec& x);

/// L_f g_i(x,u) = Dg_i(x) . f(x,u)
double lie_derivative(const SystemModel& sys, const ConstraintSet& cs, std::size_t i,
                      const Vec& x, const Vec& u);

/// Growth bound K(alpha,t) = ((1+||x0||^alpha) e^{alpha C dt} - 1)^{1/alpha}.
/// Advisory divergence diagnostic only; the underlying growth condition is
/// sufficient, not necessary.
double gronwall_bound(double C, int alpha, double x0_norm, double dt);

}  // namespace barrierkit
