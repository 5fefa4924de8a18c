#include "barrierkit/model.hpp"

#include <algorithm>
#include <cmath>

#include "barrierkit/errors.hpp"

namespace barrierkit {

ControlSet ControlSet::unit_ball(std::size_t m, int sample_count) {
  ControlSet c;
  c.kind = Kind::UnitBall;
  c.dim = m;
  c.sample_count = sample_count;
  return c;
}

ControlSet ControlSet::box(Vec lower, Vec upper, int sample_count) {
  if (lower.size() != upper.size() || lower.empty())
    throw ArgumentError("control box bounds must be nonempty and equal length");
  for (std::size_t j = 0; j < lower.size(); ++j)
    if (!(lower[j] <= upper[j]))
      throw ArgumentError("control box has lower > upper in component " + std::to_string(j + 1));
  ControlSet c;
  c.kind = Kind::Box;
  c.dim = lower.size();
  c.lower = std::move(lower);
  c.upper = std::move(upper);
  c.sample_count = sample_count;
  return c;
}

bool ControlSet::contains(const Vec& u, double tol) const {
  if (u.size() != dim) return false;
  if (kind == Kind::UnitBall) return norm(u) <= 1.0 + tol;
  for (std::size_t j = 0; j < dim; ++j)
    if (u[j] < lower[j] - tol || u[j] > upper[j] + tol) return false;
  return true;
}

Vec ControlSet::center() const {
  Vec c(dim, 0.0);
  if (kind == Kind::Box)
    for (std::size_t j = 0; j < dim; ++j) c[j] = 0.5 * (lower[j] + upper[j]);
  return c;
}

Vec ControlSet::project(const Vec& u) const {
  Vec r = u;
  if (kind == Kind::UnitBall) {
    const double nn = norm(r);
    if (nn > 1.0)
      for (double& v : r) v /= nn;
  } else {
    for (std::size_t j = 0; j < dim; ++j) r[j] = std::clamp(r[j], lower[j], upper[j]);
  }
  return r;
}

std::vector<Vec> ControlSet::extreme_controls() const {
  std::vector<Vec> out;
  if (kind == Kind::UnitBall) {
    for (std::size_t j = 0; j < dim; ++j) {
      Vec e(dim, 0.0);
      e[j] = 1.0;
      out.push_back(e);
      e[j] = -1.0;
      out.push_back(e);
    }
  } else {
    // Box vertices; cap the enumeration for large m.
    const std::size_t cap = 64;
    const std::size_t total = dim >= 7 ? cap : (std::size_t{1} << dim);
    for (std::size_t mask = 0; mask < std::min(total, cap); ++mask) {
      Vec v(dim);
      for (std::size_t j = 0; j < dim; ++j) v[j] = (mask >> j) & 1 ? upper[j] : lower[j];
      out.push_back(v);
    }
  }
  return out;
}

int ControlSet::effective_sample_count() const {
  if (sample_count > 0) return sample_count;
  return dim == 1 ? 64 : 256;
}

std::vector<Vec> ControlSet::sample_controls() const {
  const int count = effective_sample_count();
  std::vector<Vec> out;
  if (dim == 1) {
    double lo = -1.0, hi = 1.0;
    if (kind == Kind::Box) {
      lo = lower[0];
      hi = upper[0];
    }
    out.push_back({lo});
    out.push_back({hi});
    for (int k = 1; k + 1 < count; ++k)
      out.push_back({lo + (hi - lo) * static_cast<double>(k) / (count - 1)});
    return out;
  }
  if (kind == Kind::UnitBall) {
    // Fibonacci sphere on the surface plus a couple of interior shells and
    // the centre; linear Hamiltonians minimise on the surface, general ones
    // may not.
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    out.push_back(Vec(dim, 0.0));
    const int per_shell = std::max(8, count / 3);
    for (double radius : {1.0, 0.5}) {
      for (int k = 0; k < per_shell; ++k) {
        Vec u(dim, 0.0);
        if (dim == 2) {
          const double theta = 2.0 * M_PI * k / golden;
          u[0] = radius * std::cos(theta);
          u[1] = radius * std::sin(theta);
        } else {
          // Spherical Fibonacci in the first three axes, zero elsewhere;
          // adequate as a starting grid before local refinement.
          const double z = 1.0 - 2.0 * (k + 0.5) / per_shell;
          const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
          const double theta = 2.0 * M_PI * k / golden;
          u[0] = radius * r * std::cos(theta);
          u[1] = radius * r * std::sin(theta);
          u[2] = radius * z;
        }
        out.push_back(u);
      }
    }
    return out;
  }
  // Box lattice: vertices plus a golden-ratio low-discrepancy fill.
  out = extreme_controls();
  Vec phi(dim);
  double g = 1.32471795724474602596;  // plastic constant
  for (std::size_t j = 0; j < dim; ++j) phi[j] = std::pow(1.0 / g, static_cast<double>(j + 1));
  for (int k = 0; static_cast<int>(out.size()) < count; ++k) {
    Vec u(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      double t = std::fmod(0.5 + phi[j] * (k + 1), 1.0);
      u[j] = lower[j] + t * (upper[j] - lower[j]);
    }
    out.push_back(u);
  }
  return out;
}

std::string to_string(RegionLabel label) {
  switch (label) {
    case RegionLabel::Interior: return "interior";
    case RegionLabel::Boundary: return "boundary";
    case RegionLabel::Outside: return "outside";
  }
  return "?";
}

Vec eval_dynamics(const SystemModel& sys, const Vec& x, const Vec& u) {
  if (x.size() != sys.n)
    throw ArgumentError("eval_dynamics: state has length " + std::to_string(x.size()) +
                        ", expected " + std::to_string(sys.n));
  if (u.size() != sys.m)
    throw ArgumentError("eval_dynamics: control has length " + std::to_string(u.size()) +
                        ", expected " + std::to_string(sys.m));
  Vec f = sys.dynamics(x, u);
  if (f.size() != sys.n)
    throw NumericError("eval_dynamics: dynamics returned wrong length");
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!std::isfinite(f[i]))
      throw NumericError("eval_dynamics: non-finite value in component " + std::to_string(i + 1));
  return f;
}

RegionLabel classify_region(const ConstraintSet& cs, const Vec& x) {
  const Vec gv = cs.g(x);
  double gmax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < gv.size(); ++i) {
    if (!std::isfinite(gv[i]))
      throw NumericError("classify_region: g_" + std::to_string(i + 1) + " is non-finite");
    gmax = std::max(gmax, gv[i]);
  }
  if (gmax <= -cs.activation_tol) return RegionLabel::Interior;
  if (gmax >= cs.activation_tol) return RegionLabel::Outside;
  return RegionLabel::Boundary;
}

std::vector<std::size_t> active_indices(const ConstraintSet& cs, const Vec& x) {
  if (classify_region(cs, x) != RegionLabel::Boundary)
    throw ContractError("active_indices: point is not on the constraint boundary");
  const Vec gv = cs.g(x);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < gv.size(); ++i)
    if (std::fabs(gv[i]) < cs.activation_tol) idx.push_back(i);
  return idx;
}

double lie_derivative(const SystemModel& sys, const ConstraintSet& cs, std::size_t i,
                      const Vec& x, const Vec& u) {
  if (i >= cs.p) throw ArgumentError("lie_derivative: constraint index out of range");
  const Vec grad = cs.gradient(i, x);
  const Vec f = eval_dynamics(sys, x, u);
  const double v = dot(grad, f);
  if (!std::isfinite(v)) throw NumericError("lie_derivative: non-finite result");
  return v;
}

double gronwall_bound(double C, int alpha, double x0_norm, double dt) {
  if (!(C > 0.0)) throw ArgumentError("gronwall_bound: C must be positive");
  if (alpha != 1 && alpha != 2) throw ArgumentError("gronwall_bound: alpha must be 1 or 2");
  if (dt < 0.0) throw ArgumentError("gronwall_bound: dt must be nonnegative");
  const double a = static_cast<double>(alpha);
  const double v = (1.0 + std::pow(x0_norm, a)) * std::exp(a * C * dt) - 1.0;
  return std::pow(v, 1.0 / a);
}

}  // namespace barrierkit
