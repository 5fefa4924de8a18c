#include "barrierkit/tangency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace barrierkit {

namespace {

constexpr double kDegenerateValueTol = 1e-9;
constexpr double kDegenerateSpreadTol = 1e-3;
constexpr double kSwitchZeroTol = 1e-12;

// Deterministic 1-D golden-section minimisation of fn on [a, b].
template <typename F>
double golden_min(F&& fn, double a, double b, int iters) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = fn(c), fd = fn(d);
  for (int i = 0; i < iters; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = fn(d);
    }
  }
  return fc < fd ? c : d;
}

// Sampled minimisation of fn over the control set with local refinement.
template <typename F>
std::pair<Vec, bool> sampled_min(F&& fn, const ControlSet& ctrl) {
  const std::vector<Vec> samples = ctrl.sample_controls();
  double best = std::numeric_limits<double>::infinity();
  Vec u_best = ctrl.center();
  for (const Vec& u : samples) {
    const double v = fn(u);
    if (v < best) {
      best = v;
      u_best = u;
    }
  }
  bool degenerate = false;
  for (const Vec& u : samples)
    if (fn(u) <= best + kDegenerateValueTol && dist(u, u_best) > kDegenerateSpreadTol)
      degenerate = true;

  if (ctrl.dim == 1) {
    double lo = -1.0, hi = 1.0;
    if (ctrl.kind == ControlSet::Kind::Box) {
      lo = ctrl.lower[0];
      hi = ctrl.upper[0];
    }
    const double width = (hi - lo) / std::max(1, ctrl.effective_sample_count() - 1);
    const double a = std::max(lo, u_best[0] - width);
    const double b = std::min(hi, u_best[0] + width);
    const double u1 = golden_min([&](double u) { return fn(Vec{u}); }, a, b, 60);
    if (fn(Vec{u1}) < best) u_best = Vec{u1};
  } else {
    // Local pattern search with shrinking radius, projected into the set.
    double radius = 0.25;
    for (int it = 0; it < 20; ++it) {
      bool improved = false;
      for (std::size_t j = 0; j < ctrl.dim; ++j) {
        for (double dir : {1.0, -1.0}) {
          Vec u = u_best;
          u[j] += dir * radius;
          u = ctrl.project(u);
          const double v = fn(u);
          if (v < best - 1e-15) {
            best = v;
            u_best = u;
            improved = true;
          }
        }
      }
      if (!improved) radius *= 0.5;
    }
  }
  return {u_best, degenerate};
}

struct Lines {
  Vec a;  // intercepts per active face
  Vec b;  // slopes per active face (m = 1)
};

// L_f g_i(z, u) = a_i + b_i u for affine single-input systems.
Lines face_lines(const SystemModel& sys, const ConstraintSet& cs,
                 const std::vector<std::size_t>& active, const Vec& z) {
  const Vec f0 = sys.affine->drift(z);
  const Mat B = sys.affine->input_matrix(z);
  Lines ln;
  for (std::size_t idx : active) {
    const Vec grad = cs.gradient(idx, z);
    ln.a.push_back(dot(grad, f0));
    double slope = 0.0;
    for (std::size_t i = 0; i < sys.n; ++i) slope += grad[i] * B(i, 0);
    ln.b.push_back(slope);
  }
  return ln;
}

MinMaxLie min_max_lines(const Lines& ln, double lo, double hi) {
  auto env = [&](double u) {
    double v = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ln.a.size(); ++i) v = std::max(v, ln.a[i] + ln.b[i] * u);
    return v;
  };
  std::vector<double> candidates = {lo, hi};
  for (std::size_t i = 0; i < ln.a.size(); ++i)
    for (std::size_t j = i + 1; j < ln.a.size(); ++j) {
      const double db = ln.b[i] - ln.b[j];
      if (std::fabs(db) < 1e-15) continue;
      const double u = (ln.a[j] - ln.a[i]) / db;
      if (u >= lo && u <= hi) candidates.push_back(u);
    }
  double best = std::numeric_limits<double>::infinity();
  double u_best = lo;
  for (double u : candidates) {
    const double v = env(u);
    if (v < best) {
      best = v;
      u_best = u;
    }
  }
  // Flat-envelope detection: collect the minimising interval among candidates.
  double u_min = u_best, u_max = u_best;
  for (double u : candidates)
    if (env(u) <= best + kDegenerateValueTol) {
      u_min = std::min(u_min, u);
      u_max = std::max(u_max, u);
    }
  MinMaxLie out;
  out.value = best;
  out.degenerate = (u_max - u_min) > kDegenerateSpreadTol;
  out.u_star = {out.degenerate ? 0.5 * (u_min + u_max) : u_best};
  return out;
}

}  // namespace

double hamiltonian(const SystemModel& sys, const Vec& x, const Vec& lam, const Vec& u) {
  if (lam.size() != sys.n) throw ArgumentError("hamiltonian: adjoint has wrong length");
  const Vec f = eval_dynamics(sys, x, u);
  const double h = dot(lam, f);
  if (!std::isfinite(h)) throw NumericError("hamiltonian: non-finite value");
  return h;
}

HamiltonianMin minimize_hamiltonian(const SystemModel& sys, const ControlSet& ctrl, const Vec& x,
                                    const Vec& lam) {
  if (!all_finite(lam)) throw ArgumentError("minimize_hamiltonian: non-finite adjoint");
  HamiltonianMin out;
  if (sys.affine) {
    const Mat B = sys.affine->input_matrix(x);
    const Vec w = mat_tvec(B, lam);  // B^T lambda, the switching vector
    if (ctrl.kind == ControlSet::Kind::UnitBall) {
      const double wn = norm(w);
      if (wn > kSwitchZeroTol) {
        out.u_star = scaled(w, -1.0 / wn);
      } else {
        out.u_star = Vec(ctrl.dim, 0.0);
        out.degenerate = true;
      }
    } else {
      out.u_star.resize(ctrl.dim);
      for (std::size_t j = 0; j < ctrl.dim; ++j) {
        if (w[j] > kSwitchZeroTol) {
          out.u_star[j] = ctrl.lower[j];
        } else if (w[j] < -kSwitchZeroTol) {
          out.u_star[j] = ctrl.upper[j];
        } else {
          out.u_star[j] = 0.5 * (ctrl.lower[j] + ctrl.upper[j]);
          out.degenerate = true;
        }
      }
    }
    out.value = hamiltonian(sys, x, lam, out.u_star);
    return out;
  }
  auto fn = [&](const Vec& u) { return hamiltonian(sys, x, lam, u); };
  auto [u_star, degenerate] = sampled_min(fn, ctrl);
  out.u_star = std::move(u_star);
  out.degenerate = degenerate;
  out.value = fn(out.u_star);
  return out;
}

MinMaxLie min_max_lie(const SystemModel& sys, const ConstraintSet& cs, const ControlSet& ctrl,
                      const std::vector<std::size_t>& active, const Vec& z) {
  if (active.empty()) throw ArgumentError("min_max_lie: empty active set");
  if (sys.affine && sys.m == 1) {
    double lo = -1.0, hi = 1.0;
    if (ctrl.kind == ControlSet::Kind::Box) {
      lo = ctrl.lower[0];
      hi = ctrl.upper[0];
    }
    return min_max_lines(face_lines(sys, cs, active, z), lo, hi);
  }
  if (active.size() == 1 && sys.affine) {
    // Single face: the max disappears and this is a Hamiltonian minimisation
    // with lambda = Dg_i^T.
    const HamiltonianMin hm = minimize_hamiltonian(sys, ctrl, z, cs.gradient(active[0], z));
    return {hm.u_star, hm.value, hm.degenerate};
  }
  auto fn = [&](const Vec& u) {
    double v = -std::numeric_limits<double>::infinity();
    for (std::size_t idx : active) v = std::max(v, lie_derivative(sys, cs, idx, z, u));
    return v;
  };
  auto [u_star, degenerate] = sampled_min(fn, ctrl);
  return {u_star, fn(u_star), degenerate};
}

bool usable_part(const SystemModel& sys, const ConstraintSet& cs, const ControlSet& ctrl,
                 const Vec& z, double eps_use) {
  if (classify_region(cs, z) != RegionLabel::Boundary)
    throw ContractError("usable_part: point is not on the constraint boundary");
  const MinMaxLie mm = min_max_lie(sys, cs, ctrl, active_indices(cs, z), z);
  return mm.value <= eps_use;
}

// ---------------------------------------------------------------------------
// Face scan
// ---------------------------------------------------------------------------

namespace {

struct FaceScanner {
  const SystemModel& sys;
  const ConstraintSet& cs;
  const ControlSet& ctrl;
  std::size_t face;
  const FaceSearchOptions& opts;
  std::size_t dep = 0;  // dependent axis solved by Newton

  // Project a point onto {g_face = 0} along the dependent axis. Returns false
  // if Newton fails to converge inside the box.
  bool project(Vec& z) const {
    for (int it = 0; it < opts.newton_max_iter; ++it) {
      const double gv = cs.g(z)[face];
      if (std::fabs(gv) <= opts.newton_tol) return true;
      const Vec grad = cs.gradient(face, z);
      const double slope = grad[dep];
      if (std::fabs(slope) < 1e-14)
        throw SingularFaceError("face " + std::to_string(face + 1) +
                                    " gradient vanishes along the projection axis",
                                z);
      z[dep] -= gv / slope;
      if (!std::isfinite(z[dep])) return false;
    }
    return std::fabs(cs.g(z)[face]) <= opts.newton_tol;
  }

  bool inside_box(const Vec& z) const {
    const double margin = 1e-9;
    for (std::size_t j = 0; j < z.size(); ++j)
      if (z[j] < opts.lo[j] - margin || z[j] > opts.hi[j] + margin) return false;
    return true;
  }

  // Point on the face at the given free-axis parameters, or nullopt.
  std::optional<Vec> face_point(const Vec& free_values, const std::vector<std::size_t>& free_axes,
                                double dep_seed) const {
    Vec z(sys.n, 0.0);
    for (std::size_t k = 0; k < free_axes.size(); ++k) z[free_axes[k]] = free_values[k];
    z[dep] = dep_seed;
    if (!project(z)) return std::nullopt;
    if (!inside_box(z)) return std::nullopt;
    // Off the constraint set entirely (another g_i positive) does not count.
    for (std::size_t i = 0; i < cs.p; ++i)
      if (i != face && cs.g(z)[i] >= cs.activation_tol) return std::nullopt;
    return z;
  }

  double phi(const Vec& z) const {
    // The scanned face is active by construction; include any other face
    // within the activation band (corners).
    std::vector<std::size_t> active = {face};
    const Vec gv = cs.g(z);
    for (std::size_t i = 0; i < cs.p; ++i)
      if (i != face && std::fabs(gv[i]) < cs.activation_tol) active.push_back(i);
    std::sort(active.begin(), active.end());
    return min_max_lie(sys, cs, ctrl, active, z).value;
  }
};

}  // namespace

std::vector<TangencyPoint> find_tangency_points(const SystemModel& sys, const ConstraintSet& cs,
                                                const ControlSet& ctrl, std::size_t face,
                                                const FaceSearchOptions& opts) {
  if (face >= cs.p) throw ArgumentError("find_tangency_points: face index out of range");
  if (opts.lo.size() != sys.n || opts.hi.size() != sys.n)
    throw ArgumentError("find_tangency_points: bounding box must have state dimension");

  FaceScanner scan{sys, cs, ctrl, face, opts};

  // Pick the dependent axis from the gradient at the box centre.
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
  if (best < 1e-14)
    throw SingularFaceError("face " + std::to_string(face + 1) + " gradient vanishes at the box centre",
                            center);
  scan.dep = dep;

  std::vector<std::size_t> free_axes;
  for (std::size_t j = 0; j < sys.n; ++j)
    if (j != dep) free_axes.push_back(j);

  std::vector<TangencyPoint> found;
  auto accept = [&](const Vec& z) {
    for (const TangencyPoint& tp : found)
      if (dist(tp.z, z) <= opts.dedup_tol) return;
    TangencyPoint tp;
    tp.z = z;
    std::vector<std::size_t> active = {face};
    const Vec gv = cs.g(z);
    for (std::size_t i = 0; i < cs.p; ++i)
      if (i != face && std::fabs(gv[i]) < cs.activation_tol) active.push_back(i);
    std::sort(active.begin(), active.end());
    tp.active = active;
    const MinMaxLie mm = min_max_lie(sys, cs, ctrl, active, z);
    tp.u_star = mm.u_star;
    tp.degenerate_u = mm.degenerate;
    tp.residual = std::fabs(mm.value);
    // Tangential face: the active face whose Lie derivative sits at the max.
    tp.i_star = face;
    double best_lie = -std::numeric_limits<double>::infinity();
    for (std::size_t idx : active) {
      const double lv = lie_derivative(sys, cs, idx, z, tp.u_star);
      if (lv > best_lie + 1e-12) {
        best_lie = lv;
        tp.i_star = idx;
      } else if (std::fabs(lv - best_lie) <= 1e-12 && idx == face) {
        tp.i_star = face;
      }
    }
    found.push_back(std::move(tp));
  };

  // Scan lines along each free axis of the lattice (a single line when n = 2).
  const int grid = std::max(2, opts.grid);
  std::size_t n_lines = 1;
  for (std::size_t k = 1; k < free_axes.size(); ++k) n_lines *= static_cast<std::size_t>(grid);

  Vec free_values(free_axes.size(), 0.0);
  const double dep_seed = center[dep];

  for (std::size_t line = 0; line < n_lines; ++line) {
    // Fix all but the first free axis from the line index.
    std::size_t rem = line;
    for (std::size_t k = 1; k < free_axes.size(); ++k) {
      const std::size_t idx = rem % grid;
      rem /= grid;
      const std::size_t ax = free_axes[k];
      free_values[k] = opts.lo[ax] + (opts.hi[ax] - opts.lo[ax]) * idx / (grid - 1);
    }
    const std::size_t ax0 = free_axes.empty() ? dep : free_axes[0];

    double prev_phi = 0.0;
    bool prev_valid = false;
    Vec prev_free;
    std::vector<std::pair<double, double>> line_samples;  // (param, phi) for grazing check

    for (int i = 0; i < grid; ++i) {
      if (!free_axes.empty())
        free_values[0] = opts.lo[ax0] + (opts.hi[ax0] - opts.lo[ax0]) * i / (grid - 1);
      const auto z = scan.face_point(free_values, free_axes, dep_seed);
      if (!z) {
        prev_valid = false;
        continue;
      }
      const double ph = scan.phi(*z);
      line_samples.push_back({free_axes.empty() ? 0.0 : free_values[0], ph});
      if (std::fabs(ph) <= opts.phi_tol) {
        accept(*z);
      } else if (prev_valid && prev_phi * ph < 0.0) {
        // Bisect along the first free axis.
        Vec lo_free = prev_free, hi_free = free_values;
        double f_lo = prev_phi;
        Vec z_mid = *z;
        for (int it = 0; it < 200; ++it) {
          Vec mid = lo_free;
          for (std::size_t k = 0; k < mid.size(); ++k) mid[k] = 0.5 * (lo_free[k] + hi_free[k]);
          const auto zm = scan.face_point(mid, free_axes, dep_seed);
          if (!zm) break;
          const double fm = scan.phi(*zm);
          z_mid = *zm;
          if (std::fabs(fm) <= opts.phi_tol) break;
          if ((f_lo < 0) == (fm < 0)) {
            lo_free = mid;
            f_lo = fm;
          } else {
            hi_free = mid;
          }
        }
        if (std::fabs(scan.phi(z_mid)) <= opts.phi_tol) accept(z_mid);
      }
      prev_valid = true;
      prev_phi = ph;
      prev_free = free_values;
    }

    // Grazing minima: a positive local minimum of phi near zero that never
    // changes sign. Refine by golden section before giving up on it.
    if (!free_axes.empty() && line_samples.size() >= 3) {
      for (std::size_t i = 1; i + 1 < line_samples.size(); ++i) {
        const auto [t, ph] = line_samples[i];
        if (ph <= opts.phi_tol || ph > 1e-4) continue;
        if (line_samples[i - 1].second <= ph || line_samples[i + 1].second <= ph) continue;
        auto phi_at = [&](double param) {
          Vec fv = free_values;
          fv[0] = param;
          const auto z = scan.face_point(fv, free_axes, dep_seed);
          return z ? scan.phi(*z) : std::numeric_limits<double>::infinity();
        };
        const double t_ref =
            golden_min(phi_at, line_samples[i - 1].first, line_samples[i + 1].first, 80);
        Vec fv = free_values;
        fv[0] = t_ref;
        const auto z = scan.face_point(fv, free_axes, dep_seed);
        if (z && std::fabs(scan.phi(*z)) <= opts.phi_tol) accept(*z);
      }
    }
  }

  std::sort(found.begin(), found.end(), [](const TangencyPoint& a, const TangencyPoint& b) {
    return std::lexicographical_compare(a.z.begin(), a.z.end(), b.z.begin(), b.z.end());
  });
  return found;
}

}  // namespace barrierkit
