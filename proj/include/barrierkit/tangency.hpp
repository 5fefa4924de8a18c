#pragma once

#include <cstddef>
#include <vector>

#include "barrierkit/errors.hpp"
#include "barrierkit/model.hpp"

namespace barrierkit {

/// Result of minimising H(x, lambda, .) over the control set.
struct HamiltonianMin {
  Vec u_star;
  double value = 0.0;
  bool degenerate = false;  // minimiser flat / non-unique
};

/// Result of minimising u -> max_{i in active} L_f g_i(z,u).
struct MinMaxLie {
  Vec u_star;
  double value = 0.0;
  bool degenerate = false;
};

/// A point z on the constraint boundary where every control pushes outward
/// and some control is exactly tangent to the i_star face. These are the
/// final conditions for backward barrier integration.
struct TangencyPoint {
  Vec z;
  std::vector<std::size_t> active;
  std::size_t i_star = 0;
  Vec u_star;
  bool degenerate_u = false;
  double residual = 0.0;  // |min_u max_i L_f g_i(z,u)|
};

struct FaceSearchOptions {
  Vec lo, hi;          // bounding box for the face scan (length n)
  int grid = 200;      // nodes per free coordinate
  double newton_tol = 1e-12;
  int newton_max_iter = 50;
  double phi_tol = 1e-10;   // |min max L_f g| at accepted points
  double dedup_tol = 1e-6;
};

/// The face gradient vanished at a projection seed; carries the point.
class SingularFaceError : public Error {
public:
  SingularFaceError(const std::string& msg, Vec point)
      : Error(msg), point_(std::move(point)) {}
  const Vec& point() const { return point_; }

private:
  Vec point_;
};

/// H(x, lambda, u) = lambda . f(x,u)
double hamiltonian(const SystemModel& sys, const Vec& x, const Vec& lam, const Vec& u);

/// Minimise H over the control set. Closed form for affine systems (sign rule
/// on B^T lambda); deterministic sampling plus local refinement otherwise.
/// Degenerate minimisers tie-break to the set centre.
HamiltonianMin minimize_hamiltonian(const SystemModel& sys, const ControlSet& ctrl, const Vec& x,
                                    const Vec& lam);

/// min over u of max over the active faces of L_f g_i(z,u). Exact line
/// envelope for affine m=1, Hamiltonian reduction for a single face, sampled
/// enumeration with refinement otherwise.
MinMaxLie min_max_lie(const SystemModel& sys, const ConstraintSet& cs, const ControlSet& ctrl,
                      const std::vector<std::size_t>& active, const Vec& z);

/// Is z on the usable part of the constraint boundary (some control not
/// pointing outward)? Precondition: z is Boundary.
bool usable_part(const SystemModel& sys, const ConstraintSet& cs, const ControlSet& ctrl,
                 const Vec& z, double eps_use = 1e-9);

/// Scan one face for ultimate-tangentiality points: project a grid onto
/// {g_face = 0} by 1-D Newton, evaluate phi = min_u max_i L_f g_i, and bisect
/// every sign change down to |phi| <= phi_tol. Returns deduplicated points;
/// an empty result is not an error.
std::vector<TangencyPoint> find_tangency_points(const SystemModel& sys, const ConstraintSet& cs,
                                                const ControlSet& ctrl, std::size_t face,
                                                const FaceSearchOptions& opts);

}  // namespace barrierkit
