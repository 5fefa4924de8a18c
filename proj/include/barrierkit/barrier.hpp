#pragma once

#include <optional>
#include <string>
#include <vector>

#include "barrierkit/model.hpp"
#include "barrierkit/ode.hpp"
#include "barrierkit/tangency.hpp"

namespace barrierkit {

enum class ArcTermination {
  LeftConstraintSet,  // some g_i crossed +activation_tol from below
  ReachedHorizon,     // |t| exceeded t_max
  HamiltonianDrift,   // |H| left its zero band (diagnostic failure)
  SelfIntersection,   // returned to an earlier node with similar adjoint
};

std::string to_string(ArcTermination t);

struct BarrierOptions {
  IntegratorOptions ode;
  double t_max = 50.0;
  double loop_tol = 1e-6;
  double hamiltonian_tol = 1e-5;
  int discard_steps = 10;  // probe window for branch candidates
  std::optional<Vec> initial_control;  // override the endpoint control (branch choice)
  // Advisory growth diagnostic; enabled when C > 0.
  double gronwall_C = 0.0;
  int gronwall_alpha = 1;
};

/// One backward-integrated solution of the Hamiltonian system, ending (in
/// forward time) at its tangency point. The trajectory carries the augmented
/// state (x, lambda) over times in [-T, 0], stored in backward order
/// (t = 0 first). controls[k] is the control in effect at node k.
struct BarrierArc {
  std::size_t n = 0;  // state dimension (trajectory states have length 2n)
  Trajectory traj;
  std::vector<Vec> controls;
  TangencyPoint endpoint;
  double t_bar = 0.0;
  ArcTermination termination = ArcTermination::ReachedHorizon;
  std::vector<double> switch_times;  // negative, most recent first
  std::string diagnostic;
  bool gronwall_exceeded = false;
  bool bang_mode = true;  // piecewise-constant control (affine m=1 / box)

  Vec state_at(std::size_t node) const {
    return Vec(traj.states[node].begin(), traj.states[node].begin() + n);
  }
  Vec adjoint_at(std::size_t node) const {
    return Vec(traj.states[node].begin() + n, traj.states[node].end());
  }
};

/// Control in effect at backward time t (piecewise-constant between recorded
/// switch times for bang arcs; nearest node otherwise).
Vec control_at(const BarrierArc& arc, double t);

/// Integrate the Hamiltonian system backward from the tangency point's final
/// conditions (z, Dg_{i*}(z)^T, u*). Switching-function zero crossings restart
/// the field with the re-resolved control; constraint exits, the horizon,
/// Hamiltonian drift and self-intersection terminate the arc.
BarrierArc integrate_barrier_arc(const SystemModel& sys, const ConstraintSet& cs,
                                 const ControlSet& ctrl, const TangencyPoint& tp,
                                 const BarrierOptions& opts = {});

/// Branch enumeration at a degenerate endpoint: launch every sign choice of
/// the zero switching components, discard candidates that exit the constraint
/// set within discard_steps or immediately violate Hamiltonian minimality,
/// and return the surviving arcs.
std::vector<BarrierArc> integrate_barrier_arcs(const SystemModel& sys, const ConstraintSet& cs,
                                               const ControlSet& ctrl, const TangencyPoint& tp,
                                               const BarrierOptions& opts = {});

/// max |H(x, lambda, u)| over stored nodes, excluding nodes within event_tol
/// of a switching instant. A single-node arc reduces to the tangentiality
/// residual.
double hamiltonian_residual(const SystemModel& sys, const BarrierArc& arc);

// ---------------------------------------------------------------------------
// Boundary assembly
// ---------------------------------------------------------------------------

struct UsableSegment {
  std::size_t face = 0;
  std::vector<Vec> points;
};

struct Corner {
  Vec point;
  std::size_t arc_a = 0, arc_b = 0;  // indices into the arcs list
  double dist = 0.0;                 // residual separation at the crossing
};

struct AdmissibleBoundary {
  std::vector<BarrierArc> arcs;
  std::vector<std::vector<Vec>> trimmed;  // per-arc kept polyline (state part)
  std::vector<std::size_t> kept_nodes;    // per-arc count of leading nodes on the kept piece
  std::vector<UsableSegment> usable_segments;
  std::vector<Corner> corners;
  std::string note;
};

struct BoundaryOptions {
  Vec lo, hi;          // sampling window for the constraint faces
  int density = 400;   // samples per face
  double corner_tol = 1e-6;
  bool trim = true;
};

/// Combine barrier arcs with the usable part of the constraint boundary:
/// sample each face, label usable stretches, find pairwise arc intersections
/// (corners), and trim arcs past corners when both bound the same region
/// (n = 2 only; higher dimensions return untrimmed arcs with a note).
AdmissibleBoundary assemble_boundary(const SystemModel& sys, const ConstraintSet& cs,
                                     const ControlSet& ctrl, std::vector<BarrierArc> arcs,
                                     const BoundaryOptions& opts);

}  // namespace barrierkit
