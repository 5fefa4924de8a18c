#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "barrierkit/barrier.hpp"
#include "barrierkit/model.hpp"
#include "barrierkit/ode.hpp"

namespace barrierkit {

// ---------------------------------------------------------------------------
// Control signals
// ---------------------------------------------------------------------------

/// Piecewise-constant open-loop control: a constant, an explicit
/// switch-time/value list, or a seeded random bang-bang over the extremes.
struct ControlSignal {
  enum class Kind { Constant, PiecewiseConstant, BangBang };
  Kind kind = Kind::Constant;
  Vec constant_value;
  std::vector<double> switch_times;  // strictly increasing
  std::vector<Vec> values;           // switch_times.size() + 1 entries
  int switch_count = 0;              // BangBang bookkeeping
  std::uint64_t seed = 0;
  double horizon = 0.0;  // span the random switches were drawn over

  static ControlSignal constant(Vec u);
  static ControlSignal piecewise(std::vector<double> times, std::vector<Vec> vals);
  /// Deterministic from (seed, switch_count, horizon): sorted uniform switch
  /// times, extreme values with no immediate repeats.
  static ControlSignal bang_bang(const ControlSet& ctrl, int switch_count, std::uint64_t seed,
                                 double horizon);

  const Vec& at(double t) const;
  std::string describe() const;
};

// ---------------------------------------------------------------------------
// Forward simulation
// ---------------------------------------------------------------------------

struct SimOptions {
  IntegratorOptions ode;  // step 1e-2 by default here; the oracle favours volume
  double stop_above = std::numeric_limits<double>::infinity();  // early stop on max_i g_i

  SimOptions() { ode.step = 1e-2; }
};

struct SimResult {
  Trajectory traj;
  double sup_max_g = -std::numeric_limits<double>::infinity();
  std::optional<double> first_violation;
  bool stopped_early = false;
  std::vector<double> node_gmax;  // max_i g_i per node, aligned with traj

  /// Sup of max_i g_i over nodes with t <= T.
  double sup_until(double T) const;
};

/// Integrate x' = f(x, sig(t)) over [0, T] segment-by-segment (control
/// discontinuities land on segment boundaries), recording g_i zero crossings
/// as events and the running sup of max_i g_i.
SimResult simulate_forward(const SystemModel& sys, const ConstraintSet& cs, const Vec& x0,
                           const ControlSignal& sig, double T, const SimOptions& opts = {});

// ---------------------------------------------------------------------------
// Admissibility classification
// ---------------------------------------------------------------------------

enum class Admissibility { Admissible, Inadmissible, Unknown };
std::string to_string(Admissibility a);

struct AdmissibilityVerdict {
  Admissibility label = Admissibility::Unknown;
  std::optional<ControlSignal> witness;  // present iff Admissible
  double min_sup_estimate = std::numeric_limits<double>::infinity();
  double horizon = 0.0;
  int samples = 0;  // signals actually simulated
};

/// Options for the deterministic lookahead rollout used as one of the
/// candidate witnesses (open-loop random search alone cannot balance systems
/// whose constraints have relative degree two).
struct GuidedOptions {
  bool enabled = true;
  double lookahead = 4.0;
  double replan_dt = 0.25;
  double coarse_step = 0.04;
  int values_per_axis = 5;
  bool include_equilibrium_control = true;
};

struct ClassifyOptions {
  double T = 20.0;
  int n_signals = 200;
  int switch_count = 8;
  std::uint64_t seed = 0;
  double confident_margin = 0.05;
  double step = 1e-2;       // integration step for candidate evaluation
  // Early-stop threshold during candidate evaluation. Truncating a signal
  // whose running sup already exceeds this can only underestimate min_sup,
  // never flip a label (witness and margin decisions are monotone in it).
  double stop_above = 0.1;
  GuidedOptions guided;
};

/// Deterministic model-based rollout: at each replan instant pick the
/// constant control whose short constant-control lookahead survives longest
/// (ties: smallest overshoot, then smallest margin, then smallest control).
/// Returned as an ordinary piecewise-constant signal; it is judged by replay
/// exactly like every other candidate.
ControlSignal safety_rollout(const SystemModel& sys, const ConstraintSet& cs,
                             const ControlSet& ctrl, const Vec& x0, double T,
                             const GuidedOptions& opts = {});

/// One-sided verdict per the min-sup characterisation: Admissible carries a
/// replayable witness (proof up to horizon T); Inadmissible means every
/// sampled signal exceeded confident_margin; otherwise Unknown.
AdmissibilityVerdict classify_admissible(const SystemModel& sys, const ConstraintSet& cs,
                                         const ControlSet& ctrl, const Vec& x0,
                                         const ClassifyOptions& opts = {});

/// Same search evaluated at several horizons over one shared signal set, so
/// the finite-horizon nesting holds cellwise by construction.
std::vector<AdmissibilityVerdict> classify_ladder(const SystemModel& sys, const ConstraintSet& cs,
                                                  const ControlSet& ctrl, const Vec& x0,
                                                  const std::vector<double>& horizons,
                                                  const ClassifyOptions& opts = {});

// ---------------------------------------------------------------------------
// Grid classification
// ---------------------------------------------------------------------------

struct GridSpec {
  Vec lo, hi;
  std::vector<std::size_t> resolution;  // cells per axis
};

struct GridResult {
  GridSpec spec;
  std::vector<double> horizons;
  std::vector<Vec> centers;  // row-major, first axis fastest
  std::vector<std::vector<Admissibility>> labels;  // [horizon][cell]
  std::vector<std::vector<double>> min_sup;        // [horizon][cell]

  std::size_t cell_count() const { return centers.size(); }
};

/// classify_admissible per cell centre, parallel over cells with a
/// deterministic per-cell seed (seed xor cell index), optionally at several
/// horizons (T-laddering).
GridResult grid_classify(const SystemModel& sys, const ConstraintSet& cs, const ControlSet& ctrl,
                         const GridSpec& spec, const ClassifyOptions& opts = {},
                         std::vector<double> horizons = {});

/// Connected components (4-connectivity in the first two axes) of the cells
/// with the given label at the given horizon index.
std::size_t count_components(const GridResult& grid, Admissibility which,
                             std::size_t horizon_index = 0);

/// Cells labelled Admissible in `inner` but not in `outer` (same spec
/// required). Used for containment checks between systems.
std::size_t containment_violations(const GridResult& inner, const GridResult& outer,
                                   std::size_t horizon_index = 0);

// ---------------------------------------------------------------------------
// Semipermeability report
// ---------------------------------------------------------------------------

struct SemiOptions {
  double delta = 1e-3;
  int points_per_arc = 20;
  int n_signals = 50;
  double T = 20.0;
  std::uint64_t seed = 0;
  ClassifyOptions classify;  // T/n_signals/seed overridden per the above
};

struct ArcSemiReport {
  std::size_t arc_index = 0;
  int outward_points = 0;
  int outward_violations = 0;  // outward displacement admitted a witness
  int inward_points = 0;
  int inward_witnesses = 0;
};

struct SemiReport {
  std::vector<ArcSemiReport> arcs;
  int total_outward_violations = 0;
  double inward_witness_fraction = 1.0;
};

/// Displace arc samples by +-delta along the unit adjoint (outward normal).
/// Outward points must not admit any admissibility witness (nor a strictly
/// negative min-sup); inward points should.
SemiReport semipermeability_report(const SystemModel& sys, const ConstraintSet& cs,
                                   const ControlSet& ctrl, const AdmissibleBoundary& boundary,
                                   const SemiOptions& opts = {});

}  // namespace barrierkit
