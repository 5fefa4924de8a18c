#include <doctest.h>

#include <cmath>
#include <random>

#include "barrierkit/barrier.hpp"
#include "barrierkit/fixtures.hpp"
#include "barrierkit/oracle.hpp"
#include "support/academic_exact.hpp"
#include "support/variational.hpp"

using namespace barrierkit;
using test_support::replay_flow;
using test_support::transition_to_zero;

namespace {

FaceSearchOptions fixture_search(const std::string& name) {
  const Fixture& fx = fixture(name);
  FaceSearchOptions opts;
  opts.lo = fx.bbox_lo;
  opts.hi = fx.bbox_hi;
  return opts;
}

struct FixtureArcs {
  CompiledSystem sys;
  std::vector<BarrierArc> arcs;
};

FixtureArcs compute_arcs(const std::string& name, BarrierOptions opts = {}) {
  FixtureArcs out{load_fixture(name), {}};
  const FaceSearchOptions fopts = fixture_search(name);
  for (std::size_t face = 0; face < out.sys.constraints.p; ++face) {
    for (const TangencyPoint& tp :
         find_tangency_points(out.sys.model, out.sys.constraints, out.sys.control, face, fopts)) {
      auto arcs = integrate_barrier_arcs(out.sys.model, out.sys.constraints, out.sys.control, tp,
                                         opts);
      for (auto& arc : arcs) out.arcs.push_back(std::move(arc));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("academic arcs reproduce the closed-form branches") {
  const FixtureArcs fa = compute_arcs("academic");
  REQUIRE(fa.arcs.size() == 4);
  const double a_lower = -1.0, a_upper = 3.0;

  for (const BarrierArc& arc : fa.arcs) {
    CHECK(arc.termination == ArcTermination::LeftConstraintSet);
    const double z2 = arc.endpoint.z[1];
    const bool lower_face = arc.endpoint.i_star == 0;
    // Branch formula as a function of x2, valid until the first switch.
    auto branch = [&](double x2) {
      if (lower_face) return z2 > 0 ? academic_exact::branch_lower_pos(a_lower, x2)
                                    : academic_exact::branch_lower_neg(a_lower, x2);
      return z2 > 0 ? academic_exact::branch_upper_from_plus1(a_upper, x2)
                    : academic_exact::branch_upper_from_minus1(a_upper, x2);
    };
    const double valid_from = arc.switch_times.empty() ? -1e9 : arc.switch_times.front();
    double sup_err = 0.0;
    std::size_t compared = 0;
    for (std::size_t k = 0; k < arc.traj.size(); ++k) {
      if (arc.traj.times[k] < valid_from) break;
      const Vec x = arc.state_at(k);
      sup_err = std::max(sup_err, std::fabs(x[0] - branch(x[1])));
      ++compared;
    }
    CHECK(compared > 500);
    CHECK(sup_err <= 1e-4);

    if (lower_face) {
      // lambda_2(t) = sign * t (t - 2 sign^2) with t_bar = 0 (closed form)
      const double sgn = z2 > 0 ? 1.0 : -1.0;
      double lam_err = 0.0;
      for (std::size_t k = 0; k < arc.traj.size(); ++k) {
        const double t = arc.traj.times[k];
        lam_err = std::max(lam_err, std::fabs(arc.adjoint_at(k)[1] - sgn * t * (t - 2.0)));
      }
      CHECK(lam_err <= 1e-6);
      CHECK(arc.switch_times.empty());  // no switching on the lower-face arcs
    } else {
      REQUIRE_FALSE(arc.switch_times.empty());
      CHECK(arc.switch_times.front() == doctest::Approx(-2.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("barrier arc invariants hold on every fixture arc") {
  for (const std::string name :
       {"academic", "linear_spring", "nonlinear_spring", "nonlinear_spring_soft"}) {
    const FixtureArcs fa = compute_arcs(name);
    REQUIRE_FALSE(fa.arcs.empty());
    for (const BarrierArc& arc : fa.arcs) {
      // final condition: lambda(t_bar) = Dg_{i*}(z)^T exactly as constructed
      const Vec lam0 = arc.adjoint_at(0);
      const Vec dg = fa.sys.constraints.gradient(arc.endpoint.i_star, arc.endpoint.z);
      for (std::size_t i = 0; i < lam0.size(); ++i) CHECK(std::fabs(lam0[i] - dg[i]) <= 1e-10);
      // H = 0 along the arc
      CHECK(hamiltonian_residual(fa.sys.model, arc) <= 1e-6);
      // stays in the constraint set, adjoint never vanishes; the final node of
      // an exiting arc sits at the localised g = +activation_tol crossing, so
      // it gets the event-localisation slop on top
      for (std::size_t k = 0; k < arc.traj.size(); ++k) {
        const bool exit_node =
            k + 1 == arc.traj.size() && arc.termination == ArcTermination::LeftConstraintSet;
        const double slack = exit_node ? 1e-8 : 1e-12;
        const Vec gv = fa.sys.constraints.g(arc.state_at(k));
        for (double v : gv) CHECK(v <= fa.sys.constraints.activation_tol + slack);
        CHECK(norm(arc.adjoint_at(k)) > 0.0);
      }
    }
  }
}

TEST_CASE("linear spring adjoint matches the closed form across the switch") {
  const FixtureArcs fa = compute_arcs("linear_spring");
  REQUIRE(fa.arcs.size() == 1);
  const BarrierArc& arc = fa.arcs[0];
  CHECK(arc.adjoint_at(0) == Vec{1.0, 0.0});
  // backward time tau: lambda = e^{-tau} (cos tau + sin tau, sin tau)
  double worst = 0.0;
  for (std::size_t k = 0; k < arc.traj.size(); ++k) {
    const double tau = -arc.traj.times[k];
    const Vec lam = arc.adjoint_at(k);
    worst = std::max(worst,
                     std::fabs(lam[0] - std::exp(-tau) * (std::cos(tau) + std::sin(tau))));
    worst = std::max(worst, std::fabs(lam[1] - std::exp(-tau) * std::sin(tau)));
  }
  CHECK(worst <= 1e-9);
  // the switching function lambda_2 crosses zero at tau = pi
  REQUIRE_FALSE(arc.switch_times.empty());
  CHECK(arc.switch_times.front() == doctest::Approx(-M_PI).epsilon(1e-8));
  // u = -sgn(lambda_2) on each side of the switch
  CHECK(arc.controls.front()[0] == doctest::Approx(-1.0));
  CHECK(control_at(arc, -3.5)[0] == doctest::Approx(1.0));
}

TEST_CASE("RKF45 and RK4 produce the same spring arc") {
  auto fx = load_fixture("linear_spring");
  const auto tps = find_tangency_points(fx.model, fx.constraints, fx.control, 0,
                                        fixture_search("linear_spring"));
  REQUIRE(tps.size() == 1);
  const BarrierArc rk4 =
      integrate_barrier_arcs(fx.model, fx.constraints, fx.control, tps[0], {})[0];

  BarrierOptions rkf;
  rkf.ode.scheme = IntegratorOptions::Scheme::RKF45;
  rkf.ode.rel_tol = 1e-10;
  rkf.ode.abs_tol = 1e-12;
  const BarrierArc adaptive =
      integrate_barrier_arcs(fx.model, fx.constraints, fx.control, tps[0], rkf)[0];

  CHECK(std::fabs(rk4.switch_times.front() - adaptive.switch_times.front()) <= 1e-8);
  const double t_lo = std::max(rk4.traj.times.back(), adaptive.traj.times.back());
  double worst = 0.0;
  for (std::size_t k = 0; k < adaptive.traj.size(); ++k) {
    const double t = adaptive.traj.times[k];
    if (t < t_lo) break;
    const Vec ya = dense_eval(rk4.traj, t);
    for (std::size_t i = 0; i < 2; ++i)
      worst = std::max(worst, std::fabs(ya[i] - adaptive.traj.states[k][i]));
  }
  CHECK(worst <= 1e-6);

  // At the spec-default adaptive tolerances the agreement degrades with the
  // backward instability but stays within an order of magnitude.
  BarrierOptions loose;
  loose.ode.scheme = IntegratorOptions::Scheme::RKF45;
  const BarrierArc coarse =
      integrate_barrier_arcs(fx.model, fx.constraints, fx.control, tps[0], loose)[0];
  double worst_coarse = 0.0;
  const double t_lo2 = std::max(rk4.traj.times.back(), coarse.traj.times.back());
  for (std::size_t k = 0; k < coarse.traj.size(); ++k) {
    const double t = coarse.traj.times[k];
    if (t < t_lo2) break;
    const Vec ya = dense_eval(rk4.traj, t);
    for (std::size_t i = 0; i < 2; ++i)
      worst_coarse = std::max(worst_coarse, std::fabs(ya[i] - coarse.traj.states[k][i]));
  }
  CHECK(worst_coarse <= 1e-5);
}

TEST_CASE("hamiltonian residual detects adjoint corruption") {
  const FixtureArcs fa = compute_arcs("academic");
  BarrierArc arc = fa.arcs[0];
  CHECK(hamiltonian_residual(fa.sys.model, arc) <= 1e-6);
  for (auto& y : arc.traj.states) y[fa.sys.model.n + 1] += 1e-3;  // perturb lambda_2
  CHECK(hamiltonian_residual(fa.sys.model, arc) > 1e-4);
}

TEST_CASE("single-node arc reduces to the tangentiality residual") {
  auto academic = load_fixture("academic");
  const auto pts = find_tangency_points(academic.model, academic.constraints, academic.control, 1,
                                        fixture_search("academic"));
  REQUIRE_FALSE(pts.empty());
  const TangencyPoint& tp = pts[0];
  BarrierArc arc;
  arc.n = 2;
  arc.endpoint = tp;
  arc.traj.times = {0.0};
  Vec y(4);
  std::copy(tp.z.begin(), tp.z.end(), y.begin());
  const Vec dg = academic.constraints.gradient(tp.i_star, tp.z);
  std::copy(dg.begin(), dg.end(), y.begin() + 2);
  arc.traj.states = {y};
  arc.traj.derivs = {Vec(4, 0.0)};
  arc.controls = {tp.u_star};
  CHECK(hamiltonian_residual(academic.model, arc) <= 1e-6);
}

TEST_CASE("backward-forward consistency") {
  for (const std::string name : {"academic", "linear_spring"}) {
    const FixtureArcs fa = compute_arcs(name);
    for (const BarrierArc& arc : fa.arcs) {
      const std::size_t mid = arc.traj.size() / 2;
      const Vec x_back = replay_flow(fa.sys.model, arc, arc.state_at(mid), arc.traj.times[mid]);
      CHECK(dist(x_back, arc.endpoint.z) <= 1e-6);
    }
  }
}

TEST_CASE("adjoint transport along the variational equation") {
  const FixtureArcs fa = compute_arcs("academic");
  // the lower-face arc from (-1, 1) has no switches: smooth variational flow
  const BarrierArc* arc = nullptr;
  for (const BarrierArc& a : fa.arcs)
    if (a.endpoint.i_star == 0 && a.endpoint.z[1] > 0) arc = &a;
  REQUIRE(arc != nullptr);

  const Vec lam_final = arc->adjoint_at(0);
  for (int pick = 1; pick <= 10; ++pick) {
    const std::size_t k = pick * (arc->traj.size() - 1) / 11;
    const double t = arc->traj.times[k];
    const Mat phi = transition_to_zero(fa.sys.model, *arc, t);
    // lambda(t) = Phi(0,t)^T lambda(0)
    const Vec transported = mat_tvec(phi, lam_final);
    CHECK(dist(transported, arc->adjoint_at(k)) <= 1e-6);

    // Phi columns match finite-difference flow sensitivities
    const double eps = 1e-6;
    const Vec x = arc->state_at(k);
    for (std::size_t j = 0; j < 2; ++j) {
      Vec xp = x, xm = x;
      xp[j] += eps;
      xm[j] -= eps;
      const Vec fp = replay_flow(fa.sys.model, *arc, xp, t);
      const Vec fm = replay_flow(fa.sys.model, *arc, xm, t);
      for (std::size_t i = 0; i < 2; ++i)
        CHECK(std::fabs((fp[i] - fm[i]) / (2 * eps) - phi(i, j)) <= 1e-4);
    }
  }
}

TEST_CASE("branch enumeration discards spurious candidates") {
  auto academic = load_fixture("academic");
  const auto pts = find_tangency_points(academic.model, academic.constraints, academic.control, 1,
                                        fixture_search("academic"));
  for (const TangencyPoint& tp : pts) {
    const auto arcs =
        integrate_barrier_arcs(academic.model, academic.constraints, academic.control, tp, {});
    CHECK(arcs.size() == 1);  // one of the two sign choices exits immediately
  }

  auto spring = load_fixture("linear_spring");
  const auto spts = find_tangency_points(spring.model, spring.constraints, spring.control, 0,
                                         fixture_search("linear_spring"));
  REQUIRE(spts.size() == 1);
  const auto sarcs =
      integrate_barrier_arcs(spring.model, spring.constraints, spring.control, spts[0], {});
  CHECK(sarcs.size() == 1);  // the u=+1 candidate violates Hamiltonian minimality
}

TEST_CASE("box control sets drive the same machinery") {
  // Same dynamics as the academic fixture but with an asymmetric control box.
  const char* cfg = R"(
[system]
n = 2
m = 1
[dynamics]
f = ["1 - x2^2", "u1"]
[constraints]
g = ["a_lower - x1", "x1 - a_upper"]
[control]
kind = "box"
lower = [-0.5]
upper = [1.0]
[parameters]
a_lower = -1.0
a_upper = 3.0
)";
  auto sys = load_system_config(cfg);
  REQUIRE(sys.control.kind == ControlSet::Kind::Box);
  FaceSearchOptions fopts;
  fopts.lo = {-1.0, -4.0};
  fopts.hi = {3.0, 4.0};
  const auto pts = find_tangency_points(sys.model, sys.constraints, sys.control, 1, fopts);
  REQUIRE(pts.size() == 2);  // tangency is control-independent here
  for (const TangencyPoint& tp : pts) {
    const auto arcs = integrate_barrier_arcs(sys.model, sys.constraints, sys.control, tp, {});
    REQUIRE(arcs.size() == 1);
    const BarrierArc& arc = arcs[0];
    CHECK(hamiltonian_residual(sys.model, arc) <= 1e-6);
    for (const Vec& u : arc.controls) CHECK(sys.control.contains(u, 1e-9));
    // bang values sit on the box faces
    CHECK((arc.controls.front()[0] == doctest::Approx(-0.5) ||
           arc.controls.front()[0] == doctest::Approx(1.0)));
  }
}

TEST_CASE("non-affine systems integrate through the sampled minimiser") {
  auto academic = load_fixture("academic");
  SystemModel sampled = academic.model;
  sampled.affine.reset();
  const auto pts = find_tangency_points(sampled, academic.constraints, academic.control, 1,
                                        fixture_search("academic"));
  REQUIRE_FALSE(pts.empty());
  BarrierOptions opts;
  opts.t_max = 0.5;  // short run: the per-stage minimisation is slow
  opts.ode.step = 5e-3;
  const auto arcs =
      integrate_barrier_arcs(sampled, academic.constraints, academic.control, pts.back(), opts);
  REQUIRE(arcs.size() == 1);  // degenerate endpoint: extremes enumerated, one survives
  const BarrierArc& arc = arcs[0];
  CHECK_FALSE(arc.bang_mode);
  CHECK(hamiltonian_residual(sampled, arc) <= 1e-5);

  // matches the closed-form branch it follows
  const double z2 = arc.endpoint.z[1];
  double worst = 0.0;
  for (std::size_t k = 0; k < arc.traj.size(); ++k) {
    const Vec x = arc.state_at(k);
    const double ref = z2 > 0 ? academic_exact::branch_upper_from_plus1(3.0, x[1])
                              : academic_exact::branch_upper_from_minus1(3.0, x[1]);
    worst = std::max(worst, std::fabs(x[0] - ref));
  }
  CHECK(worst <= 1e-3);
}

TEST_CASE("self-intersection terminates looping arcs") {
  // Conservative rotation with an ineffective control: the backward extremal
  // from the tangency point is a closed circle.
  const char* rotor = R"(
[system]
n = 2
m = 1
[dynamics]
f = ["x2", "-x1 + 0*u1"]
[constraints]
g = ["x1 - 2"]
[control]
kind = "ball"
)";
  auto sys = load_system_config(rotor);
  FaceSearchOptions fopts;
  fopts.lo = {-3.0, -3.0};
  fopts.hi = {2.0, 3.0};
  const auto pts = find_tangency_points(sys.model, sys.constraints, sys.control, 0, fopts);
  REQUIRE(pts.size() == 1);
  CHECK(std::fabs(pts[0].z[0] - 2.0) <= 1e-8);
  CHECK(std::fabs(pts[0].z[1]) <= 1e-8);

  const auto arcs = integrate_barrier_arcs(sys.model, sys.constraints, sys.control, pts[0], {});
  REQUIRE(arcs.size() == 1);  // both launched signs coincide (B = 0) and deduplicate
  CHECK(arcs[0].termination == ArcTermination::SelfIntersection);
  CHECK(std::fabs(-arcs[0].traj.times.back() - 2 * M_PI) <= 0.01);
}

TEST_CASE("contract violations are rejected") {
  auto academic = load_fixture("academic");
  TangencyPoint bogus;
  bogus.z = {0.0, 0.0};  // interior point
  bogus.i_star = 0;
  bogus.u_star = {0.0};
  CHECK_THROWS_AS(
      integrate_barrier_arc(academic.model, academic.constraints, academic.control, bogus, {}),
      ContractError);

  TangencyPoint loose;
  loose.z = {3.0, 0.5};  // on the face but far from tangential
  loose.i_star = 1;
  loose.u_star = {0.0};
  loose.residual = 0.75;
  CHECK_THROWS_AS(
      integrate_barrier_arc(academic.model, academic.constraints, academic.control, loose, {}),
      ContractError);
}

TEST_CASE("gronwall advisory flag") {
  auto academic = load_fixture("academic");
  const auto pts = find_tangency_points(academic.model, academic.constraints, academic.control, 0,
                                        fixture_search("academic"));
  REQUIRE_FALSE(pts.empty());
  BarrierOptions tight;
  tight.gronwall_C = 0.01;
  tight.gronwall_alpha = 1;
  const auto arcs_tight = integrate_barrier_arcs(academic.model, academic.constraints,
                                                 academic.control, pts.back(), tight);
  REQUIRE_FALSE(arcs_tight.empty());
  CHECK(arcs_tight[0].gronwall_exceeded);

  BarrierOptions generous;
  generous.gronwall_C = 50.0;
  const auto arcs_ok = integrate_barrier_arcs(academic.model, academic.constraints,
                                              academic.control, pts.back(), generous);
  REQUIRE_FALSE(arcs_ok.empty());
  CHECK_FALSE(arcs_ok[0].gronwall_exceeded);
}

TEST_CASE("assemble_boundary on the academic fixture") {
  FixtureArcs fa = compute_arcs("academic");
  BoundaryOptions bopts;
  bopts.lo = fixture("academic").bbox_lo;
  bopts.hi = fixture("academic").bbox_hi;
  const AdmissibleBoundary boundary = assemble_boundary(
      fa.sys.model, fa.sys.constraints, fa.sys.control, std::move(fa.arcs), bopts);

  // the paper's corner between the two upper-face arcs
  bool corner_found = false;
  for (const Corner& c : boundary.corners)
    if (std::fabs(c.point[0] - 7.0 / 3.0) <= 1e-4 && std::fabs(c.point[1]) <= 1e-4)
      corner_found = true;
  CHECK(corner_found);

  // corners lie on both arcs
  for (const Corner& c : boundary.corners) {
    for (std::size_t which : {c.arc_a, c.arc_b}) {
      double dmin = std::numeric_limits<double>::infinity();
      const BarrierArc& arc = boundary.arcs[which];
      for (std::size_t k = 0; k < arc.traj.size(); ++k)
        dmin = std::min(dmin, dist(arc.state_at(k), c.point));
      CHECK(dmin <= 2e-3);  // within a node spacing
    }
  }

  // upper-face arcs are trimmed at the corner, lower-face arcs are not
  REQUIRE(boundary.trimmed.size() == 4);
  for (std::size_t a = 0; a < 4; ++a) {
    const BarrierArc& arc = boundary.arcs[a];
    if (arc.endpoint.i_star == 1) {
      CHECK(boundary.kept_nodes[a] < arc.traj.size());
      const Vec& last = boundary.trimmed[a].back();
      CHECK(std::fabs(last[0] - 7.0 / 3.0) <= 1e-4);
      CHECK(std::fabs(last[1]) <= 1e-4);
    } else {
      CHECK(boundary.kept_nodes[a] == arc.traj.size());
    }
  }

  // usable part: lower face for |x2| <= 1, upper face for |x2| >= 1
  REQUIRE(boundary.usable_segments.size() == 3);
  for (const UsableSegment& seg : boundary.usable_segments) {
    for (const Vec& p : seg.points) {
      if (seg.face == 0) {
        CHECK(std::fabs(p[1]) <= 1.0 + 0.05);
      } else {
        CHECK(std::fabs(p[1]) >= 1.0 - 0.05);
      }
    }
  }

  // arcs end on the boundary at their tangency points
  for (const BarrierArc& arc : boundary.arcs)
    CHECK(classify_region(fa.sys.constraints, arc.endpoint.z) == RegionLabel::Boundary);
}

TEST_CASE("assemble_boundary: spring and degenerate cases") {
  FixtureArcs fa = compute_arcs("linear_spring");
  BoundaryOptions bopts;
  bopts.lo = fixture("linear_spring").bbox_lo;
  bopts.hi = fixture("linear_spring").bbox_hi;
  const AdmissibleBoundary boundary = assemble_boundary(
      fa.sys.model, fa.sys.constraints, fa.sys.control, std::move(fa.arcs), bopts);
  CHECK(boundary.arcs.size() == 1);
  REQUIRE(boundary.usable_segments.size() == 1);
  for (const Vec& p : boundary.usable_segments[0].points) CHECK(p[1] <= 1e-9);

  // no arcs + fully usable boundary: fine
  const char* stable = R"(
[system]
n = 2
m = 1
[dynamics]
f = ["-x1", "-x2 + u1"]
[constraints]
g = ["x1 - 5"]
[control]
kind = "ball"
)";
  auto sys = load_system_config(stable);
  BoundaryOptions sopts;
  sopts.lo = {-6.0, -6.0};
  sopts.hi = {5.5, 6.0};
  const AdmissibleBoundary all_usable =
      assemble_boundary(sys.model, sys.constraints, sys.control, {}, sopts);
  CHECK(all_usable.arcs.empty());
  CHECK_FALSE(all_usable.usable_segments.empty());

  // no arcs + partially unusable boundary violates the precondition
  auto academic = load_fixture("academic");
  BoundaryOptions aopts;
  aopts.lo = fixture("academic").bbox_lo;
  aopts.hi = fixture("academic").bbox_hi;
  CHECK_THROWS_AS(
      assemble_boundary(academic.model, academic.constraints, academic.control, {}, aopts),
      ContractError);
}

TEST_CASE("semipermeability of the academic arcs against the exact region") {
  // Outward-displaced points either violate the constraints under every
  // sampled control, or never re-enter the closed-form admissible region.
  const FixtureArcs fa = compute_arcs("academic");
  std::mt19937_64 rng(4242);
  const double delta = 1e-3;
  for (const BarrierArc& arc : fa.arcs) {
    // restrict to the part before the first switch (the boundary part for the
    // upper-face arcs; everything for the lower-face ones)
    std::size_t limit = arc.traj.size();
    if (!arc.switch_times.empty()) {
      for (std::size_t k = 0; k < arc.traj.size(); ++k)
        if (arc.traj.times[k] < arc.switch_times.front()) {
          limit = k;
          break;
        }
    }
    for (int pick = 0; pick < 6; ++pick) {
      const std::size_t k = 1 + (pick + 1) * (limit - 2) / 8;
      const Vec xi = arc.state_at(k);
      Vec lam = arc.adjoint_at(k);
      const double ln = norm(lam);
      for (double& v : lam) v /= ln;
      const Vec x_out = axpy(xi, delta, lam);
      for (int sig_idx = 0; sig_idx < 12; ++sig_idx) {
        const ControlSignal sig =
            ControlSignal::bang_bang(fa.sys.control, 8, rng(), 20.0);
        SimOptions so;
        so.ode.step = 5e-3;
        const SimResult res = simulate_forward(fa.sys.model, fa.sys.constraints, x_out, sig, 20.0, so);
        bool ok = res.sup_max_g > fa.sys.constraints.activation_tol;  // violated at some time
        if (!ok) {
          // never violated: then it must not penetrate the interior of the
          // closed-form region (points hugging its boundary do not count)
          bool entered = false;
          for (const Vec& x : res.traj.states)
            if (academic_exact::admissible(-1.0, 3.0, x[0], x[1]) &&
                !academic_exact::near_boundary(-1.0, 3.0, x[0], x[1], 0.5 * delta))
              entered = true;
          ok = !entered;
        }
        CHECK(ok);
      }
    }
  }
}
