#include <doctest.h>

#include <cmath>
#include <random>

#include "barrierkit/fixtures.hpp"
#include "barrierkit/tangency.hpp"

using namespace barrierkit;

namespace {

FaceSearchOptions fixture_search(const std::string& name) {
  const Fixture& fx = fixture(name);
  FaceSearchOptions opts;
  opts.lo = fx.bbox_lo;
  opts.hi = fx.bbox_hi;
  return opts;
}

}  // namespace

TEST_CASE("hamiltonian") {
  auto academic = load_fixture("academic");
  for (double u : {-1.0, 0.0, 1.0}) {
    CHECK(hamiltonian(academic.model, {3.0, 1.0}, {1.0, 0.0}, {u}) ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK(hamiltonian(academic.model, {0.5, 0.7}, {0.0, 0.0}, {u}) == 0.0);
  }
  CHECK(hamiltonian(academic.model, {0.0, 0.0}, {-1.0, 0.0}, {0.3}) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(hamiltonian(academic.model, {0.0, 0.0}, {1.0}, {0.0}), ArgumentError);
}

TEST_CASE("minimize_hamiltonian closed forms") {
  auto academic = load_fixture("academic");
  {
    const HamiltonianMin hm =
        minimize_hamiltonian(academic.model, academic.control, {0.0, 0.0}, {-1.0, 0.5});
    CHECK(hm.u_star[0] == doctest::Approx(-1.0));
    CHECK_FALSE(hm.degenerate);
    // value = lambda . f(x, u*) = -(1 - x2^2) + 0.5*(-1)
    CHECK(hm.value == doctest::Approx(-1.5));
  }
  {
    auto spring = load_fixture("linear_spring");
    const HamiltonianMin hm =
        minimize_hamiltonian(spring.model, spring.control, {0.3, -0.2}, {0.0, -2.0});
    CHECK(hm.u_star[0] == doctest::Approx(1.0));  // u = -sgn(lambda_2)
    CHECK_FALSE(hm.degenerate);
  }
  {
    // B^T lambda = 0: degenerate with the tie-break at the centre
    const HamiltonianMin hm =
        minimize_hamiltonian(academic.model, academic.control, {0.0, 0.0}, {1.0, 0.0});
    CHECK(hm.degenerate);
    CHECK(hm.u_star[0] == 0.0);
  }
}

TEST_CASE("affine minimisation matches the sampling path") {
  auto academic = load_fixture("academic");
  SystemModel sampled = academic.model;
  sampled.affine.reset();  // force the enumeration path

  std::mt19937_64 rng(77);
  auto uniform = [&rng](double lo, double hi) {
    return lo + (hi - lo) * ((rng() >> 11) * 0x1.0p-53);
  };
  for (int trial = 0; trial < 100; ++trial) {
    const Vec x{uniform(-1, 3), uniform(-3, 3)};
    const Vec lam{uniform(-2, 2), uniform(-2, 2)};
    const HamiltonianMin exact = minimize_hamiltonian(academic.model, academic.control, x, lam);
    const HamiltonianMin approx = minimize_hamiltonian(sampled, academic.control, x, lam);
    CHECK(std::fabs(exact.value - approx.value) <= 1e-6);
    CHECK(approx.value >= exact.value - 1e-10);  // sampling never beats the true minimum
  }
}

TEST_CASE("usable_part on the fixtures") {
  auto academic = load_fixture("academic");
  CHECK(usable_part(academic.model, academic.constraints, academic.control, {3.0, 2.0}));
  CHECK_FALSE(usable_part(academic.model, academic.constraints, academic.control, {3.0, 0.0}));
  CHECK_THROWS_AS(usable_part(academic.model, academic.constraints, academic.control, {0.0, 0.0}),
                  ContractError);

  auto spring = load_fixture("linear_spring");
  CHECK(usable_part(spring.model, spring.constraints, spring.control, {1.0, -1.0}));
  CHECK_FALSE(usable_part(spring.model, spring.constraints, spring.control, {1.0, 0.5}));

  // agreement with the analytic sign of min_u L_f g = -(1 - x2^2) resp. (1 - x2^2)
  for (double x2 : {-2.5, -1.5, -0.5, 0.5, 1.5, 2.5}) {
    const bool lower = usable_part(academic.model, academic.constraints, academic.control,
                                   {-1.0, x2});
    CHECK(lower == (-(1.0 - x2 * x2) <= 1e-9));
    const bool upper = usable_part(academic.model, academic.constraints, academic.control,
                                   {3.0, x2});
    CHECK(upper == ((1.0 - x2 * x2) <= 1e-9));
  }

  // monotone in eps_use
  const Vec z{3.0, 0.999999};  // min_u max L_f g = 1 - x2^2 ~ 2e-6 > 0
  CHECK_FALSE(usable_part(academic.model, academic.constraints, academic.control, z, 1e-9));
  CHECK(usable_part(academic.model, academic.constraints, academic.control, z, 1e-2));
}

TEST_CASE("find_tangency_points: academic faces") {
  auto academic = load_fixture("academic");
  const FaceSearchOptions opts = fixture_search("academic");

  const auto lower = find_tangency_points(academic.model, academic.constraints, academic.control,
                                          0, opts);
  REQUIRE(lower.size() == 2);
  CHECK(std::fabs(lower[0].z[0] - -1.0) <= 1e-8);
  CHECK(std::fabs(lower[0].z[1] - -1.0) <= 1e-8);
  CHECK(std::fabs(lower[1].z[1] - 1.0) <= 1e-8);

  const auto upper = find_tangency_points(academic.model, academic.constraints, academic.control,
                                          1, opts);
  REQUIRE(upper.size() == 2);
  CHECK(std::fabs(upper[0].z[0] - 3.0) <= 1e-8);
  CHECK(std::fabs(upper[0].z[1] - -1.0) <= 1e-8);
  CHECK(std::fabs(upper[1].z[1] - 1.0) <= 1e-8);

  // TangencyPoint invariants
  for (const auto& pts : {lower, upper}) {
    for (const TangencyPoint& tp : pts) {
      for (std::size_t i : tp.active)
        CHECK(std::fabs(academic.constraints.g(tp.z)[i]) < academic.constraints.activation_tol);
      CHECK(std::fabs(lie_derivative(academic.model, academic.constraints, tp.i_star, tp.z,
                                     tp.u_star)) <= 1e-6);
      for (std::size_t i : tp.active)
        CHECK(lie_derivative(academic.model, academic.constraints, i, tp.z, tp.u_star) <= 1e-6);
      // every control pushes outward: sampled min of the max Lie derivative
      double sampled_min = std::numeric_limits<double>::infinity();
      for (const Vec& u : academic.control.sample_controls()) {
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t i : tp.active)
          worst = std::max(worst, lie_derivative(academic.model, academic.constraints, i, tp.z, u));
        sampled_min = std::min(sampled_min, worst);
      }
      CHECK(sampled_min >= -1e-6);
      CHECK(tp.residual <= 1e-10);
    }
  }
}

TEST_CASE("find_tangency_points: linear spring face") {
  auto spring = load_fixture("linear_spring");
  const auto pts = find_tangency_points(spring.model, spring.constraints, spring.control, 0,
                                        fixture_search("linear_spring"));
  REQUIRE(pts.size() == 1);
  CHECK(std::fabs(pts[0].z[0] - 1.0) <= 1e-8);
  CHECK(std::fabs(pts[0].z[1]) <= 1e-8);
  CHECK(pts[0].i_star == 0);
  CHECK(pts[0].degenerate_u);  // L_f g has zero control coefficient on the face
}

TEST_CASE("face scan error handling") {
  auto academic = load_fixture("academic");
  FaceSearchOptions opts = fixture_search("academic");
  CHECK_THROWS_AS(
      find_tangency_points(academic.model, academic.constraints, academic.control, 7, opts),
      ArgumentError);
  opts.lo = {0.0};
  CHECK_THROWS_AS(
      find_tangency_points(academic.model, academic.constraints, academic.control, 0, opts),
      ArgumentError);

  // A face whose gradient vanishes on the manifold: g = (x1 - 5)^2 - 0 has
  // Dg = 0 at x1 = 5.
  const char* singular = R"(
[system]
n = 2
m = 1
[dynamics]
f = ["x2", "u1"]
[constraints]
g = ["(x1 - 5)^2"]
[control]
kind = "ball"
)";
  auto sys = load_system_config(singular);
  FaceSearchOptions sopts;
  sopts.lo = {4.0, -1.0};
  sopts.hi = {6.0, 1.0};
  CHECK_THROWS_AS(find_tangency_points(sys.model, sys.constraints, sys.control, 0, sopts),
                  SingularFaceError);
}

TEST_CASE("empty result is not an error") {
  // Shrink the scan box away from the tangency points.
  auto academic = load_fixture("academic");
  FaceSearchOptions opts;
  opts.lo = {-1.0, 2.0};
  opts.hi = {3.0, 4.0};
  const auto pts =
      find_tangency_points(academic.model, academic.constraints, academic.control, 1, opts);
  CHECK(pts.empty());
}
