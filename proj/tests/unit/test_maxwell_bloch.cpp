#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "lasersim/analysis.hpp"
#include "lasersim/lindblad.hpp"
#include "lasersim/maxwell_bloch.hpp"
#include "random_states.hpp"

using namespace lasersim;
using lasersim::testing::random_density;

namespace {

// Hand-written vector field.
MBState oracle_rhs(const MBState& s, double kappa, double gamma, double d, double g,
                   double omega) {
  MBState r;
  r.A = -(kappa + kI * omega) * s.A + g * s.S;
  r.S = -(gamma + kI * omega) * s.S + g * s.A * s.D;
  r.D = -2.0 * gamma * (s.D - d) - 4.0 * g * std::real(std::conj(s.A) * s.S);
  return r;
}

}  // namespace

TEST_CASE("vector field") {
  const LaserParams p = LaserParams::from_decay(0.7, 1.3, 0.4, 2.1, 0.25);
  const MBState s{{0.3, -0.2}, {0.1, 0.15}, -0.3};
  const MBState a = mb_rhs(s, p);
  const MBState b = oracle_rhs(s, 0.7, 1.3, 0.4, 2.1, 0.25);
  CHECK(max_abs_diff(a, b) < 1e-15);
}

TEST_CASE("vector field is the mean of the mean-field generator") {
  const LaserParams p = LaserParams::from_decay(1.0, 0.6, 0.3, 1.4, 0.2);
  const SpaceSpec space = make_space(16);
  for (unsigned seed : {1u, 2u, 3u}) {
    const DensityMatrix rho = random_density(space, 10, seed);
    const DensityMatrix drho{generator_meanfield(rho, p, false), space, std::nullopt};
    const MBState lhs = means(drho);
    const MBState rhs = mb_rhs(means(rho), p);
    CHECK(max_abs_diff(lhs, rhs) < 1e-13);
  }
}

TEST_CASE("RK4 step is fourth order") {
  const LaserParams p = LaserParams::from_decay(1.0, 0.5, 0.6, 1.5);
  const MBState s0{{0.2, 0.1}, {0.05, -0.1}, 0.1};
  auto run = [&](double dt) { return integrate_mb(s0, p, 2.0, dt).states.back(); };
  const MBState a = run(0.02), b = run(0.01), c = run(0.005);
  CHECK(max_abs_diff(a, b) / max_abs_diff(b, c) == doctest::Approx(16.0).epsilon(0.1));
}

TEST_CASE("grid and sampling rule") {
  const LaserParams p = LaserParams::from_decay(1.0, 1.0, 0.5, 1.0);
  const MBTrajectory t = integrate_mb(MBState{{0.1, 0}, {0, 0}, 0}, p, 1.0, 0.03, 5);
  // ceil(1 / 0.03) = 34 steps of 1/34; samples at 0, 5, ..., 30 and 34.
  CHECK(t.meta.dt == doctest::Approx(1.0 / 34.0));
  CHECK(t.times.size() == 8);
  CHECK(t.times.back() == doctest::Approx(1.0));
  CHECK(default_mb_dt(LaserParams::from_decay(4.0, 1.0, 0.5, 0.5)) == doctest::Approx(2.5e-4));
  std::ostringstream os;
  write_csv(os, t);
  CHECK(os.str().rfind("t,re_A,im_A,re_S,im_S,D\n", 0) == 0);
}

TEST_CASE("equilibria are fixed points") {
  const LaserParams p = LaserParams::with_cooperative(1.0, 1.0, 0.5, 2.0);
  const auto eq = mb_equilibria(p);
  REQUIRE(eq.size() == 2);
  CHECK(eq[1].phase_family);
  for (const auto& e : eq) {
    const MBState r = mb_rhs(e.state, p);
    CHECK(std::abs(r.A) + std::abs(r.S) + std::abs(r.D) < 1e-14);
  }
  // r0 = gamma sqrt(C_b - 1) / (sqrt2 g), g = 2 here.
  CHECK(lasing_amplitude(p) == doctest::Approx(1.0 / (std::sqrt(2.0) * 2.0)));
  CHECK(eq[1].state.D == doctest::Approx(0.25));
  CHECK(mb_equilibria(LaserParams::with_cooperative(1, 1, 0.5, 0.8)).size() == 1);
  CHECK(lasing_amplitude(LaserParams::with_cooperative(1, 1, 0.5, 0.8)) == 0.0);
}

TEST_CASE("polar coordinates") {
  const LaserParams p = LaserParams::from_decay(1.0, 1.0, 0.5, 2.0, 0.3);
  const MBState s{{0.3, 0.4}, {-0.1, 0.2}, 0.1};
  const MBState back = from_polar(to_polar(s, p), p);
  CHECK(max_abs_diff(s, back) < 1e-15);
  // Polar flow agrees with the Cartesian flow.
  const PolarMBState ps = to_polar(s, p);
  const auto pol = integrate_polar(ps, p, 1.0, 1e-3);
  const MBState cart = integrate_mb(s, p, 1.0, 1e-3).states.back();
  CHECK(max_abs_diff(from_polar(pol.back(), p), cart) < 1e-11);
  CHECK_THROWS_AS(polar_rhs(PolarMBState{}, p), SingularTrajectoryError);
  CHECK(wrap_angle(-0.5) == doctest::Approx(2 * std::numbers::pi - 0.5));
}

TEST_CASE("limiting phase") {
  const LaserParams p = LaserParams::with_cooperative(1.0, 1.0, 0.5, 2.0);
  const double r0 = lasing_amplitude(p);
  SUBCASE("a point on the circle keeps its phase") {
    const double th = 1.2;
    const Complex e = std::exp(kI * th);
    const MBState s{r0 * e, p.kappa() * r0 / p.g() * e, 0.25};
    CHECK(theta_infinity(s, p).theta == doctest::Approx(th).epsilon(1e-9));
  }
  SUBCASE("agrees with the argument of a long trajectory") {
    const MBState s{{0.2, 0.1}, {0.0, 0.08}, 0.3};
    const ThetaResult res = theta_infinity(s, p);
    const MBState end = integrate_mb(s, p, 200.0, 1e-3).states.back();
    CHECK(std::abs(std::arg(end.A * std::exp(-kI * res.theta))) < 1e-7);
  }
  CHECK_THROWS_AS(theta_infinity(MBState{{0, 0}, {0.1, 0}, 0.1}, p), DomainError);
}

TEST_CASE("Lyapunov certificates hold along trajectories") {
  for (double d : {0.5, -0.4}) {
    const LaserParams p = d > 0 ? LaserParams::with_cooperative(1.0, 2.0, d, 0.7)
                                : LaserParams::from_decay(1.0, 2.0, d, 1.3);
    const MBTrajectory t = integrate_mb(MBState{{0.4, -0.2}, {0.2, 0.1}, -0.6}, p, 10.0, 1e-3, 10);
    const LyapunovReport rep = lyapunov_certificates(t, p);
    CHECK(rep.energy.all_hold);
    CHECK(rep.sharpened_applicable == (d > 0));
    if (rep.sharpened_applicable) CHECK(rep.sharpened.all_hold);
  }
}

TEST_CASE("Bloch admissibility") {
  CHECK(bloch_admissible(MBState{{5, 0}, {0.5, 0}, -1.0}));
  CHECK_FALSE(bloch_admissible(MBState{{0, 0}, {0.6, 0}, 0.0}));
  CHECK_FALSE(bloch_admissible(MBState{{0, 0}, {0, 0}, 1.1}));
}

TEST_CASE("dense output") {
  const LaserParams p = LaserParams::with_cooperative(1.0, 1.0, 0.5, 2.0);
  const MBState s0{{0.2, 0.1}, {0.0, 0.08}, 0.3};
  const MBInterpolant f(integrate_mb(s0, p, 2.0, 0.01), p);
  const MBTrajectory fine = integrate_mb(s0, p, 1.005, 1e-4);
  CHECK(max_abs_diff(f(1.005), fine.states.back()) < 1e-8);
  CHECK(max_abs_diff(f(0.0), s0) == 0.0);
}
