#include <cmath>

#include "doctest.h"
#include "lasersim/closed_forms.hpp"
#include "lasersim/kernels.hpp"
#include "lasersim/lindblad.hpp"
#include "lasersim/observables.hpp"
#include "random_states.hpp"

using namespace lasersim;
using lasersim::testing::random_density;
using lasersim::testing::random_matrix;

namespace {

GeneratorCoefficients coeffs(double kappa, double gamma, double d, double omega,
                             Complex alpha, Complex beta) {
  GeneratorCoefficients c;
  c.kappa = kappa;
  c.gamma = gamma;
  c.d = d;
  c.omega = omega;
  c.alpha = alpha;
  c.beta = beta;
  return c;
}

// Straight from D[L] rho = L rho L^dag - {L^dag L, rho}/2 with Kronecker
// products built here, independent of make_operators.
CMatrix oracle_generator(const CMatrix& rho, int n_max, const GeneratorCoefficients& c) {
  const int nf = n_max + 1;
  CMatrix a = CMatrix::Zero(nf, nf);
  for (int n = 1; n < nf; ++n) a(n - 1, n) = std::sqrt(double(n));
  CMatrix sm = CMatrix::Zero(2, 2);
  sm(1, 0) = 1.0;  // |-><+|
  const CMatrix i2 = CMatrix::Identity(2, 2);
  const CMatrix inf = CMatrix::Identity(nf, nf);
  auto kron = [&](const CMatrix& f, const CMatrix& s) {
    CMatrix k(2 * nf, 2 * nf);
    for (int n = 0; n < nf; ++n)
      for (int m = 0; m < nf; ++m)
        for (int u = 0; u < 2; ++u)
          for (int v = 0; v < 2; ++v) k(2 * n + u, 2 * m + v) = f(n, m) * s(u, v);
    return k;
  };
  const CMatrix A = kron(a, i2);
  const CMatrix Sm = kron(inf, sm);
  const CMatrix Sp = Sm.adjoint();
  CMatrix s3 = CMatrix::Zero(2, 2);
  s3(0, 0) = 1.0;
  s3(1, 1) = -1.0;
  const CMatrix H = 0.5 * c.omega * (2.0 * A.adjoint() * A + kron(inf, s3));
  auto D = [&](const CMatrix& L) {
    const CMatrix LdL = L.adjoint() * L;
    return CMatrix(L * rho * L.adjoint() - 0.5 * (LdL * rho + rho * LdL));
  };
  const CMatrix K = c.alpha * A.adjoint() - std::conj(c.alpha) * A +
                    std::conj(c.beta) * Sm - c.beta * Sp;
  return -kI * (H * rho - rho * H) + 2.0 * c.kappa * D(A) +
         c.gamma * (1.0 - c.d) * D(Sm) + c.gamma * (1.0 + c.d) * D(Sp) + (K * rho - rho * K);
}

}  // namespace

TEST_CASE("kernel matches the dense reference and an independent oracle") {
  for (int n_max : {1, 3, 8, 40}) {
    const SpaceSpec space = make_space(n_max);
    const OperatorSet ops = make_operators(space);
    const auto c = coeffs(0.7, 1.3, -0.4, 0.9, {0.3, -0.2}, {-0.1, 0.45});
    for (unsigned seed : {1u, 2u}) {
      // Full random matrix: the kernel is linear, so Hermiticity is not needed.
      const CMatrix x = random_matrix(space.dim(), seed + 10 * n_max);
      CMatrix fast;
      kernels::apply_generator(x, space, c, fast);
      const CMatrix ref = reference::apply_generator(x, ops, c);
      const CMatrix orc = oracle_generator(x, n_max, c);
      const double scale = x.cwiseAbs().maxCoeff();
      CHECK((fast - ref).cwiseAbs().maxCoeff() < 1e-12 * scale * n_max);
      CHECK((fast - orc).cwiseAbs().maxCoeff() < 1e-12 * scale * n_max);
    }
  }
}

TEST_CASE("kernel result does not depend on the thread count") {
  const SpaceSpec space = make_space(48);
  const CMatrix x = random_matrix(space.dim(), 5);
  const auto c = coeffs(1.0, 0.5, 0.2, 0.0, {0.1, 0.1}, {0.2, 0.0});
  const int saved = kernels::thread_limit();
  CMatrix one, many;
  kernels::set_thread_limit(1);
  kernels::apply_generator(x, space, c, one);
  kernels::set_thread_limit(4);
  kernels::apply_generator(x, space, c, many);
  kernels::set_thread_limit(saved);
  CHECK((one - many).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("generator preserves trace and hermiticity") {
  const SpaceSpec space = make_space(10);
  const DensityMatrix rho = random_density(space, 7, 3);
  const LaserParams p = LaserParams::from_decay(1.0, 2.0, 0.3, 1.5, 0.4);
  for (const CMatrix& out :
       {generator_linear_h(rho, p), generator_meanfield(rho, p, false),
        generator_meanfield(rho, p, true),
        generator_driven(rho, p, DriveFunctions::constant({0.2, 0.3}, {-0.5, 0.1}), 0.0)}) {
    CHECK(std::abs(out.trace()) < 1e-13);
    CHECK((out - out.adjoint()).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("mean-field coefficients are read from the state") {
  const SpaceSpec space = make_space(12);
  const DensityMatrix rho = random_density(space, 8, 4);
  const LaserParams p = LaserParams::from_decay(1.0, 1.0, 0.5, 1.7, 0.3);
  const OperatorSet ops = make_operators(space);
  const Generator mf = Generator::mean_field(p, false);
  const auto c = mf.coefficients(rho.entries, space, 0.0);
  CHECK(std::abs(c.alpha - 1.7 * (rho.entries * ops.sigma_minus.entries).trace()) < 1e-13);
  CHECK(std::abs(c.beta - 1.7 * (rho.entries * ops.a.entries).trace()) < 1e-13);
  CHECK(c.omega == doctest::Approx(0.3));
  CHECK(Generator::mean_field(p, true).coefficients(rho.entries, space, 0.0).omega == 0.0);
}

TEST_CASE("default step") {
  const LaserParams p = LaserParams::from_decay(1.0, 1.0, 0.0, 1.0);
  CHECK(default_lindblad_dt(p, make_space(24)) == doctest::Approx(0.01));
  const LaserParams fast = LaserParams::from_decay(10.0, 1.0, 0.0, 1.0);
  CHECK(default_lindblad_dt(fast, make_space(24)) == doctest::Approx(1.0 / 502.0));
  const LaserParams strong = LaserParams::from_decay(1.0, 1.0, 0.0, 10.0);
  CHECK(default_lindblad_dt(strong, make_space(24)) == doctest::Approx(1.0 / 250.0));
}

TEST_CASE("populations follow the four-level rate equations") {
  // Atom-only dynamics from a diagonal product state with field in |1>:
  // p(1,s) and p(0,s) obey a closed linear system solved here exactly.
  const double kappa = 0.6, gamma = 1.1, d = 0.35;
  const LaserParams p = LaserParams::from_decay(kappa, gamma, d, 1.0);
  const SpaceSpec space = make_space(3);
  CMatrix rho0 = CMatrix::Zero(space.dim(), space.dim());
  rho0(SpaceSpec::index(1, kPlus), SpaceSpec::index(1, kPlus)) = 0.3;
  rho0(SpaceSpec::index(1, kMinus), SpaceSpec::index(1, kMinus)) = 0.7;
  EvolveOptions opt;
  opt.t_end = 2.0;
  opt.dt = 1e-3;
  opt.tolerances.leakage = 1.0;
  const EvolveResult res =
      evolve(DensityMatrix{rho0, space, std::nullopt}, Generator::linear_h(p), opt);
  // Field: P1(t) = e^{-2 kappa t}. Atom: p_+(t) = (1+d)/2 + (0.3 - (1+d)/2) e^{-2 gamma t}.
  const double t = 2.0;
  const double p1 = std::exp(-2 * kappa * t);
  const double pp = (1 + d) / 2 + (0.3 - (1 + d) / 2) * std::exp(-2 * gamma * t);
  const CMatrix& r = res.final_state.entries;
  CHECK(r(SpaceSpec::index(1, kPlus), SpaceSpec::index(1, kPlus)).real() ==
        doctest::Approx(p1 * pp).epsilon(1e-11));
  CHECK(r(SpaceSpec::index(0, kMinus), SpaceSpec::index(0, kMinus)).real() ==
        doctest::Approx((1 - p1) * (1 - pp)).epsilon(1e-11));
}

TEST_CASE("RK4 error ratio under step halving is close to 16") {
  const LaserParams p = LaserParams::from_decay(1.0, 0.8, 0.4, 1.2);
  const SpaceSpec space = make_space(12);
  const DensityMatrix rho0 = random_density(space, 4, 9);
  const Generator gen = Generator::mean_field(p, true);
  auto run = [&](double dt) { return propagate(rho0.entries, gen, space, 0.0, 1.0, dt); };
  const CMatrix a = run(0.04), b = run(0.02), c = run(0.01);
  const double ratio = (a - b).norm() / (b - c).norm();
  CHECK(ratio == doctest::Approx(16.0).epsilon(0.1));
}

TEST_CASE("number mean obeys its ODE along a driven flow") {
  // d<N>/dt = -2 kappa <N> + 2 Re(conj(alpha) <a>) when no atom coupling enters N.
  const LaserParams p = LaserParams::from_decay(0.5, 1.0, 0.2, 1.0);
  const SpaceSpec space = make_space(30);
  const DensityMatrix rho0 = stationary_state(p, space);
  const Complex alpha0(0.8, -0.3);
  const Generator gen = Generator::autonomous(p, alpha0, 0.0);
  EvolveOptions opt;
  opt.t_end = 3.0;
  opt.dt = 1e-3;
  const EvolveResult res = evolve(rho0, gen, opt);
  // Coherent amplitude z(t) = alpha0 (1 - e^{-kappa t}) / kappa, N = |z|^2.
  const Complex z = alpha0 * (1.0 - std::exp(-0.5 * 3.0)) / 0.5;
  CHECK(mean_photon_number(res.final_state) == doctest::Approx(std::norm(z)).epsilon(1e-10));
}

TEST_CASE("linear semigroup is contractive and composes") {
  const LaserParams p = LaserParams::from_decay(1.0, 1.0, -0.3, 1.0);
  const SpaceSpec space = make_space(14);
  const DensityMatrix r1 = random_density(space, 5, 11);
  const DensityMatrix r2 = random_density(space, 5, 12);
  const Complex a0(0.2, 0.1), b0(-0.3, 0.2);
  const double dt = 0.005;
  const DensityMatrix s1 = semigroup_r(r1, p, a0, b0, 1.0, dt);
  const DensityMatrix s2 = semigroup_r(r2, p, a0, b0, 1.0, dt);
  CHECK(trace_distance(s1, s2) <= trace_distance(r1, r2) + 1e-12);
  const DensityMatrix once = semigroup_r(r1, p, a0, b0, 0.6, dt);
  const DensityMatrix twice = semigroup_r(semigroup_r(r1, p, a0, b0, 0.25, dt), p, a0, b0, 0.35, dt);
  CHECK(trace_distance(once, twice) < 1e-10);
}

TEST_CASE("evolve samples, checks and reports leakage") {
  const LaserParams p = LaserParams::from_decay(1.0, 1.0, 0.5, 2.0);
  const SpaceSpec space = make_space(8);
  const DensityMatrix rho0 = stationary_state(p, space);
  EvolveOptions opt;
  opt.t_end = 1.0;
  opt.dt = 0.01;
  opt.sample_every = 30;
  int calls = 0;
  const EvolveResult res =
      evolve(rho0, Generator::mean_field(p, true), opt, [&](double, const DensityMatrix&) { ++calls; });
  CHECK(res.steps == 100);
  REQUIRE(res.times.size() == 5);  // 0, 30, 60, 90, 100
  CHECK(res.times.back() == doctest::Approx(1.0));
  CHECK(calls == 5);

  // A strong drive pushes population to the top of a small space.
  const Generator pump = Generator::autonomous(p, {5.0, 0.0}, 0.0);
  opt.t_end = 2.0;
  CHECK_THROWS_AS(evolve(rho0, pump, opt), TruncationError);
}

TEST_CASE("drive helpers") {
  const DriveFunctions c = DriveFunctions::constant({1.0, 2.0}, {3.0, 0.0});
  CHECK(c.alpha_r(5.0) == Complex(0.0));
  CHECK(max_drive_increment(c, 1.0, 0.1) == 0.0);
  const LaserParams p = LaserParams::from_decay(1.0, 1.0, 0.5, 2.0);
  auto traj = integrate_mb(MBState{{0.2, 0.0}, {0.1, 0.0}, 0.0}, p, 1.0, 0.01);
  auto mb = std::make_shared<const MBInterpolant>(traj, p);
  const DriveFunctions f = DriveFunctions::from_maxwell_bloch(mb, 2.0);
  CHECK(f.alpha0 == Complex(0.2, 0.0));
  CHECK(f.beta0 == Complex(0.4, 0.0));
  CHECK(std::abs(f.beta(traj.times[50]) - 2.0 * traj.states[50].A) < 1e-14);
  CHECK(max_drive_increment(f, 1.0, 0.01) < 0.05);
}
