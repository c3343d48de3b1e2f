#include "lasersim/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lasersim {

DriveFunctions DriveFunctions::constant(Complex alpha0, Complex beta0) {
  DriveFunctions d;
  d.alpha = [alpha0](double) { return alpha0; };
  d.beta = [beta0](double) { return beta0; };
  d.alpha0 = alpha0;
  d.beta0 = beta0;
  return d;
}

DriveFunctions DriveFunctions::from_maxwell_bloch(std::shared_ptr<const MBInterpolant> mb,
                                                  double g) {
  DriveFunctions d;
  d.alpha = [mb, g](double t) { return g * (*mb)(t).S; };
  d.beta = [mb, g](double t) { return g * (*mb)(t).A; };
  const MBState s0 = (*mb)(mb->t_begin());
  d.alpha0 = g * s0.S;
  d.beta0 = g * s0.A;
  return d;
}

double max_drive_increment(const DriveFunctions& drives, double t_end, double h) {
  if (!(h > 0.0)) throw DomainError("max_drive_increment: h must be positive");
  double worst = 0.0;
  Complex a_prev = drives.alpha(0.0);
  Complex b_prev = drives.beta(0.0);
  const long n = static_cast<long>(std::ceil(t_end / h - 1e-9));
  for (long k = 1; k <= n; ++k) {
    const double t = std::min(t_end, k * h);
    const Complex a = drives.alpha(t);
    const Complex b = drives.beta(t);
    worst = std::max({worst, std::abs(a - a_prev), std::abs(b - b_prev)});
    a_prev = a;
    b_prev = b;
  }
  return worst;
}

Generator Generator::linear_h(const LaserParams& p) {
  return Generator(GeneratorKind::LinearH, p, p.omega());
}

Generator Generator::mean_field(const LaserParams& p, bool rotating_frame) {
  return Generator(GeneratorKind::MeanField, p, rotating_frame ? 0.0 : p.omega());
}

Generator Generator::driven(const LaserParams& p, DriveFunctions drives) {
  if (!drives.alpha || !drives.beta) {
    throw DomainError("driven generator needs both drive functions");
  }
  Generator gen(GeneratorKind::Driven, p, p.omega());
  gen.drives_ = std::make_shared<const DriveFunctions>(std::move(drives));
  return gen;
}

Generator Generator::autonomous(const LaserParams& p, Complex alpha0, Complex beta0) {
  return driven(p, DriveFunctions::constant(alpha0, beta0));
}

GeneratorCoefficients Generator::coefficients(const CMatrix& rho, const SpaceSpec& space,
                                              double t) const {
  GeneratorCoefficients c;
  c.kappa = p_.kappa();
  c.gamma = p_.gamma();
  c.d = p_.d();
  c.omega = omega_;
  switch (kind_) {
    case GeneratorKind::LinearH:
      break;
    case GeneratorKind::MeanField:
      c.alpha = p_.g() * kernels::trace_sigma_minus(rho, space);
      c.beta = p_.g() * kernels::trace_a(rho, space);
      break;
    case GeneratorKind::Driven:
      c.alpha = drives_->alpha(t);
      c.beta = drives_->beta(t);
      break;
  }
  return c;
}

void Generator::apply(const CMatrix& rho, const SpaceSpec& space, double t,
                      CMatrix& out) const {
  kernels::apply_generator(rho, space, coefficients(rho, space, t), out);
}

CMatrix Generator::operator()(const DensityMatrix& rho, double t) const {
  CMatrix out;
  apply(rho.entries, rho.space, t, out);
  return out;
}

std::string Generator::describe() const {
  switch (kind_) {
    case GeneratorKind::LinearH:
      return "linear_h";
    case GeneratorKind::MeanField:
      return omega_ == 0.0 ? "mean_field_rotating" : "mean_field";
    case GeneratorKind::Driven:
      return "driven";
  }
  return "unknown";
}

CMatrix generator_linear_h(const DensityMatrix& rho, const LaserParams& p) {
  return Generator::linear_h(p)(rho);
}

CMatrix generator_meanfield(const DensityMatrix& rho, const LaserParams& p,
                            bool rotating_frame) {
  return Generator::mean_field(p, rotating_frame)(rho);
}

CMatrix generator_driven(const DensityMatrix& rho, const LaserParams& p,
                         const DriveFunctions& drives, double t) {
  return Generator::driven(p, drives)(rho, t);
}

double default_lindblad_dt(const LaserParams& p, const SpaceSpec& space) {
  // The last term bounds the mean-field drive, |alpha| <= |g| / 2, through
  // ||[alpha a^dag - conj(alpha) a, .]|| with a factor 2 margin; RK4 is not
  // positivity preserving and strong coupling otherwise shows up as negative
  // eigenvalues of order (rate dt)^4.
  const double fastest = 2.0 * p.kappa() * space.n_max + 2.0 * p.gamma() +
                         std::abs(p.omega()) * (space.n_max + 1) +
                         4.0 * std::abs(p.g()) * std::sqrt(space.n_max + 1.0);
  return std::min(0.01, 1.0 / fastest);
}

namespace {

struct Grid {
  long steps;
  double dt;
};

Grid make_grid(double t_end, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("dt must be positive");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw DomainError("t_end must be >= 0");
  if (t_end == 0.0) return {0, dt};
  const long n = std::max(1L, static_cast<long>(std::ceil(t_end / dt - 1e-9)));
  return {n, t_end / n};
}

class Rk4 {
 public:
  Rk4(const Generator& gen, const SpaceSpec& space) : gen_(gen), space_(space) {}

  void step(CMatrix& x, double t, double h) {
    gen_.apply(x, space_, t, k1_);
    stage_ = x;
    kernels::axpy(stage_, 0.5 * h, k1_);
    gen_.apply(stage_, space_, t + 0.5 * h, k2_);
    stage_ = x;
    kernels::axpy(stage_, 0.5 * h, k2_);
    gen_.apply(stage_, space_, t + 0.5 * h, k3_);
    stage_ = x;
    kernels::axpy(stage_, h, k3_);
    gen_.apply(stage_, space_, t + h, k4_);
    k1_ += 2.0 * k2_;
    k1_ += 2.0 * k3_;
    k1_ += k4_;
    kernels::axpy(x, h / 6.0, k1_);
  }

 private:
  const Generator& gen_;
  SpaceSpec space_;
  CMatrix k1_, k2_, k3_, k4_, stage_;
};

void merge_worst(DensityDiagnostics& worst, const DensityDiagnostics& d) {
  worst.hermiticity_error = std::max(worst.hermiticity_error, d.hermiticity_error);
  worst.trace_error = std::max(worst.trace_error, d.trace_error);
  worst.min_eigenvalue = std::min(worst.min_eigenvalue, d.min_eigenvalue);
  worst.top_leakage = std::max(worst.top_leakage, d.top_leakage);
}

}  // namespace

EvolveResult evolve(const DensityMatrix& rho0, const Generator& gen,
                    const EvolveOptions& opt, const SampleObserver& observer) {
  if (opt.sample_every < 1) throw DomainError("sample_every must be >= 1");
  const SpaceSpec space = rho0.space;
  const double dt0 = opt.dt > 0.0 ? opt.dt : default_lindblad_dt(gen.params(), space);
  const Grid grid = make_grid(opt.t_end, dt0);

  EvolveResult res;
  res.dt = grid.dt;
  res.steps = grid.steps;
  res.worst.min_eigenvalue = std::numeric_limits<double>::infinity();

  CMatrix x = rho0.entries;
  Rk4 rk(gen, space);

  auto sample = [&](long k) {
    const double t = opt.t0 + k * grid.dt;
    DensityMatrix rho{x, space, t};
    if (opt.check_invariants) {
      const DensityDiagnostics d = diagnose(x, space, opt.check_spectrum);
      merge_worst(res.worst, d);
      DensityTolerances tol = opt.tolerances;
      if (!opt.check_spectrum) tol.min_eigenvalue = -std::numeric_limits<double>::infinity();
      require_valid(rho, tol);
    }
    res.times.push_back(t);
    if (observer) observer(t, rho);
    if (opt.keep_states) res.states.push_back(rho);
  };

  sample(0);
  for (long k = 1; k <= grid.steps; ++k) {
    rk.step(x, opt.t0 + (k - 1) * grid.dt, grid.dt);
    const double leak = top_level_population(x, space);
    if (!std::isfinite(leak)) {
      throw SingularTrajectoryError("density matrix became non-finite");
    }
    if (leak > opt.tolerances.leakage) {
      std::ostringstream os;
      os << "at t = " << opt.t0 + k * grid.dt << ": top Fock levels hold " << leak
         << " > " << opt.tolerances.leakage << "; increase n_max";
      throw TruncationError(os.str());
    }
    if (k % opt.sample_every == 0 || k == grid.steps) sample(k);
  }
  if (!opt.check_invariants || !opt.check_spectrum) {
    if (std::isinf(res.worst.min_eigenvalue)) res.worst.min_eigenvalue = 0.0;
  }
  res.final_state = DensityMatrix{x, space, opt.t0 + grid.steps * grid.dt};
  return res;
}

CMatrix propagate(const CMatrix& x0, const Generator& gen, const SpaceSpec& space,
                  double t0, double duration, double dt) {
  const Grid grid = make_grid(duration, dt);
  CMatrix x = x0;
  Rk4 rk(gen, space);
  for (long k = 0; k < grid.steps; ++k) rk.step(x, t0 + k * grid.dt, grid.dt);
  return x;
}

DensityMatrix semigroup_r(const DensityMatrix& rho, const LaserParams& p, Complex alpha0,
                          Complex beta0, double t, double dt) {
  EvolveOptions opt;
  opt.dt = dt;
  opt.t_end = t;
  opt.sample_every = std::numeric_limits<int>::max();
  opt.keep_states = false;
  return evolve(rho, Generator::autonomous(p, alpha0, beta0), opt).final_state;
}

}  // namespace lasersim
