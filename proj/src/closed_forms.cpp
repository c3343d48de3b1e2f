#include "lasersim/closed_forms.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "lasersim/maxwell_bloch.hpp"

namespace lasersim {

namespace {

CMatrix coherent_projector(Complex zeta, int n_max, double tol) {
  const FieldVector f = coherent_vector(zeta, n_max, tol);
  return f.amplitudes * f.amplitudes.adjoint();
}

}  // namespace

DensityMatrix stationary_state(const LaserParams& p, const SpaceSpec& space) {
  CMatrix field = CMatrix::Zero(space.fock_dim(), space.fock_dim());
  field(0, 0) = 1.0;
  return DensityMatrix::product(field, atom_state(0.5 * (1.0 + p.d()), 0.0), space);
}

DensityMatrix limit_cycle_state(const LaserParams& p, double t, double theta,
                                const SpaceSpec& space, double leakage_tol) {
  const double c_b = cooperative_parameter(p);
  if (!(c_b > 1.0)) throw DomainError("limit_cycle_state requires C_b > 1");
  const double r0 = lasing_amplitude(p);
  const Complex phase = std::polar(1.0, theta - p.omega() * t);
  const double coh = p.kappa() * r0 / p.g();
  const CMatrix field = coherent_projector(r0 * phase, space.n_max, leakage_tol);
  const CMatrix atom = atom_state(0.5 * (1.0 + p.d() / c_b), coh * phase);
  DensityMatrix rho = DensityMatrix::product(field, atom, space);
  rho.time_tag = t;
  return rho;
}

CMatrix atom_equilibrium(const LaserParams& p, Complex beta) {
  const double g2w2 = p.gamma() * p.gamma() + p.omega() * p.omega();
  const double den = g2w2 + 2.0 * std::norm(beta);
  const double inversion = p.d() * g2w2 / den;
  const Complex coh = p.d() * beta * Complex(p.gamma(), -p.omega()) / den;
  return atom_state(0.5 * (1.0 + inversion), coh);
}

DensityMatrix linear_equilibrium(const LaserParams& p, Complex alpha0, Complex beta0,
                                 const SpaceSpec& space, double leakage_tol) {
  const Complex zeta = alpha0 / Complex(p.kappa(), p.omega());
  return DensityMatrix::product(coherent_projector(zeta, space.n_max, leakage_tol),
                                atom_equilibrium(p, beta0), space);
}

Eigen::Matrix3cd atom_block_matrix(const LaserParams& p, Complex beta) {
  const double g = p.gamma();
  const double w = p.omega();
  Eigen::Matrix3cd a;
  a << -2.0 * g, -2.0 * std::conj(beta), -2.0 * beta,
       beta, Complex(-g, -w), 0.0,
       std::conj(beta), 0.0, Complex(-g, w);
  return a;
}

AtomBlockSolution atom_block_solution(const CMatrix& initial, const LaserParams& p,
                                      Complex beta) {
  if (initial.rows() != 2 || initial.cols() != 2) {
    throw DimensionError("atom_block_solution: initial state must be 2x2");
  }
  AtomBlockSolution sol;
  sol.matrix3 = atom_block_matrix(p, beta);
  sol.trace_const = initial(kPlus, kPlus) + initial(kMinus, kMinus);
  sol.initial3 << initial(kPlus, kPlus) - initial(kMinus, kMinus), initial(kPlus, kMinus),
      initial(kMinus, kPlus);

  const double g2w2 = p.gamma() * p.gamma() + p.omega() * p.omega();
  const Complex scale = p.d() * sol.trace_const / (g2w2 + 2.0 * std::norm(beta));
  sol.equilibrium3 << scale * g2w2, scale * beta * Complex(p.gamma(), -p.omega()),
      scale * std::conj(beta) * Complex(p.gamma(), p.omega());

  Eigen::ComplexEigenSolver<Eigen::Matrix3cd> es(sol.matrix3);
  sol.eigenvalues = es.eigenvalues();
  sol.eigenvectors = es.eigenvectors();
  Eigen::JacobiSVD<Eigen::Matrix3cd> svd(sol.eigenvectors);
  const auto sv = svd.singularValues();
  const double cond = sv(2) > 0.0 ? sv(0) / sv(2) : std::numeric_limits<double>::infinity();
  sol.used_fallback = !(cond <= kEigenbasisConditionLimit);
  if (!sol.used_fallback) sol.eigenvectors_inv = sol.eigenvectors.inverse();
  return sol;
}

Eigen::Vector3cd AtomBlockSolution::state3(double t) const {
  const Eigen::Vector3cd dev = initial3 - equilibrium3;
  if (used_fallback) {
    const Eigen::Matrix3cd e = (matrix3 * t).exp();
    return equilibrium3 + e * dev;
  }
  const Eigen::Vector3cd c = eigenvectors_inv * dev;
  Eigen::Vector3cd w;
  for (int k = 0; k < 3; ++k) w(k) = std::exp(eigenvalues(k) * t) * c(k);
  return equilibrium3 + eigenvectors * w;
}

CMatrix AtomBlockSolution::at(double t) const {
  const Eigen::Vector3cd x = state3(t);
  CMatrix m(2, 2);
  m(kPlus, kPlus) = 0.5 * (trace_const + x(0));
  m(kMinus, kMinus) = 0.5 * (trace_const - x(0));
  m(kPlus, kMinus) = x(1);
  m(kMinus, kPlus) = x(2);
  return m;
}

CMatrix atom_block_evolve(const CMatrix& initial, const LaserParams& p, Complex beta,
                          double t) {
  return atom_block_solution(initial, p, beta).at(t);
}

PureDeathDistribution pure_death(int n_start, double kappa, double t) {
  if (n_start < 0) throw DomainError("pure_death: n_start must be >= 0");
  if (!(kappa > 0.0) || !(t >= 0.0)) throw DomainError("pure_death: need kappa > 0, t >= 0");
  PureDeathDistribution out{n_start, t, std::vector<double>(n_start + 1)};
  const double survive = std::exp(-2.0 * kappa * t);
  const double die = -std::expm1(-2.0 * kappa * t);
  double binom = 1.0;  // C(n, j), updated incrementally
  for (int j = 0; j <= n_start; ++j) {
    out.probabilities[j] = binom * std::pow(survive, j) * std::pow(die, n_start - j);
    binom = binom * (n_start - j) / (j + 1);
  }
  return out;
}

double vacuum_probability(const std::vector<double>& initial, double kappa, double t) {
  const double die = -std::expm1(-2.0 * kappa * t);
  double acc = 0.0;
  for (std::size_t n = 0; n < initial.size(); ++n) {
    acc += initial[n] * std::pow(die, static_cast<double>(n));
  }
  return acc;
}

}  // namespace lasersim
