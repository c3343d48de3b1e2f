#pragma once

#include <vector>

#include "lasersim/density.hpp"
#include "lasersim/params.hpp"

namespace lasersim {

/// Vacuum (x) diag((1 + d)/2, (1 - d)/2).
DensityMatrix stationary_state(const LaserParams& p, const SpaceSpec& space);

/// Coherent state at r0 e^{i(theta - omega t)} times the 2x2 atom state with
/// inversion d / C_b and coherence kappa r0 / g e^{i(theta - omega t)}.
/// Requires C_b > 1 (DomainError).
DensityMatrix limit_cycle_state(const LaserParams& p, double t, double theta,
                                const SpaceSpec& space,
                                double leakage_tol = kDefaultLeakageTolerance);

/// Equilibrium of the constant-drive linear equation: coherent field at
/// alpha0 / (kappa + i omega) times the driven atom equilibrium.
DensityMatrix linear_equilibrium(const LaserParams& p, Complex alpha0, Complex beta0,
                                 const SpaceSpec& space,
                                 double leakage_tol = kDefaultLeakageTolerance);

/// The 2x2 atom factor of linear_equilibrium (unit trace).
CMatrix atom_equilibrium(const LaserParams& p, Complex beta);

/// Exact solution of the atom equation under a constant drive beta.
///
/// The state is tracked through x = (a_{++} - a_{--}, a_{+-}, a_{-+}) which
/// obeys x' = A x + f with f = (2 gamma d tr, 0, 0), while tr = a_{++} + a_{--}
/// is conserved. The Lyapunov identity A^* M + M A = -4 gamma I holds for
/// M = diag(1, 2, 2).
struct AtomBlockSolution {
  Eigen::Matrix3cd matrix3;
  Eigen::Vector3cd equilibrium3;
  Complex trace_const{};
  Eigen::Vector3cd initial3;
  /// True when the eigenvector basis was too ill-conditioned and the
  /// exponential is taken by scaling and squaring instead.
  bool used_fallback = false;

  Eigen::Vector3cd state3(double t) const;
  /// Reassembled 2x2 atom matrix at time t.
  CMatrix at(double t) const;

  Eigen::Vector3cd eigenvalues;
  Eigen::Matrix3cd eigenvectors;
  Eigen::Matrix3cd eigenvectors_inv;
};

inline constexpr double kEigenbasisConditionLimit = 1e8;

AtomBlockSolution atom_block_solution(const CMatrix& initial, const LaserParams& p,
                                      Complex beta);
CMatrix atom_block_evolve(const CMatrix& initial, const LaserParams& p, Complex beta,
                          double t);
Eigen::Matrix3cd atom_block_matrix(const LaserParams& p, Complex beta);

/// Photon-number distribution of the pure-death process started at n_start:
/// phi_j(t) = C(n, j) e^{-2 kappa j t} (1 - e^{-2 kappa t})^{n - j}.
struct PureDeathDistribution {
  int n_start = 0;
  double t = 0.0;
  std::vector<double> probabilities;  ///< j = 0..n_start
};

PureDeathDistribution pure_death(int n_start, double kappa, double t);

/// sum_n p_n (1 - e^{-2 kappa t})^n: probability of having reached the
/// vacuum by time t from the initial populations p_n.
double vacuum_probability(const std::vector<double>& initial, double kappa, double t);

}  // namespace lasersim
