#pragma once

#include <string>
#include <vector>

#include "lasersim/density.hpp"
#include "lasersim/hilbert.hpp"
#include "lasersim/params.hpp"

namespace lasersim {

/// Time grid paired with one sampled observable.
struct ObservableSeries {
  std::string name;
  std::vector<double> times;
  std::vector<double> values;
};

/// tr(rho A). Throws DimensionError on mismatch.
Complex mean_value(const DensityMatrix& rho, const OperatorMatrix& op);
Complex mean_value(const CMatrix& rho, const CMatrix& op);

/// tr(rho N), summed from the diagonal.
double mean_photon_number(const DensityMatrix& rho);

/// p(n) = sum over the atom index of the diagonal, n = 0..n_max.
std::vector<double> photon_distribution(const DensityMatrix& rho);

struct QuadratureVariances {
  double var_q = 0.0;
  double var_p = 0.0;
};

/// Variances of Q = (a^dag + a)/sqrt2 and P = i (a^dag - a)/sqrt2. The
/// second moments use the untruncated identity Q^2 = (a^2 + a^dag^2 + 2N + 1)/2,
/// so the cutoff row does not bias them.
QuadratureVariances quadrature_variances(const DensityMatrix& rho);

struct EntropyReport {
  double linear_entropy = 0.0;  ///< 1 - tr rho^2
  double von_neumann = 0.0;     ///< nats
  double clipped_mass = 0.0;    ///< total |negative eigenvalue| discarded
};

inline constexpr double kClippedMassBudget = 1e-7;

/// Throws PositivityError when the clipped mass exceeds kClippedMassBudget.
EntropyReport entropies(const DensityMatrix& rho);
EntropyReport entropies(const CMatrix& rho);

/// tr|rho1 - rho2| from the eigenvalues of the (Hermitian) difference.
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);
double trace_distance(const CMatrix& a, const CMatrix& b);

/// Sum of singular values.
double trace_norm(const CMatrix& m);

/// Total-variation distance sum |p - q| / 2 over the common support
/// (missing entries count as zero).
double total_variation(const std::vector<double>& p, const std::vector<double>& q);

/// Poisson weights e^{-mean} mean^n / n! for n = 0..n_max.
std::vector<double> poisson_weights(double mean, int n_max);

/// Evaluates observables by name on a state. Supported names:
///   trace_distance_to_stationary, mean_photon, varQ, varP, linear_entropy,
///   von_neumann, inversion, re_A, im_A, abs_A, re_S, im_S, abs_S,
///   p(n) for an integer n.
class ObservableSet {
 public:
  ObservableSet(std::vector<std::string> names, const LaserParams& p,
                const SpaceSpec& space);

  const std::vector<std::string>& names() const { return names_; }
  std::vector<double> evaluate(const DensityMatrix& rho) const;

  static bool is_known(const std::string& name);

 private:
  std::vector<std::string> names_;
  DensityMatrix stationary_;
};

}  // namespace lasersim
