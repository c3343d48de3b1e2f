#pragma once

#include <array>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "lasersim/closed_forms.hpp"
#include "lasersim/lindblad.hpp"
#include "lasersim/maxwell_bloch.hpp"
#include "lasersim/observables.hpp"

namespace lasersim {

// ---------------------------------------------------------------------------
// Linear stability of the lasing equilibrium in amplitude-phase coordinates.

enum class Stability { Stable, Marginal, Unstable };
std::string to_string(Stability s);

struct StabilityReport {
  double kappa = 0.0;
  double gamma = 0.0;
  double c_b = 0.0;
  /// Jacobian of the (r, S_R, S_I, D_R) system at the lasing point.
  Eigen::Matrix4d jacobian;
  /// -(gamma + kappa) first, then the three cubic roots.
  std::array<Complex, 4> eigenvalues;
  /// Eigenvalues of `jacobian` computed directly, as a cross-check.
  std::array<Complex, 4> jacobian_eigenvalues;
  /// 1, 3 gamma + kappa, 2 gamma^2 C_b + 2 gamma kappa, 4 kappa gamma^2 (C_b - 1).
  std::array<double, 4> cubic_coeffs;
  double max_real_part = 0.0;
  double hopf_threshold = std::numeric_limits<double>::infinity();
  Stability classification = Stability::Stable;
};

/// Requires C_b > 1 (DomainError). The spectrum does not depend on g, so the
/// Jacobian is assembled with g = 1; pass `g` to use a specific coupling.
StabilityReport stability_at(double kappa, double gamma, double c_b, double g = 1.0,
                             double marginal_tol = 1e-12);

/// Largest real part among the cubic's roots.
double cubic_max_real_part(double kappa, double gamma, double c_b);

struct HopfSearch {
  bool found = false;
  double c_b = std::numeric_limits<double>::quiet_NaN();
  double closed_form = std::numeric_limits<double>::infinity();
  int iterations = 0;
  /// Number of sign changes of the max real part seen on the scan grid.
  int sign_changes = 0;
};

/// Scans C_b on (c_lo, c_hi] with `scan_points` points and bisects the first
/// sign change of cubic_max_real_part to width `tol`.
HopfSearch locate_hopf(double kappa, double gamma, double c_lo, double c_hi,
                       int scan_points = 2000, double tol = 1e-10);

// ---------------------------------------------------------------------------
// Explicit bounds.

struct BoundReport {
  std::string bound_id;
  bool hypothesis_ok = true;
  std::string hypothesis_note;
  int samples_checked = 0;
  int violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();  ///< min rhs - lhs
  std::vector<double> times;
  std::vector<double> lhs;
  std::vector<double> rhs;

  bool holds() const { return hypothesis_ok && violations == 0; }
  nlohmann::json to_json() const;
};

/// Bound identifiers:
///   symmetric_decay  mean-field flow from data with tr(a rho0) = tr(sigma^- rho0) = 0,
///                    rhs 12 e^{-gamma t}(1 + |d|) + 4 e^{-kappa t} sqrt(tr(rho0 N))
///   linear_decay     same right-hand side for the undriven linear flow
///   constant_drive   constant drives (alpha0, beta0), target the driven equilibrium,
///                    rhs 12 e^{-gamma t}(1 + |d|)
///                        + e^{-kappa t}(2|alpha0|/sqrt(kappa^2 + omega^2) + 4 sqrt(tr(rho0 N)))
///   voc_distance     time-dependent drives, rhs tr|R_{t-s}(rho_s) - eq|
///                        + 4 int |alpha_R| sqrt(tr(rho_u N) + 1) du + 4 int |beta_R| du
const std::vector<std::string>& known_bound_ids();

double rhs_symmetric_decay(const LaserParams& p, double n0, double t);
double rhs_constant_drive(const LaserParams& p, Complex alpha0, double n0, double t);

struct BoundInputs {
  const LaserParams* params = nullptr;
  /// Generator that produced the trajectory.
  GeneratorKind kind = GeneratorKind::MeanField;
  Complex alpha0{};
  Complex beta0{};
  const DriveFunctions* drives = nullptr;
  /// For voc_distance: R_{t - s}(rho_s) sampled at the trajectory times.
  const std::vector<DensityMatrix>* semigroup_states = nullptr;
  double hypothesis_tol = 1e-12;
  double absolute_slack = 1e-12;
};

/// Checks tr|rho_t - target| <= rhs(t) at every sample. The trajectory
/// starts at rho0 = states.front(); s is times.front() for voc_distance.
BoundReport verify_explicit_bound(const std::string& bound_id,
                                  const std::vector<double>& times,
                                  const std::vector<DensityMatrix>& states,
                                  const DensityMatrix& target, const BoundInputs& in);

// ---------------------------------------------------------------------------
// Rates.

struct RateFit {
  double fitted_rate = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  double residual = 0.0;  ///< RMS of the log-linear fit
  double reference_rate = std::numeric_limits<double>::quiet_NaN();
  int points = 0;

  /// fitted >= reference (1 - slack); the references are lower bounds.
  bool meets_reference(double slack = 0.05) const {
    return fitted_rate >= reference_rate * (1.0 - slack);
  }
};

inline constexpr double kRateFitFloor = 1e-10;
inline constexpr double kRateFitTransient = 0.2;

/// Least-squares slope of log(values) up to the first value below 1e-10,
/// skipping the first 20% of that stretch as transient.
RateFit fit_decay_rate(const ObservableSeries& series,
                       double reference_rate = std::numeric_limits<double>::quiet_NaN());

// ---------------------------------------------------------------------------
// Cross-checks between the quantum and classical descriptions.

struct EhrenfestReport {
  std::vector<double> times;
  std::vector<MBState> quantum;
  std::vector<MBState> classical;
  double max_deviation = 0.0;
  DensityDiagnostics worst;
};

MBState means(const DensityMatrix& rho);

/// Mean-field flow (frame per `rotating_frame`) against integrate_mb started
/// from the same means, both with step `dt`.
EhrenfestReport ehrenfest_check(const DensityMatrix& rho0, const LaserParams& p,
                                double t_end, double dt, int sample_every,
                                bool rotating_frame = true);

struct VocResult {
  double residual = 0.0;  ///< trace distance between the two constructions
  DensityMatrix direct;
  DensityMatrix reconstructed;
  int quad_points = 0;
  double dt = 0.0;
  DensityDiagnostics worst;
};

/// rho_t from the driven flow against
/// R_{t-s}(rho_s) + int_s^t R_{t-u}([alpha_R a^dag - conj(alpha_R) a
///                                   + conj(beta_R) sigma^- - beta_R sigma^+, rho_u]) du
/// with composite Simpson on `quad_points` (even) panels. The RK4 step is
/// reduced so that it divides the panel width.
VocResult voc_residual(const DensityMatrix& rho0, const LaserParams& p,
                       const DriveFunctions& drives, double t, double s, int quad_points,
                       double dt);

struct ThetaTrackingOptions {
  double epsilon = 0.05;  ///< closeness in each polar coordinate
  double t_end = 200.0;
  double dt = 0.0;        ///< 0 selects default_lindblad_dt
  int sample_every = 100;
  ThetaOptions theta;
};

struct ThetaTrackingReport {
  double theta = 0.0;
  ThetaResult theta_detail;
  ObservableSeries distance;  ///< tr|rho_t - rho^{theta}|
  ObservableSeries gap;       ///< |tr(rho_t A) - tr(rho^{theta} A)|, A = N (x) (sigma^+ + sigma^-)
  RateFit distance_fit;
  RateFit gap_fit;
  double initial_distance = 0.0;
  double final_distance = 0.0;
  DensityMatrix final_state;
  DensityDiagnostics worst;
  bool tracking_ok = false;
};

/// Rotating-frame mean-field run from rho0 compared with the limit-cycle
/// state at the phase predicted by theta_infinity. Requires the stable lasing
/// regime and means within `epsilon` of the lasing circle (DomainError).
ThetaTrackingReport theta_tracking_check(const DensityMatrix& rho0, const LaserParams& p,
                                         const ThetaTrackingOptions& opt = {});

struct TruncationStudy {
  std::vector<int> n_max;
  std::vector<std::vector<double>> observables;
  std::vector<std::string> aborted;  ///< "n_max=..: message" for runs that threw
  double max_deviation = 0.0;
  bool converged = false;
};

/// Reruns `experiment` per cutoff; converged when every run finished and all
/// observables agree pairwise within `tol`.
TruncationStudy truncation_study(const std::function<std::vector<double>(int)>& experiment,
                                 const std::vector<int>& n_max_list, double tol);

}  // namespace lasersim
