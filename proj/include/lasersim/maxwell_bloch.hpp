#pragma once

#include <iosfwd>
#include <vector>

#include "lasersim/params.hpp"
#include "lasersim/types.hpp"

namespace lasersim {

/// Maxwell-Bloch triple: field amplitude A = tr(rho a), polarization
/// S = tr(rho sigma^-), inversion D = tr(rho sigma^3).
struct MBState {
  Complex A{};
  Complex S{};
  double D = 0.0;

  MBState& operator+=(const MBState& o) {
    A += o.A;
    S += o.S;
    D += o.D;
    return *this;
  }
  friend MBState operator+(MBState l, const MBState& r) { return l += r; }
  friend MBState operator*(double h, const MBState& s) {
    return MBState{h * s.A, h * s.S, h * s.D};
  }
};

/// Largest component-wise distance, |dA|, |dS|, |dD|.
double max_abs_diff(const MBState& x, const MBState& y);

/// True when |D| <= 1 and |S| <= 1/2 (up to `slack`), i.e. the triple can come
/// from a physical state.
bool bloch_admissible(const MBState& s, double slack = 1e-12);

/// Right-hand side with the detuning taken from p.omega().
MBState mb_rhs(const MBState& s, const LaserParams& p);

/// One classical RK4 step.
MBState mb_step(const MBState& s, const LaserParams& p, double dt);

struct MBIntegratorSettings {
  double dt = 0.0;
  double t_end = 0.0;
  int sample_every = 1;
};

/// Default step 1e-3 / max{kappa, gamma, |g|, |omega|, 1}.
double default_mb_dt(const LaserParams& p);

struct MBTrajectory {
  std::vector<double> times;
  std::vector<MBState> states;
  MBIntegratorSettings meta;
};

/// Fixed-step RK4 on [0, t_end]. The step is shrunk so that it divides
/// t_end exactly; every `sample_every`-th step and the final state are kept.
/// Throws SingularTrajectoryError when the state becomes non-finite.
MBTrajectory integrate_mb(const MBState& s0, const LaserParams& p, double t_end,
                          double dt, int sample_every = 1);

/// CSV with header t,re_A,im_A,re_S,im_S,D.
void write_csv(std::ostream& os, const MBTrajectory& traj);

struct MBEquilibrium {
  MBState state;
  /// True for the nonzero lasing point, which is one member of a circle of
  /// equilibria under the global phase A, S -> e^{i theta} A, e^{i theta} S.
  bool phase_family = false;
};

/// (0, 0, d) always; for omega = 0 and C_b > 1 also
/// (r0, kappa r0 / g, gamma kappa / g^2) with r0 = gamma sqrt(C_b - 1)/(sqrt2 |g|).
std::vector<MBEquilibrium> mb_equilibria(const LaserParams& p);

/// gamma sqrt(C_b - 1) / (sqrt2 |g|), or 0 for C_b <= 1.
double lasing_amplitude(const LaserParams& p);

/// Amplitude-phase coordinates around the rotating field:
/// A = r e^{i phi}, S = (s_r + i s_i) e^{i phi}, D = d_r + d.
struct PolarMBState {
  double r = 0.0;
  double phi = 0.0;
  double s_r = 0.0;
  double s_i = 0.0;
  double d_r = 0.0;
};

PolarMBState to_polar(const MBState& s, const LaserParams& p);
MBState from_polar(const PolarMBState& s, const LaserParams& p);

inline constexpr double kAmplitudeFloor = 1e-8;

/// Polar right-hand side, including phi' = -omega + g s_i / r.
/// Throws SingularTrajectoryError for r below kAmplitudeFloor.
PolarMBState polar_rhs(const PolarMBState& s, const LaserParams& p);

/// RK4 in polar coordinates; same grid conventions as integrate_mb.
std::vector<PolarMBState> integrate_polar(const PolarMBState& s0,
                                          const LaserParams& p, double t_end,
                                          double dt, int sample_every = 1);

struct ThetaOptions {
  double dt = 0.0;            ///< 0 selects default_mb_dt
  double t_start = 0.0;       ///< 0 selects 50 / min{kappa, gamma}
  double t_limit = 0.0;       ///< 0 selects 64 * t_start
  double window = 0.0;        ///< 0 selects 10 / min{kappa, gamma}
  double integrand_tol = 1e-12;
  double convergence_tol = 1e-8;  ///< distance to the lasing circle at the end
};

struct ThetaResult {
  double theta = 0.0;     ///< in [0, 2 pi)
  double integral = 0.0;  ///< integral of Im(S/A) over [0, t_final]
  double t_final = 0.0;
  int doublings = 0;
};

/// Limiting phase of the omega = 0 flow started at s0:
/// arg( A0/|A0| exp(i g int_0^inf Im(S/A) ds) ).
/// Errors: A0 = 0 (DomainError), |A| below kAmplitudeFloor
/// (SingularTrajectoryError), no convergence by t_limit (ConvergenceError).
ThetaResult theta_infinity(const MBState& s0, const LaserParams& p,
                           const ThetaOptions& opt = {});

/// Principal value in [0, 2 pi).
double wrap_angle(double theta);

/// Pointwise decay certificates for a Maxwell-Bloch trajectory.
struct LyapunovCertificate {
  std::vector<double> lhs;
  std::vector<double> rhs;
  std::vector<bool> holds;
  bool all_hold = true;
};

struct LyapunovReport {
  /// Weighted energy bound; the branch is selected by sign(d).
  LyapunovCertificate energy;
  /// Sharpened bound on |S|^2 + (D - d)^2 / 4; only for d in [0, 1), C_b < 1.
  bool sharpened_applicable = false;
  LyapunovCertificate sharpened;
};

/// Evaluates both bounds at each sample. The relative slack covers the
/// equality at t = 0 and round-off.
LyapunovReport lyapunov_certificates(const MBTrajectory& traj,
                                     const LaserParams& p,
                                     double rel_slack = 1e-10);

/// Dense output over an MB trajectory: cubic Hermite interpolation using the
/// stored states and the vector field. Used as continuous drives.
class MBInterpolant {
 public:
  MBInterpolant(MBTrajectory traj, LaserParams p);
  MBState operator()(double t) const;
  double t_begin() const { return traj_.times.front(); }
  double t_end() const { return traj_.times.back(); }
  const MBTrajectory& trajectory() const { return traj_; }

 private:
  MBTrajectory traj_;
  LaserParams p_;
  std::vector<MBState> slopes_;
};

}  // namespace lasersim
