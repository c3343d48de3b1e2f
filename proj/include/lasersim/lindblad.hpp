#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lasersim/density.hpp"
#include "lasersim/kernels.hpp"
#include "lasersim/maxwell_bloch.hpp"
#include "lasersim/params.hpp"

namespace lasersim {

/// Time-dependent drives of the linear equation, together with the reference
/// constants used to split them as alpha = alpha0 + alpha_R.
struct DriveFunctions {
  std::function<Complex(double)> alpha;
  std::function<Complex(double)> beta;
  Complex alpha0{};
  Complex beta0{};

  static DriveFunctions constant(Complex alpha0, Complex beta0);
  /// alpha(t) = g S(t), beta(t) = g A(t) along a Maxwell-Bloch solution;
  /// the references default to the values at the interpolant's start.
  static DriveFunctions from_maxwell_bloch(std::shared_ptr<const MBInterpolant> mb,
                                           double g);

  Complex alpha_r(double t) const { return alpha(t) - alpha0; }
  Complex beta_r(double t) const { return beta(t) - beta0; }
};

/// Largest |alpha(t + h) - alpha(t)| or |beta(t + h) - beta(t)| on the grid
/// 0, h, ..., t_end. A cheap sampled continuity diagnostic.
double max_drive_increment(const DriveFunctions& drives, double t_end, double h);

enum class GeneratorKind { LinearH, MeanField, Driven };

/// Handle to one of the three right-hand sides. Cheap to copy.
class Generator {
 public:
  /// Free laser generator (no coherent drive).
  static Generator linear_h(const LaserParams& p);
  /// Nonlinear mean-field generator; rotating_frame drops the omega term.
  static Generator mean_field(const LaserParams& p, bool rotating_frame);
  static Generator driven(const LaserParams& p, DriveFunctions drives);
  /// Driven generator with the constant drives (alpha0, beta0).
  static Generator autonomous(const LaserParams& p, Complex alpha0, Complex beta0);

  GeneratorKind kind() const { return kind_; }
  const LaserParams& params() const { return p_; }
  bool is_linear() const { return kind_ != GeneratorKind::MeanField; }
  const DriveFunctions* drives() const { return drives_.get(); }

  /// Coefficients at (rho, t). For the mean-field kind they are read from rho.
  GeneratorCoefficients coefficients(const CMatrix& rho, const SpaceSpec& space,
                                     double t) const;
  void apply(const CMatrix& rho, const SpaceSpec& space, double t, CMatrix& out) const;
  CMatrix operator()(const DensityMatrix& rho, double t = 0.0) const;

  std::string describe() const;

 private:
  Generator(GeneratorKind kind, LaserParams p, double omega)
      : kind_(kind), p_(p), omega_(omega) {}

  GeneratorKind kind_;
  LaserParams p_;
  double omega_;
  std::shared_ptr<const DriveFunctions> drives_;
};

CMatrix generator_linear_h(const DensityMatrix& rho, const LaserParams& p);
CMatrix generator_meanfield(const DensityMatrix& rho, const LaserParams& p,
                            bool rotating_frame);
CMatrix generator_driven(const DensityMatrix& rho, const LaserParams& p,
                         const DriveFunctions& drives, double t);

/// Default RK4 step: 0.01, reduced so that dt times the fastest rate of the
/// retained levels (decay, detuning and mean-field coupling) stays below 1.
double default_lindblad_dt(const LaserParams& p, const SpaceSpec& space);

struct EvolveOptions {
  double dt = 0.0;  ///< 0 selects default_lindblad_dt
  double t_end = 0.0;
  int sample_every = 1;  ///< in steps; t = 0 and t_end are always sampled
  double t0 = 0.0;       ///< start time fed to time-dependent drives
  bool keep_states = true;
  bool check_invariants = true;
  bool check_spectrum = true;
  DensityTolerances tolerances;
};

/// Called at every sample with the time and the state.
using SampleObserver = std::function<void(double, const DensityMatrix&)>;

struct EvolveResult {
  std::vector<double> times;
  std::vector<DensityMatrix> states;  ///< empty unless keep_states
  DensityMatrix final_state;
  /// Component-wise worst values seen over all samples.
  DensityDiagnostics worst;
  double dt = 0.0;
  long steps = 0;
};

/// Stage-consistent RK4. Leakage is checked every step (TruncationError);
/// trace, hermiticity and positivity at every sample (InvariantError).
EvolveResult evolve(const DensityMatrix& rho0, const Generator& gen,
                    const EvolveOptions& opt, const SampleObserver& observer = {});

/// Plain RK4 on an arbitrary matrix with no invariant checks, for linear
/// generators applied to differences and commutators.
CMatrix propagate(const CMatrix& x, const Generator& gen, const SpaceSpec& space,
                  double t0, double duration, double dt);

/// Autonomous semigroup with constant drives (alpha0, beta0).
DensityMatrix semigroup_r(const DensityMatrix& rho, const LaserParams& p,
                          Complex alpha0, Complex beta0, double t, double dt);

}  // namespace lasersim
