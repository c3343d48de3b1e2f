#pragma once

#include <limits>
#include <string>

#include "json.hpp"

namespace lasersim {

/// Physical parameters of the single-mode laser.
///
/// Stored in the (kappa, gamma, d, g, omega) form. The pump rates
/// kappa_plus = gamma (1 + d) and kappa_minus = gamma (1 - d) are derived.
/// Instances are immutable and always valid: kappa > 0, gamma > 0,
/// |d| < 1, g != 0, everything finite.
class LaserParams {
 public:
  static LaserParams from_decay(double kappa, double gamma, double d, double g,
                                double omega = 0.0);
  static LaserParams from_pump_rates(double kappa, double kappa_plus,
                                     double kappa_minus, double g,
                                     double omega = 0.0);
  /// Chooses g > 0 so that the cooperative parameter equals `c_b`.
  /// Requires d > 0 when c_b > 0 (and d < 0 when c_b < 0).
  static LaserParams with_cooperative(double kappa, double gamma, double d,
                                      double c_b, double omega = 0.0);

  double kappa() const { return kappa_; }
  double gamma() const { return gamma_; }
  double d() const { return d_; }
  double g() const { return g_; }
  double omega() const { return omega_; }
  double kappa_plus() const { return gamma_ * (1.0 + d_); }
  double kappa_minus() const { return gamma_ * (1.0 - d_); }

  /// Copy with a different detuning (omega = 0 is the rotating frame).
  LaserParams with_omega(double omega) const;

 private:
  LaserParams(double kappa, double gamma, double d, double g, double omega);

  double kappa_;
  double gamma_;
  double d_;
  double g_;
  double omega_;
};

/// g^2 d / (kappa gamma).
double cooperative_parameter(const LaserParams& p);

/// (kappa^2 + 5 kappa gamma) / (gamma (kappa - 3 gamma)) for kappa > 3 gamma,
/// +infinity otherwise.
double second_threshold(double kappa, double gamma);

enum class Regime { BelowThreshold, StableLasing, UnstableLasing, Boundary };

std::string to_string(Regime r);

struct RegimeReport {
  double c_b = 0.0;
  bool first_threshold_exceeded = false;
  double second_threshold = std::numeric_limits<double>::infinity();
  Regime regime = Regime::BelowThreshold;
};

inline constexpr double kRegimeBoundaryTolerance = 1e-9;

RegimeReport classify_regime(const LaserParams& p,
                             double rel_tol = kRegimeBoundaryTolerance);

/// Guaranteed exponential decay rate of the trace distance to the stationary
/// state below threshold. Throws DomainError when C_b >= 1.
double decay_rate_delta_sys(const LaserParams& p);

/// Accepts {"kappa","gamma","d","g","omega"} or
/// {"kappa","kappa_plus","kappa_minus","g","omega"}; mixing the two is a
/// ConfigError. An optional "c_b" may replace "g" in the first form.
LaserParams params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LaserParams& p);

}  // namespace lasersim
