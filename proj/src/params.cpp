#include "lasersim/params.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lasersim/types.hpp"

namespace lasersim {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid laser parameters: " + what);
}

}  // namespace

LaserParams::LaserParams(double kappa, double gamma, double d, double g,
                         double omega)
    : kappa_(kappa), gamma_(gamma), d_(d), g_(g), omega_(omega) {
  require(std::isfinite(kappa) && kappa > 0.0, "kappa must be > 0");
  require(std::isfinite(gamma) && gamma > 0.0, "gamma must be > 0");
  require(std::isfinite(d) && std::abs(d) < 1.0, "|d| must be < 1");
  require(std::isfinite(g) && g != 0.0, "g must be non-zero");
  require(std::isfinite(omega), "omega must be finite");
}

LaserParams LaserParams::from_decay(double kappa, double gamma, double d,
                                    double g, double omega) {
  return LaserParams(kappa, gamma, d, g, omega);
}

LaserParams LaserParams::from_pump_rates(double kappa, double kappa_plus,
                                         double kappa_minus, double g,
                                         double omega) {
  require(std::isfinite(kappa_plus) && kappa_plus > 0.0,
          "kappa_plus must be > 0");
  require(std::isfinite(kappa_minus) && kappa_minus > 0.0,
          "kappa_minus must be > 0");
  const double sum = kappa_plus + kappa_minus;
  return LaserParams(kappa, 0.5 * sum, (kappa_plus - kappa_minus) / sum, g,
                     omega);
}

LaserParams LaserParams::with_cooperative(double kappa, double gamma, double d,
                                          double c_b, double omega) {
  require(std::isfinite(c_b), "c_b must be finite");
  require(c_b != 0.0, "c_b = 0 leaves g undetermined");
  require(d != 0.0 && (c_b > 0.0) == (d > 0.0),
          "sign of c_b must equal the sign of d");
  return LaserParams(kappa, gamma, d, std::sqrt(c_b * kappa * gamma / d),
                     omega);
}

LaserParams LaserParams::with_omega(double omega) const {
  return LaserParams(kappa_, gamma_, d_, g_, omega);
}

double cooperative_parameter(const LaserParams& p) {
  return p.g() * p.g() * p.d() / (p.kappa() * p.gamma());
}

double second_threshold(double kappa, double gamma) {
  if (kappa <= 3.0 * gamma) return std::numeric_limits<double>::infinity();
  return (kappa * kappa + 5.0 * kappa * gamma) / (gamma * (kappa - 3.0 * gamma));
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::BelowThreshold: return "BelowThreshold";
    case Regime::StableLasing: return "StableLasing";
    case Regime::UnstableLasing: return "UnstableLasing";
    case Regime::Boundary: return "Boundary";
  }
  return "?";
}

RegimeReport classify_regime(const LaserParams& p, double rel_tol) {
  RegimeReport r;
  r.c_b = cooperative_parameter(p);
  r.first_threshold_exceeded = r.c_b > 1.0;
  r.second_threshold = second_threshold(p.kappa(), p.gamma());

  const bool near_first = std::abs(r.c_b - 1.0) <= rel_tol;
  const bool near_second =
      std::isfinite(r.second_threshold) &&
      std::abs(r.c_b - r.second_threshold) <= rel_tol * r.second_threshold;
  if (near_first || near_second) {
    r.regime = Regime::Boundary;
  } else if (r.c_b < 1.0) {
    r.regime = Regime::BelowThreshold;
  } else if (r.c_b < r.second_threshold) {
    r.regime = Regime::StableLasing;
  } else {
    r.regime = Regime::UnstableLasing;
  }
  return r;
}

double decay_rate_delta_sys(const LaserParams& p) {
  const double c_b = cooperative_parameter(p);
  if (!(c_b < 1.0)) {
    std::ostringstream os;
    os << "decay rate is only available below threshold (C_b = " << c_b << ")";
    throw DomainError(os.str());
  }
  const double m = std::min(p.kappa(), p.gamma());
  if (p.d() < 0.0) return 0.5 * m;
  return (1.0 - c_b) * m / 3.0;
}

LaserParams params_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("params block must be a JSON object");
  auto number = [&](const char* key) -> double {
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(std::string("params.") + key + " must be a number");
    return v.get<double>();
  };
  try {
    const bool pump_form = j.contains("kappa_plus") || j.contains("kappa_minus");
    const bool decay_form = j.contains("gamma") || j.contains("d");
    if (pump_form && decay_form) {
      throw ConfigError(
          "params mixes (gamma, d) with (kappa_plus, kappa_minus); use one form");
    }
    const double omega = j.contains("omega") ? number("omega") : 0.0;
    if (pump_form) {
      return LaserParams::from_pump_rates(number("kappa"), number("kappa_plus"),
                                          number("kappa_minus"), number("g"),
                                          omega);
    }
    if (j.contains("c_b") && j.contains("g")) {
      // Written by to_json as a convenience; must then be consistent.
      const LaserParams p = LaserParams::from_decay(number("kappa"), number("gamma"),
                                                    number("d"), number("g"), omega);
      const double c_b = number("c_b");
      if (std::abs(cooperative_parameter(p) - c_b) > 1e-9 * std::max(1.0, std::abs(c_b))) {
        throw ConfigError("params gives g and c_b that disagree");
      }
      return p;
    }
    if (j.contains("c_b")) {
      return LaserParams::with_cooperative(number("kappa"), number("gamma"),
                                           number("d"), number("c_b"), omega);
    }
    return LaserParams::from_decay(number("kappa"), number("gamma"), number("d"),
                                   number("g"), omega);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("params: ") + e.what());
  }
}

nlohmann::json to_json(const LaserParams& p) {
  return nlohmann::json{{"kappa", p.kappa()}, {"gamma", p.gamma()},
                        {"d", p.d()},         {"g", p.g()},
                        {"omega", p.omega()}, {"c_b", cooperative_parameter(p)}};
}

}  // namespace lasersim
