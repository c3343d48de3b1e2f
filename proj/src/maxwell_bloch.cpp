#include "lasersim/maxwell_bloch.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "lasersim/io.hpp"

namespace lasersim {

namespace {

bool finite(const MBState& s) {
  return std::isfinite(s.A.real()) && std::isfinite(s.A.imag()) &&
         std::isfinite(s.S.real()) && std::isfinite(s.S.imag()) &&
         std::isfinite(s.D);
}

int step_count(double t_end, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("dt must be > 0");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw DomainError("t_end must be >= 0");
  if (t_end == 0.0) return 0;
  return std::max(1, static_cast<int>(std::ceil(t_end / dt - 1e-9)));
}

PolarMBState axpy(const PolarMBState& x, double h, const PolarMBState& k) {
  return PolarMBState{x.r + h * k.r, x.phi + h * k.phi, x.s_r + h * k.s_r,
                      x.s_i + h * k.s_i, x.d_r + h * k.d_r};
}

// Composite Simpson on a uniform grid; an odd interval count closes with the
// 3/8 rule on the last three intervals.
double simpson(const std::vector<double>& f, double h) {
  const std::size_t n = f.size() - 1;  // intervals
  if (n == 0) return 0.0;
  if (n == 1) return 0.5 * h * (f[0] + f[1]);
  std::size_t m = (n % 2 == 0) ? n : n - 3;
  double s = 0.0;
  if (m > 0) {
    s = f[0] + f[m];
    for (std::size_t i = 1; i < m; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * f[i];
    s *= h / 3.0;
  }
  if (m != n) {
    s += 3.0 * h / 8.0 * (f[m] + 3.0 * f[m + 1] + 3.0 * f[m + 2] + f[m + 3]);
  }
  return s;
}

}  // namespace

double max_abs_diff(const MBState& x, const MBState& y) {
  return std::max({std::abs(x.A - y.A), std::abs(x.S - y.S), std::abs(x.D - y.D)});
}

bool bloch_admissible(const MBState& s, double slack) {
  return std::abs(s.D) <= 1.0 + slack && std::abs(s.S) <= 0.5 + slack;
}

MBState mb_rhs(const MBState& s, const LaserParams& p) {
  const double g = p.g();
  const Complex iw(0.0, p.omega());
  return MBState{
      -(p.kappa() + iw) * s.A + g * s.S,
      -(p.gamma() + iw) * s.S + g * s.A * s.D,
      -4.0 * g * (std::conj(s.A) * s.S).real() - 2.0 * p.gamma() * (s.D - p.d()),
  };
}

MBState mb_step(const MBState& s, const LaserParams& p, double dt) {
  const MBState k1 = mb_rhs(s, p);
  const MBState k2 = mb_rhs(s + (0.5 * dt) * k1, p);
  const MBState k3 = mb_rhs(s + (0.5 * dt) * k2, p);
  const MBState k4 = mb_rhs(s + dt * k3, p);
  return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double default_mb_dt(const LaserParams& p) {
  return 1e-3 / std::max({p.kappa(), p.gamma(), std::abs(p.g()),
                          std::abs(p.omega()), 1.0});
}

MBTrajectory integrate_mb(const MBState& s0, const LaserParams& p, double t_end,
                          double dt, int sample_every) {
  if (sample_every < 1) throw DomainError("sample_every must be >= 1");
  const int n = step_count(t_end, dt);
  const double h = n > 0 ? t_end / n : dt;
  MBTrajectory traj;
  traj.meta = MBIntegratorSettings{h, t_end, sample_every};
  traj.times.push_back(0.0);
  traj.states.push_back(s0);
  MBState s = s0;
  for (int k = 1; k <= n; ++k) {
    s = mb_step(s, p, h);
    if (!finite(s)) {
      std::ostringstream os;
      os << "Maxwell-Bloch state became non-finite at t = " << k * h;
      throw SingularTrajectoryError(os.str());
    }
    if (k % sample_every == 0 || k == n) {
      traj.times.push_back(k == n ? t_end : k * h);
      traj.states.push_back(s);
    }
  }
  return traj;
}

void write_csv(std::ostream& os, const MBTrajectory& traj) {
  CsvWriter csv(os, {"t", "re_A", "im_A", "re_S", "im_S", "D"});
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const MBState& s = traj.states[i];
    csv.row({traj.times[i], s.A.real(), s.A.imag(), s.S.real(), s.S.imag(), s.D});
  }
}

double lasing_amplitude(const LaserParams& p) {
  const double c_b = cooperative_parameter(p);
  if (c_b <= 1.0) return 0.0;
  return p.gamma() * std::sqrt(c_b - 1.0) / (std::sqrt(2.0) * std::abs(p.g()));
}

std::vector<MBEquilibrium> mb_equilibria(const LaserParams& p) {
  std::vector<MBEquilibrium> out;
  out.push_back(MBEquilibrium{MBState{0.0, 0.0, p.d()}, false});
  if (p.omega() == 0.0 && cooperative_parameter(p) > 1.0) {
    const double r0 = lasing_amplitude(p);
    const double g = p.g();
    out.push_back(MBEquilibrium{
        MBState{r0, p.kappa() * r0 / g, p.gamma() * p.kappa() / (g * g)}, true});
  }
  return out;
}

PolarMBState to_polar(const MBState& s, const LaserParams& p) {
  PolarMBState q;
  q.r = std::abs(s.A);
  q.phi = std::arg(s.A);
  const Complex rot = s.S * std::exp(Complex(0.0, -q.phi));
  q.s_r = rot.real();
  q.s_i = rot.imag();
  q.d_r = s.D - p.d();
  return q;
}

MBState from_polar(const PolarMBState& q, const LaserParams& p) {
  const Complex e = std::exp(Complex(0.0, q.phi));
  return MBState{q.r * e, Complex(q.s_r, q.s_i) * e, q.d_r + p.d()};
}

PolarMBState polar_rhs(const PolarMBState& q, const LaserParams& p) {
  if (!(q.r >= kAmplitudeFloor)) {
    std::ostringstream os;
    os << "field amplitude r = " << q.r << " fell below the floor " << kAmplitudeFloor;
    throw SingularTrajectoryError(os.str());
  }
  const double g = p.g();
  const double inv_r = 1.0 / q.r;
  PolarMBState dq;
  dq.r = -p.kappa() * q.r + g * q.s_r;
  dq.phi = -p.omega() + g * q.s_i * inv_r;
  dq.s_r = -p.gamma() * q.s_r + g * q.r * (q.d_r + p.d()) + g * q.s_i * q.s_i * inv_r;
  dq.s_i = -p.gamma() * q.s_i - g * q.s_i * q.s_r * inv_r;
  dq.d_r = -2.0 * p.gamma() * q.d_r - 4.0 * g * q.r * q.s_r;
  return dq;
}

std::vector<PolarMBState> integrate_polar(const PolarMBState& s0,
                                          const LaserParams& p, double t_end,
                                          double dt, int sample_every) {
  if (sample_every < 1) throw DomainError("sample_every must be >= 1");
  const int n = step_count(t_end, dt);
  const double h = n > 0 ? t_end / n : dt;
  std::vector<PolarMBState> out{s0};
  PolarMBState q = s0;
  for (int k = 1; k <= n; ++k) {
    const PolarMBState k1 = polar_rhs(q, p);
    const PolarMBState k2 = polar_rhs(axpy(q, 0.5 * h, k1), p);
    const PolarMBState k3 = polar_rhs(axpy(q, 0.5 * h, k2), p);
    const PolarMBState k4 = polar_rhs(axpy(q, h, k3), p);
    q.r += h / 6.0 * (k1.r + 2.0 * k2.r + 2.0 * k3.r + k4.r);
    q.phi += h / 6.0 * (k1.phi + 2.0 * k2.phi + 2.0 * k3.phi + k4.phi);
    q.s_r += h / 6.0 * (k1.s_r + 2.0 * k2.s_r + 2.0 * k3.s_r + k4.s_r);
    q.s_i += h / 6.0 * (k1.s_i + 2.0 * k2.s_i + 2.0 * k3.s_i + k4.s_i);
    q.d_r += h / 6.0 * (k1.d_r + 2.0 * k2.d_r + 2.0 * k3.d_r + k4.d_r);
    if (k % sample_every == 0 || k == n) out.push_back(q);
  }
  return out;
}

double wrap_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(theta, two_pi);
  if (w < 0.0) w += two_pi;
  if (w >= two_pi) w = 0.0;
  return w;
}

ThetaResult theta_infinity(const MBState& s0, const LaserParams& p_in,
                           const ThetaOptions& opt) {
  if (s0.A == Complex(0.0, 0.0)) {
    throw DomainError("theta_infinity: A(0) = 0 has no phase");
  }
  const LaserParams p = p_in.with_omega(0.0);
  const double m = std::min(p.kappa(), p.gamma());
  const double dt = opt.dt > 0.0 ? opt.dt : default_mb_dt(p);
  const double t_start = opt.t_start > 0.0 ? opt.t_start : 50.0 / m;
  const double t_limit = opt.t_limit > 0.0 ? opt.t_limit : 64.0 * t_start;
  const double window = opt.window > 0.0 ? opt.window : 10.0 / m;

  auto integrand = [&](const MBState& s, double t) {
    if (std::abs(s.A) < kAmplitudeFloor) {
      std::ostringstream os;
      os << "theta_infinity: |A| = " << std::abs(s.A) << " below floor at t = " << t;
      throw SingularTrajectoryError(os.str());
    }
    return (s.S / s.A).imag();
  };

  // Fixed step so that grid points are shared across doublings.
  const int steps_start = std::max(2, static_cast<int>(std::ceil(t_start / dt - 1e-9)));
  const double h = t_start / steps_start;
  const int window_steps = std::max(1, static_cast<int>(std::ceil(window / h)));

  std::vector<double> f{integrand(s0, 0.0)};
  MBState s = s0;
  ThetaResult res;
  double t_max = t_start;
  for (;;) {
    const auto target = static_cast<std::size_t>(std::llround(t_max / h));
    while (f.size() - 1 < target) {
      s = mb_step(s, p, h);
      if (!finite(s)) throw SingularTrajectoryError("theta_infinity: non-finite state");
      f.push_back(integrand(s, static_cast<double>(f.size()) * h));
    }
    const bool quiet =
        f.size() > static_cast<std::size_t>(window_steps) &&
        std::all_of(f.end() - window_steps, f.end(),
                    [&](double v) { return std::abs(v) < opt.integrand_tol; });
    if (quiet) break;
    if (2.0 * t_max > t_limit * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "theta_infinity: Im(S/A) did not settle below " << opt.integrand_tol
         << " by t = " << t_max;
      throw ConvergenceError(os.str());
    }
    t_max *= 2.0;
    ++res.doublings;
  }

  // The flow must sit on the lasing circle.
  const double c_b = cooperative_parameter(p);
  const double r0 = lasing_amplitude(p);
  const double dist = c_b > 1.0
                          ? std::max({std::abs(std::abs(s.A) - r0),
                                      std::abs(s.S - p.kappa() / p.g() * s.A),
                                      std::abs(s.D - p.d() / c_b)})
                          : std::numeric_limits<double>::infinity();
  if (!(dist < opt.convergence_tol)) {
    std::ostringstream os;
    os << "theta_infinity: trajectory did not converge to the lasing circle "
          "(distance "
       << dist << ")";
    throw ConvergenceError(os.str());
  }

  res.integral = simpson(f, h);
  res.t_final = static_cast<double>(f.size() - 1) * h;
  res.theta = wrap_angle(std::arg(s0.A) + p.g() * res.integral);
  return res;
}

LyapunovReport lyapunov_certificates(const MBTrajectory& traj, const LaserParams& p,
                                     double rel_slack) {
  if (traj.states.empty()) throw DomainError("empty trajectory");
  LyapunovReport rep;
  const double kappa = p.kappa();
  const double gamma = p.gamma();
  const double d = p.d();
  const double g2 = p.g() * p.g();
  const double m = std::min(kappa, gamma);
  const double c_b = cooperative_parameter(p);
  const double t0 = traj.times.front();
  const MBState& s0 = traj.states.front();

  auto check = [&](LyapunovCertificate& cert, double lhs, double rhs) {
    const bool ok = lhs <= rhs * (1.0 + rel_slack) + 1e-300;
    cert.lhs.push_back(lhs);
    cert.rhs.push_back(rhs);
    cert.holds.push_back(ok);
    cert.all_hold = cert.all_hold && ok;
  };

  auto energy = [&](const MBState& s) {
    const double dd = s.D - d;
    if (d < 0.0) return 4.0 * std::abs(d) * std::norm(s.A) + 4.0 * std::norm(s.S) + dd * dd;
    return std::norm(s.A) + g2 / (gamma * kappa) * std::norm(s.S) +
           g2 / (4.0 * gamma * kappa) * dd * dd;
  };
  const double energy_rate =
      d < 0.0 ? 2.0 * m : std::min(kappa - g2 * d / gamma, gamma - g2 * d / kappa);
  const double e0 = energy(s0);

  rep.sharpened_applicable = d >= 0.0 && c_b < 1.0;
  const double sharp_rate = (1.0 - c_b) * m;
  const double dd0 = s0.D - d;
  const double sharp0 = 4.0 * kappa * d / gamma * std::norm(s0.A) +
                        (4.0 * kappa / gamma + 1.0) * std::norm(s0.S) +
                        (kappa / gamma + 0.25) * dd0 * dd0;

  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const double t = traj.times[i] - t0;
    const MBState& s = traj.states[i];
    check(rep.energy, energy(s), std::exp(-energy_rate * t) * e0);
    if (rep.sharpened_applicable) {
      const double dd = s.D - d;
      check(rep.sharpened, std::norm(s.S) + 0.25 * dd * dd,
            std::exp(-sharp_rate * t) * sharp0);
    }
  }
  return rep;
}

MBInterpolant::MBInterpolant(MBTrajectory traj, LaserParams p)
    : traj_(std::move(traj)), p_(p) {
  if (traj_.times.size() < 2) throw DomainError("interpolant needs >= 2 samples");
  slopes_.reserve(traj_.states.size());
  for (const auto& s : traj_.states) slopes_.push_back(mb_rhs(s, p_));
}

MBState MBInterpolant::operator()(double t) const {
  const auto& ts = traj_.times;
  const double span = ts.back() - ts.front();
  if (t < ts.front() - 1e-12 * span || t > ts.back() + 1e-12 * span) {
    std::ostringstream os;
    os << "MB interpolant queried at t = " << t << " outside [" << ts.front() << ", "
       << ts.back() << "]";
    throw DomainError(os.str());
  }
  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  std::size_t k = it == ts.begin() ? 0 : static_cast<std::size_t>(it - ts.begin()) - 1;
  if (k >= ts.size() - 1) k = ts.size() - 2;
  const double h = ts[k + 1] - ts[k];
  const double x = (t - ts[k]) / h;
  const double x2 = x * x;
  const double x3 = x2 * x;
  const double h00 = 2 * x3 - 3 * x2 + 1;
  const double h10 = x3 - 2 * x2 + x;
  const double h01 = -2 * x3 + 3 * x2;
  const double h11 = x3 - x2;
  return h00 * traj_.states[k] + (h10 * h) * slopes_[k] + h01 * traj_.states[k + 1] +
         (h11 * h) * slopes_[k + 1];
}

}  // namespace lasersim
