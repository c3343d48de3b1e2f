#include "lasersim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "lasersim/kernels.hpp"

namespace lasersim {

std::string to_string(Stability s) {
  switch (s) {
    case Stability::Stable:
      return "Stable";
    case Stability::Marginal:
      return "Marginal";
    case Stability::Unstable:
      return "Unstable";
  }
  return "Unknown";
}

namespace {

std::array<Complex, 3> cubic_roots(const std::array<double, 4>& c) {
  Eigen::Matrix3d companion;
  companion << -c[1], -c[2], -c[3],
               1.0, 0.0, 0.0,
               0.0, 1.0, 0.0;
  Eigen::EigenSolver<Eigen::Matrix3d> es(companion, false);
  std::array<Complex, 3> r;
  for (int k = 0; k < 3; ++k) r[k] = es.eigenvalues()(k);
  std::sort(r.begin(), r.end(), [](Complex a, Complex b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
  });
  return r;
}

std::array<double, 4> cubic_coefficients(double kappa, double gamma, double c_b) {
  return {1.0, 3.0 * gamma + kappa, 2.0 * gamma * gamma * c_b + 2.0 * gamma * kappa,
          4.0 * kappa * gamma * gamma * (c_b - 1.0)};
}

}  // namespace

double cubic_max_real_part(double kappa, double gamma, double c_b) {
  return cubic_roots(cubic_coefficients(kappa, gamma, c_b))[0].real();
}

StabilityReport stability_at(double kappa, double gamma, double c_b, double g,
                             double marginal_tol) {
  if (!(kappa > 0.0) || !(gamma > 0.0)) throw DomainError("stability_at: need kappa, gamma > 0");
  if (!(c_b > 1.0)) throw DomainError("stability_at: the lasing point needs C_b > 1");
  if (g == 0.0) throw DomainError("stability_at: g must be nonzero");

  StabilityReport rep;
  rep.kappa = kappa;
  rep.gamma = gamma;
  rep.c_b = c_b;
  rep.hopf_threshold = second_threshold(kappa, gamma);

  const double r0 = gamma * std::sqrt(c_b - 1.0) / (std::sqrt(2.0) * std::abs(g));
  rep.jacobian << -kappa, g, 0.0, 0.0,
                  kappa * gamma / g, -gamma, 0.0, g * r0,
                  0.0, 0.0, -gamma - kappa, 0.0,
                  -4.0 * kappa * r0, -4.0 * g * r0, 0.0, -2.0 * gamma;

  rep.cubic_coeffs = cubic_coefficients(kappa, gamma, c_b);
  const auto roots = cubic_roots(rep.cubic_coeffs);
  rep.eigenvalues = {Complex(-(gamma + kappa), 0.0), roots[0], roots[1], roots[2]};

  Eigen::EigenSolver<Eigen::Matrix4d> es(rep.jacobian, false);
  for (int k = 0; k < 4; ++k) rep.jacobian_eigenvalues[k] = es.eigenvalues()(k);

  rep.max_real_part = -(gamma + kappa);
  for (const Complex& z : rep.eigenvalues) rep.max_real_part = std::max(rep.max_real_part, z.real());
  const double scale = std::max(kappa, gamma);
  if (std::abs(rep.max_real_part) <= marginal_tol * scale) {
    rep.classification = Stability::Marginal;
  } else {
    rep.classification = rep.max_real_part < 0.0 ? Stability::Stable : Stability::Unstable;
  }
  return rep;
}

HopfSearch locate_hopf(double kappa, double gamma, double c_lo, double c_hi, int scan_points,
                       double tol) {
  if (!(c_hi > c_lo) || scan_points < 2) throw DomainError("locate_hopf: bad scan range");
  HopfSearch out;
  out.closed_form = second_threshold(kappa, gamma);
  auto f = [&](double c) { return cubic_max_real_part(kappa, gamma, c); };

  double prev_c = c_lo + (c_hi - c_lo) / scan_points;
  double prev_f = f(prev_c);
  double lo = 0.0, hi = 0.0;
  for (int k = 2; k <= scan_points; ++k) {
    const double c = c_lo + (c_hi - c_lo) * k / scan_points;
    const double fc = f(c);
    if ((prev_f < 0.0) != (fc < 0.0)) {
      if (out.sign_changes == 0) {
        lo = prev_c;
        hi = c;
      }
      ++out.sign_changes;
    }
    prev_c = c;
    prev_f = fc;
  }
  if (out.sign_changes == 0) return out;

  const bool lo_negative = f(lo) < 0.0;
  while (hi - lo > tol && out.iterations < 200) {
    const double mid = 0.5 * (lo + hi);
    if ((f(mid) < 0.0) == lo_negative) {
      lo = mid;
    } else {
      hi = mid;
    }
    ++out.iterations;
  }
  out.found = true;
  out.c_b = 0.5 * (lo + hi);
  return out;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& known_bound_ids() {
  static const std::vector<std::string> ids = {"symmetric_decay", "linear_decay",
                                               "constant_drive", "voc_distance"};
  return ids;
}

double rhs_symmetric_decay(const LaserParams& p, double n0, double t) {
  return 12.0 * std::exp(-p.gamma() * t) * (1.0 + std::abs(p.d())) +
         4.0 * std::exp(-p.kappa() * t) * std::sqrt(std::max(0.0, n0));
}

double rhs_constant_drive(const LaserParams& p, Complex alpha0, double n0, double t) {
  const double k2w2 = p.kappa() * p.kappa() + p.omega() * p.omega();
  return 12.0 * std::exp(-p.gamma() * t) * (1.0 + std::abs(p.d())) +
         std::exp(-p.kappa() * t) *
             (2.0 * std::abs(alpha0) / std::sqrt(k2w2) + 4.0 * std::sqrt(std::max(0.0, n0)));
}

nlohmann::json BoundReport::to_json() const {
  nlohmann::json j;
  j["bound_id"] = bound_id;
  j["hypothesis_ok"] = hypothesis_ok;
  if (!hypothesis_note.empty()) j["hypothesis_note"] = hypothesis_note;
  j["samples_checked"] = samples_checked;
  j["violations"] = violations;
  j["worst_margin"] = worst_margin;
  return j;
}

BoundReport verify_explicit_bound(const std::string& bound_id,
                                  const std::vector<double>& times,
                                  const std::vector<DensityMatrix>& states,
                                  const DensityMatrix& target, const BoundInputs& in) {
  if (std::find(known_bound_ids().begin(), known_bound_ids().end(), bound_id) ==
      known_bound_ids().end()) {
    throw ConfigError("unknown bound id '" + bound_id + "'");
  }
  if (in.params == nullptr) throw DomainError("verify_explicit_bound: params missing");
  if (times.size() != states.size() || states.empty()) {
    throw DimensionError("verify_explicit_bound: times and states differ in length");
  }
  const LaserParams& p = *in.params;
  const DensityMatrix& rho0 = states.front();
  const double n0 = mean_photon_number(rho0);
  const double t0 = times.front();

  BoundReport rep;
  rep.bound_id = bound_id;
  auto fail = [&rep](const std::string& why) {
    rep.hypothesis_ok = false;
    rep.hypothesis_note += (rep.hypothesis_note.empty() ? "" : "; ") + why;
  };

  std::function<double(std::size_t)> rhs;
  std::vector<double> integral_terms;

  if (bound_id == "symmetric_decay" || bound_id == "linear_decay") {
    const GeneratorKind want =
        bound_id == "symmetric_decay" ? GeneratorKind::MeanField : GeneratorKind::LinearH;
    if (in.kind != want) fail("trajectory produced by the wrong generator");
    if (bound_id == "symmetric_decay") {
      const double a = std::abs(kernels::trace_a(rho0.entries, rho0.space));
      const double s = std::abs(kernels::trace_sigma_minus(rho0.entries, rho0.space));
      if (a > in.hypothesis_tol || s > in.hypothesis_tol) {
        fail("initial state has nonzero tr(a rho) or tr(sigma^- rho)");
      }
    }
    if (trace_distance(target, stationary_state(p, target.space)) > 1e-12) {
      fail("target is not the stationary state");
    }
    rhs = [&](std::size_t k) { return rhs_symmetric_decay(p, n0, times[k] - t0); };
  } else if (bound_id == "constant_drive") {
    if (in.kind != GeneratorKind::Driven) fail("trajectory not produced by a driven generator");
    if (in.drives != nullptr) {
      const double jump = max_drive_increment(*in.drives, times.back(), 0.5);
      if (jump > 0.0 || in.drives->alpha0 != in.alpha0 || in.drives->beta0 != in.beta0) {
        fail("drives are not the constants (alpha0, beta0)");
      }
    }
    const DensityMatrix eq = linear_equilibrium(p, in.alpha0, in.beta0, target.space);
    if (trace_distance(target, eq) > 1e-10) fail("target is not the driven equilibrium");
    rhs = [&](std::size_t k) { return rhs_constant_drive(p, in.alpha0, n0, times[k] - t0); };
  } else {  // voc_distance
    if (in.drives == nullptr) throw DomainError("voc_distance needs the drive functions");
    if (in.semigroup_states == nullptr || in.semigroup_states->size() != states.size()) {
      throw DimensionError("voc_distance needs R_{t-s}(rho_s) at every sample");
    }
    const DriveFunctions& dr = *in.drives;
    const DensityMatrix eq = linear_equilibrium(p, dr.alpha0, dr.beta0, target.space);
    if (trace_distance(target, eq) > 1e-10) fail("target is not the reference equilibrium");
    // Cumulative trapezoid of the two integrands on the sample grid.
    integral_terms.assign(states.size(), 0.0);
    auto integrand = [&](std::size_t k) {
      const double n = mean_photon_number(states[k]);
      return 4.0 * std::abs(dr.alpha_r(times[k])) * std::sqrt(std::max(0.0, n) + 1.0) +
             4.0 * std::abs(dr.beta_r(times[k]));
    };
    double prev = integrand(0);
    for (std::size_t k = 1; k < states.size(); ++k) {
      const double cur = integrand(k);
      integral_terms[k] = integral_terms[k - 1] + 0.5 * (prev + cur) * (times[k] - times[k - 1]);
      prev = cur;
    }
    rhs = [&](std::size_t k) {
      return trace_distance((*in.semigroup_states)[k], eq) + integral_terms[k];
    };
  }

  for (std::size_t k = 0; k < states.size(); ++k) {
    const double l = trace_distance(states[k], target);
    const double r = rhs(k);
    rep.times.push_back(times[k]);
    rep.lhs.push_back(l);
    rep.rhs.push_back(r);
    rep.worst_margin = std::min(rep.worst_margin, r - l);
    if (l > r + in.absolute_slack) ++rep.violations;
    ++rep.samples_checked;
  }
  return rep;
}

// ---------------------------------------------------------------------------

RateFit fit_decay_rate(const ObservableSeries& series, double reference_rate) {
  const std::size_t n = series.values.size();
  if (series.times.size() != n) throw DimensionError("fit_decay_rate: ragged series");
  // The transient is a fraction of the samples still above the floor, so a
  // fast decay that reaches the floor early still leaves a window.
  std::size_t last = 0;
  while (last < n && series.values[last] >= kRateFitFloor) ++last;
  const std::size_t first = static_cast<std::size_t>(std::ceil(kRateFitTransient * last));
  if (last < first + 2) {
    throw DomainError("fit_decay_rate: fewer than two samples in the fit window of '" +
                      series.name + "'");
  }
  const std::size_t m = last - first;
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  for (std::size_t k = first; k < last; ++k) {
    const double t = series.times[k];
    const double y = std::log(series.values[k]);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
  }
  const double denom = m * stt - st * st;
  if (!(denom > 0.0)) throw DomainError("fit_decay_rate: degenerate time window");
  const double slope = (m * sty - st * sy) / denom;
  const double icpt = (sy - slope * st) / m;
  double ss = 0.0;
  for (std::size_t k = first; k < last; ++k) {
    const double e = std::log(series.values[k]) - (icpt + slope * series.times[k]);
    ss += e * e;
  }
  RateFit fit;
  fit.fitted_rate = -slope;
  fit.t_lo = series.times[first];
  fit.t_hi = series.times[last - 1];
  fit.residual = std::sqrt(ss / m);
  fit.reference_rate = reference_rate;
  fit.points = static_cast<int>(m);
  return fit;
}

// ---------------------------------------------------------------------------

MBState means(const DensityMatrix& rho) {
  const CMatrix atom = partial_trace_field(rho.entries, rho.space);
  return MBState{kernels::trace_a(rho.entries, rho.space),
                 kernels::trace_sigma_minus(rho.entries, rho.space),
                 (atom(kPlus, kPlus) - atom(kMinus, kMinus)).real()};
}

EhrenfestReport ehrenfest_check(const DensityMatrix& rho0, const LaserParams& p,
                                double t_end, double dt, int sample_every,
                                bool rotating_frame) {
  const LaserParams frame = rotating_frame ? p.with_omega(0.0) : p;
  EvolveOptions opt;
  opt.dt = dt;
  opt.t_end = t_end;
  opt.sample_every = sample_every;
  opt.keep_states = false;

  EhrenfestReport rep;
  const EvolveResult run = evolve(rho0, Generator::mean_field(p, rotating_frame), opt,
                                  [&rep](double t, const DensityMatrix& rho) {
                                    rep.times.push_back(t);
                                    rep.quantum.push_back(means(rho));
                                  });
  rep.worst = run.worst;
  const MBTrajectory mb = integrate_mb(means(rho0), frame, t_end, run.dt, sample_every);
  if (mb.states.size() != rep.quantum.size()) {
    throw DimensionError("ehrenfest_check: sample grids differ");
  }
  rep.classical = mb.states;
  for (std::size_t k = 0; k < rep.quantum.size(); ++k) {
    rep.max_deviation = std::max(rep.max_deviation, max_abs_diff(rep.quantum[k], rep.classical[k]));
  }
  return rep;
}

VocResult voc_residual(const DensityMatrix& rho0, const LaserParams& p,
                       const DriveFunctions& drives, double t, double s, int quad_points,
                       double dt) {
  if (!(t >= s) || !(s >= 0.0)) throw DomainError("voc_residual: need t >= s >= 0");
  if (quad_points < 2 || quad_points % 2 != 0) {
    throw DomainError("voc_residual: Simpson needs an even number of panels");
  }
  if (!(dt > 0.0)) throw DomainError("voc_residual: dt must be positive");

  const Generator driven = Generator::driven(p, drives);
  VocResult res;
  res.quad_points = quad_points;

  EvolveOptions head;
  head.dt = dt;
  head.t_end = s;
  head.keep_states = false;
  head.sample_every = std::numeric_limits<int>::max();
  const EvolveResult pre = evolve(rho0, driven, head);
  const DensityMatrix rho_s = pre.final_state;
  res.worst = pre.worst;

  if (t == s) {
    res.direct = rho_s;
    res.reconstructed = rho_s;
    res.dt = pre.dt;
    res.residual = 0.0;
    return res;
  }

  const double h = (t - s) / quad_points;
  const int per_panel = std::max(1, static_cast<int>(std::ceil(h / dt - 1e-9)));
  const double step = h / per_panel;
  res.dt = step;

  EvolveOptions body;
  body.dt = step;
  body.t0 = s;
  body.t_end = t - s;
  body.sample_every = per_panel;
  body.keep_states = true;
  const EvolveResult run = evolve(rho_s, driven, body);
  if (static_cast<int>(run.states.size()) != quad_points + 1) {
    throw DimensionError("voc_residual: quadrature nodes do not match the samples");
  }
  res.direct = run.final_state;
  res.worst.hermiticity_error = std::max(res.worst.hermiticity_error, run.worst.hermiticity_error);
  res.worst.trace_error = std::max(res.worst.trace_error, run.worst.trace_error);
  res.worst.min_eigenvalue = std::min(res.worst.min_eigenvalue, run.worst.min_eigenvalue);
  res.worst.top_leakage = std::max(res.worst.top_leakage, run.worst.top_leakage);

  const SpaceSpec space = rho0.space;
  const Generator semigroup = Generator::autonomous(p, drives.alpha0, drives.beta0);
  auto forcing = [&](int k) {
    GeneratorCoefficients c;  // zero rates leave only the drive commutator
    c.alpha = drives.alpha_r(run.times[k]);
    c.beta = drives.beta_r(run.times[k]);
    CMatrix out;
    kernels::apply_generator(run.states[k].entries, space, c, out);
    return out;
  };
  auto weight = [&](int k) {
    const double w = (k == 0 || k == quad_points) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    return w * h / 3.0;
  };

  // Horner-style accumulation: Y_k = R_h(Y_{k-1}) + w_k F_k.
  CMatrix y = rho_s.entries + weight(0) * forcing(0);
  for (int k = 1; k <= quad_points; ++k) {
    y = propagate(y, semigroup, space, 0.0, h, step);
    y += weight(k) * forcing(k);
  }
  res.reconstructed = DensityMatrix{y, space, t};
  res.residual = trace_distance(res.direct, res.reconstructed);
  return res;
}

ThetaTrackingReport theta_tracking_check(const DensityMatrix& rho0, const LaserParams& p,
                                         const ThetaTrackingOptions& opt) {
  const LaserParams frame = p.with_omega(0.0);
  const RegimeReport regime = classify_regime(frame);
  if (regime.regime != Regime::StableLasing) {
    throw DomainError("theta_tracking_check requires the stable lasing regime, got " +
                      to_string(regime.regime));
  }

  const MBState m0 = means(rho0);
  const PolarMBState q = to_polar(m0, frame);
  const double r0 = lasing_amplitude(frame);
  const double c_b = cooperative_parameter(frame);
  const double gaps[] = {std::abs(q.r - r0), std::abs(q.s_r - frame.kappa() * r0 / frame.g()),
                         std::abs(q.s_i), std::abs(q.d_r - frame.d() * (1.0 / c_b - 1.0))};
  for (double gap : gaps) {
    if (gap > opt.epsilon) {
      std::ostringstream os;
      os << "initial means are " << gap << " away from the lasing circle (epsilon = "
         << opt.epsilon << ")";
      throw DomainError(os.str());
    }
  }

  ThetaTrackingReport rep;
  rep.theta_detail = theta_infinity(m0, frame, opt.theta);
  rep.theta = rep.theta_detail.theta;
  const DensityMatrix cycle = limit_cycle_state(frame, 0.0, rep.theta, rho0.space);
  const OperatorMatrix test_op = tensor_embed(
      field_number(rho0.space.n_max), atom_sigma_plus() + atom_sigma_minus(), rho0.space);
  const Complex cycle_mean = mean_value(cycle, test_op);

  rep.distance.name = "trace_distance_to_cycle";
  rep.gap.name = "test_operator_gap";
  EvolveOptions eo;
  eo.dt = opt.dt;
  eo.t_end = opt.t_end;
  eo.sample_every = opt.sample_every;
  eo.keep_states = false;
  const EvolveResult run =
      evolve(rho0, Generator::mean_field(frame, true), eo, [&](double t, const DensityMatrix& rho) {
        rep.distance.times.push_back(t);
        rep.distance.values.push_back(trace_distance(rho, cycle));
        rep.gap.times.push_back(t);
        rep.gap.values.push_back(std::abs(mean_value(rho, test_op) - cycle_mean));
      });
  rep.worst = run.worst;
  rep.final_state = run.final_state;
  rep.initial_distance = rep.distance.values.front();
  rep.final_distance = rep.distance.values.back();
  rep.distance_fit = fit_decay_rate(rep.distance);
  rep.gap_fit = fit_decay_rate(rep.gap);
  rep.tracking_ok = rep.final_distance < rep.initial_distance &&
                    rep.distance_fit.fitted_rate > 0.0 && rep.gap_fit.fitted_rate > 0.0;
  return rep;
}

TruncationStudy truncation_study(const std::function<std::vector<double>(int)>& experiment,
                                 const std::vector<int>& n_max_list, double tol) {
  if (n_max_list.size() < 2) throw DomainError("truncation_study needs at least two cutoffs");
  TruncationStudy st;
  for (int n : n_max_list) {
    try {
      st.observables.push_back(experiment(n));
      st.n_max.push_back(n);
    } catch (const NumericalError& e) {
      st.aborted.push_back("n_max=" + std::to_string(n) + ": " + e.what());
    }
  }
  for (std::size_t i = 0; i < st.observables.size(); ++i) {
    for (std::size_t j = i + 1; j < st.observables.size(); ++j) {
      const auto& a = st.observables[i];
      const auto& b = st.observables[j];
      if (a.size() != b.size()) throw DimensionError("truncation_study: ragged observables");
      for (std::size_t k = 0; k < a.size(); ++k) {
        st.max_deviation = std::max(st.max_deviation, std::abs(a[k] - b[k]));
      }
    }
  }
  st.converged = st.aborted.empty() && st.max_deviation <= tol;
  return st;
}

}  // namespace lasersim
