#include "lasersim/observables.hpp"

#include <cmath>
#include <regex>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "lasersim/closed_forms.hpp"
#include "lasersim/kernels.hpp"

namespace lasersim {

Complex mean_value(const CMatrix& rho, const CMatrix& op) {
  if (rho.rows() != op.rows() || rho.cols() != op.cols() || rho.rows() != rho.cols()) {
    throw DimensionError("mean_value: operator and state sizes differ");
  }
  // tr(rho A) = sum_ij rho_ij A_ji without forming the product.
  return (rho.transpose().cwiseProduct(op)).sum();
}

Complex mean_value(const DensityMatrix& rho, const OperatorMatrix& op) {
  if (!(rho.space == op.space)) throw DimensionError("mean_value: spaces differ");
  return mean_value(rho.entries, op.entries);
}

std::vector<double> photon_distribution(const DensityMatrix& rho) {
  const SpaceSpec& s = rho.space;
  std::vector<double> p(s.fock_dim(), 0.0);
  for (int n = 0; n < s.fock_dim(); ++n) {
    for (int a = 0; a < 2; ++a) {
      const int i = SpaceSpec::index(n, a);
      p[n] += rho.entries(i, i).real();
    }
  }
  return p;
}

namespace {

Complex trace_a_squared(const CMatrix& rho, const SpaceSpec& space) {
  Complex acc = 0.0;
  for (int n = 0; n + 2 <= space.n_max; ++n) {
    const double w = std::sqrt(static_cast<double>((n + 1) * (n + 2)));
    for (int s = 0; s < 2; ++s) {
      acc += w * rho(SpaceSpec::index(n + 2, s), SpaceSpec::index(n, s));
    }
  }
  return acc;
}

double mean_number(const CMatrix& rho, const SpaceSpec& space) {
  double acc = 0.0;
  for (int n = 1; n <= space.n_max; ++n) {
    for (int s = 0; s < 2; ++s) {
      const int i = SpaceSpec::index(n, s);
      acc += n * rho(i, i).real();
    }
  }
  return acc;
}

}  // namespace

double mean_photon_number(const DensityMatrix& rho) {
  return mean_number(rho.entries, rho.space);
}

QuadratureVariances quadrature_variances(const DensityMatrix& rho) {
  const Complex a = kernels::trace_a(rho.entries, rho.space);
  const Complex a2 = trace_a_squared(rho.entries, rho.space);
  const double n = mean_number(rho.entries, rho.space);
  QuadratureVariances v;
  v.var_q = a2.real() + n + 0.5 - 2.0 * a.real() * a.real();
  v.var_p = n + 0.5 - a2.real() - 2.0 * a.imag() * a.imag();
  return v;
}

EntropyReport entropies(const CMatrix& rho) {
  const CMatrix herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(herm, Eigen::EigenvaluesOnly);
  EntropyReport r;
  r.linear_entropy = 1.0 - herm.squaredNorm();
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const double lam = es.eigenvalues()(k);
    if (lam < 0.0) {
      r.clipped_mass += -lam;
    } else if (lam > 0.0) {
      r.von_neumann -= lam * std::log(lam);
    }
  }
  if (r.clipped_mass > kClippedMassBudget) {
    std::ostringstream os;
    os << "negative spectral mass " << r.clipped_mass << " exceeds " << kClippedMassBudget;
    throw PositivityError(os.str());
  }
  return r;
}

EntropyReport entropies(const DensityMatrix& rho) { return entropies(rho.entries); }

double trace_distance(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("trace_distance: sizes differ");
  }
  const CMatrix diff = a - b;
  const CMatrix herm = 0.5 * (diff + diff.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (!(a.space == b.space)) throw DimensionError("trace_distance: spaces differ");
  return trace_distance(a.entries, b.entries);
}

double trace_norm(const CMatrix& m) {
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues().sum();
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  const std::size_t n = std::max(p.size(), q.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = k < p.size() ? p[k] : 0.0;
    const double y = k < q.size() ? q[k] : 0.0;
    acc += std::abs(x - y);
  }
  return 0.5 * acc;
}

std::vector<double> poisson_weights(double mean, int n_max) {
  std::vector<double> w(n_max + 1);
  double term = std::exp(-mean);
  for (int n = 0; n <= n_max; ++n) {
    w[n] = term;
    term *= mean / (n + 1);
  }
  return w;
}

namespace {

const std::regex& pn_pattern() {
  static const std::regex re(R"(p\((\d+)\))");
  return re;
}

}  // namespace

bool ObservableSet::is_known(const std::string& name) {
  static const char* kNames[] = {"trace_distance_to_stationary", "mean_photon", "varQ",
                                 "varP", "linear_entropy", "von_neumann", "inversion",
                                 "re_A", "im_A", "abs_A", "re_S", "im_S", "abs_S"};
  for (const char* k : kNames) {
    if (name == k) return true;
  }
  return std::regex_match(name, pn_pattern());
}

ObservableSet::ObservableSet(std::vector<std::string> names, const LaserParams& p,
                             const SpaceSpec& space)
    : names_(std::move(names)), stationary_(stationary_state(p, space)) {
  for (const auto& n : names_) {
    if (!is_known(n)) throw ConfigError("unknown observable '" + n + "'");
    std::smatch m;
    if (std::regex_match(n, m, pn_pattern()) && std::stoi(m[1]) > space.n_max) {
      throw ConfigError("observable '" + n + "' is above n_max");
    }
  }
}

std::vector<double> ObservableSet::evaluate(const DensityMatrix& rho) const {
  std::vector<double> out;
  out.reserve(names_.size());
  const CMatrix& r = rho.entries;
  for (const auto& name : names_) {
    std::smatch m;
    if (name == "trace_distance_to_stationary") {
      out.push_back(trace_distance(rho, stationary_));
    } else if (name == "mean_photon") {
      out.push_back(mean_number(r, rho.space));
    } else if (name == "varQ") {
      out.push_back(quadrature_variances(rho).var_q);
    } else if (name == "varP") {
      out.push_back(quadrature_variances(rho).var_p);
    } else if (name == "linear_entropy") {
      out.push_back(entropies(rho).linear_entropy);
    } else if (name == "von_neumann") {
      out.push_back(entropies(rho).von_neumann);
    } else if (name == "inversion") {
      const CMatrix atom = partial_trace_field(r, rho.space);
      out.push_back((atom(kPlus, kPlus) - atom(kMinus, kMinus)).real());
    } else if (name == "re_A" || name == "im_A" || name == "abs_A") {
      const Complex a = kernels::trace_a(r, rho.space);
      out.push_back(name == "re_A" ? a.real() : name == "im_A" ? a.imag() : std::abs(a));
    } else if (name == "re_S" || name == "im_S" || name == "abs_S") {
      const Complex s = kernels::trace_sigma_minus(r, rho.space);
      out.push_back(name == "re_S" ? s.real() : name == "im_S" ? s.imag() : std::abs(s));
    } else if (std::regex_match(name, m, pn_pattern())) {
      const int n = std::stoi(m[1]);
      out.push_back(photon_distribution(rho)[n]);
    }
  }
  return out;
}

}  // namespace lasersim
