#include "lasersim/density.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

namespace lasersim {

DensityMatrix DensityMatrix::from_pure(const StateVector& psi) {
  return DensityMatrix{psi.amplitudes * psi.amplitudes.adjoint(), psi.space, {}};
}

DensityMatrix DensityMatrix::product(const CMatrix& field, const CMatrix& atom,
                                     const SpaceSpec& space) {
  if (field.rows() != space.fock_dim() || atom.rows() != 2) {
    throw DimensionError("DensityMatrix::product: sizes do not match the space");
  }
  return DensityMatrix{Eigen::kroneckerProduct(field, atom).eval(), space, {}};
}

bool DensityDiagnostics::ok(const DensityTolerances& tol) const {
  return hermiticity_error <= tol.hermiticity && trace_error <= tol.trace &&
         min_eigenvalue >= tol.min_eigenvalue && top_leakage <= tol.leakage;
}

double top_level_population(const CMatrix& rho, const SpaceSpec& space) {
  double pop = 0.0;
  for (int n = std::max(0, space.n_max - 1); n <= space.n_max; ++n) {
    for (int s = 0; s < 2; ++s) {
      const int i = SpaceSpec::index(n, s);
      pop += rho(i, i).real();
    }
  }
  return pop;
}

DensityDiagnostics diagnose(const CMatrix& rho, const SpaceSpec& space,
                            bool with_spectrum) {
  DensityDiagnostics d;
  d.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  d.trace_error = std::abs(rho.trace() - Complex(1.0, 0.0));
  d.top_leakage = top_level_population(rho, space);
  if (with_spectrum) {
    const CMatrix herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(herm, Eigen::EigenvaluesOnly);
    d.min_eigenvalue = es.eigenvalues().minCoeff();
  }
  return d;
}

void require_valid(const DensityMatrix& rho, const DensityTolerances& tol) {
  if (rho.entries.rows() != rho.space.dim() || rho.entries.cols() != rho.space.dim()) {
    throw DimensionError("density matrix size does not match its space");
  }
  const DensityDiagnostics d = diagnose(rho.entries, rho.space);
  std::ostringstream os;
  if (rho.time_tag) os << "at t = " << *rho.time_tag << ": ";
  if (d.top_leakage > tol.leakage) {
    os << "top Fock levels hold " << d.top_leakage << " > " << tol.leakage
       << "; increase n_max";
    throw TruncationError(os.str());
  }
  if (d.hermiticity_error > tol.hermiticity) {
    os << "hermiticity error " << d.hermiticity_error;
    throw InvariantError(os.str());
  }
  if (d.trace_error > tol.trace) {
    os << "trace error " << d.trace_error;
    throw InvariantError(os.str());
  }
  if (d.min_eigenvalue < tol.min_eigenvalue) {
    os << "minimum eigenvalue " << d.min_eigenvalue;
    throw InvariantError(os.str());
  }
}

CMatrix atom_state(double p_plus, Complex coherence) {
  CMatrix a(2, 2);
  a(kPlus, kPlus) = p_plus;
  a(kPlus, kMinus) = coherence;
  a(kMinus, kPlus) = std::conj(coherence);
  a(kMinus, kMinus) = 1.0 - p_plus;
  return a;
}

CMatrix partial_trace_atom(const CMatrix& rho, const SpaceSpec& space) {
  const int nf = space.fock_dim();
  CMatrix f = CMatrix::Zero(nf, nf);
  for (int n = 0; n < nf; ++n)
    for (int m = 0; m < nf; ++m)
      for (int s = 0; s < 2; ++s)
        f(n, m) += rho(SpaceSpec::index(n, s), SpaceSpec::index(m, s));
  return f;
}

CMatrix partial_trace_field(const CMatrix& rho, const SpaceSpec& space) {
  CMatrix a = CMatrix::Zero(2, 2);
  for (int n = 0; n < space.fock_dim(); ++n)
    for (int s = 0; s < 2; ++s)
      for (int t = 0; t < 2; ++t)
        a(s, t) += rho(SpaceSpec::index(n, s), SpaceSpec::index(n, t));
  return a;
}

}  // namespace lasersim
