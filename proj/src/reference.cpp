#include "lasersim/kernels.hpp"

namespace lasersim::reference {

namespace {

CMatrix dissipator(const CMatrix& L, const CMatrix& rho) {
  const CMatrix LdL = L.adjoint() * L;
  return L * rho * L.adjoint() - 0.5 * (LdL * rho + rho * LdL);
}

}  // namespace

CMatrix apply_generator(const CMatrix& rho, const OperatorSet& ops,
                        const GeneratorCoefficients& c) {
  const CMatrix& a = ops.a.entries;
  const CMatrix& ad = ops.a_dag.entries;
  const CMatrix& sp = ops.sigma_plus.entries;
  const CMatrix& sm = ops.sigma_minus.entries;

  const CMatrix h0 = 0.5 * c.omega * (2.0 * ops.number.entries + ops.sigma_z.entries);
  const CMatrix drive = c.alpha * ad - std::conj(c.alpha) * a +
                        std::conj(c.beta) * sm - c.beta * sp;

  CMatrix out = -kI * (h0 * rho - rho * h0);
  out += 2.0 * c.kappa * dissipator(a, rho);
  out += c.gamma * (1.0 - c.d) * dissipator(sm, rho);
  out += c.gamma * (1.0 + c.d) * dissipator(sp, rho);
  out += drive * rho - rho * drive;
  return out;
}

}  // namespace lasersim::reference
