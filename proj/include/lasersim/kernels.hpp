#pragma once

#include "lasersim/hilbert.hpp"
#include "lasersim/types.hpp"

namespace lasersim {

/// Scalar coefficients of one evaluation of the master-equation generator
///
///   L rho = -i [omega/2 (2N + sigma^3), rho]
///           + 2 kappa D[a] rho + gamma (1 - d) D[sigma^-] rho
///           + gamma (1 + d) D[sigma^+] rho
///           + [alpha a^dag - conj(alpha) a + conj(beta) sigma^- - beta sigma^+, rho]
///
/// with D[L] rho = L rho L^dag - {L^dag L, rho} / 2. The mean-field equation
/// is the case alpha = g tr(sigma^- rho), beta = g tr(a rho).
struct GeneratorCoefficients {
  double kappa = 0.0;
  double gamma = 0.0;
  double d = 0.0;
  double omega = 0.0;
  Complex alpha{};
  Complex beta{};
};

namespace kernels {

/// Structure-exploiting O(dim^2) evaluation, parallel over columns of rho.
/// `out` is resized if needed; it must not alias `rho`.
void apply_generator(const CMatrix& rho, const SpaceSpec& space,
                     const GeneratorCoefficients& c, CMatrix& out);

/// tr(a rho) and tr(sigma^- rho) in O(dim).
Complex trace_a(const CMatrix& rho, const SpaceSpec& space);
Complex trace_sigma_minus(const CMatrix& rho, const SpaceSpec& space);

/// y += h x, parallel over columns.
void axpy(CMatrix& y, Complex h, const CMatrix& x);

/// Caps the OpenMP pool (no-op when n <= 0).
void set_thread_limit(int n);
int thread_limit();

}  // namespace kernels

namespace reference {

/// Serial dense evaluation by explicit operator products. Slow, kept as the
/// independent oracle for kernels::apply_generator.
CMatrix apply_generator(const CMatrix& rho, const OperatorSet& ops,
                        const GeneratorCoefficients& c);

}  // namespace reference

}  // namespace lasersim
