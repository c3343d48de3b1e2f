#include "lasersim/kernels.hpp"

#include <cmath>
#include <vector>

#include <omp.h>

namespace lasersim::kernels {

namespace {

// Below this dimension the fork/join cost outweighs the work.
constexpr int kParallelMinDim = 64;

}  // namespace

void apply_generator(const CMatrix& rho, const SpaceSpec& space,
                     const GeneratorCoefficients& c, CMatrix& out) {
  const int dim = space.dim();
  const int nf = space.fock_dim();
  if (rho.rows() != dim || rho.cols() != dim) {
    throw DimensionError("apply_generator: rho does not match the space");
  }
  out.resize(dim, dim);

  std::vector<double> sq(nf + 1);
  for (int n = 0; n <= nf; ++n) sq[n] = std::sqrt(static_cast<double>(n));

  const double two_kappa = 2.0 * c.kappa;
  const double rate_down = c.gamma * (1.0 - c.d);  // sigma^- jumps, e_+ -> e_-
  const double rate_up = c.gamma * (1.0 + c.d);    // sigma^+ jumps, e_- -> e_+
  const Complex alpha = c.alpha;
  const Complex alpha_c = std::conj(c.alpha);
  const Complex beta = c.beta;
  const Complex beta_c = std::conj(c.beta);
  const double omega = c.omega;
  const int n_max = space.n_max;
  const Complex* R = rho.data();
  Complex* O = out.data();

  // Column j = (m, t) of the output needs columns (m, t), (m, other t) and
  // (m +- 1, t) of rho. Rows are walked in (n, +), (n, -) pairs.
#pragma omp parallel for schedule(static) if (dim >= kParallelMinDim)
  for (int j = 0; j < dim; ++j) {
    const int m = j / 2;
    const int t = j % 2;
    const std::ptrdiff_t ld = dim;
    const Complex* col = R + j * ld;
    const Complex* up = m < n_max ? R + (j + 2) * ld : nullptr;   // (m + 1, t)
    const Complex* down = m > 0 ? R + (j - 2) * ld : nullptr;     // (m - 1, t)
    const Complex* partner = R + (t == kPlus ? j + 1 : j - 1) * ld;  // (m, other t)
    Complex* dst = O + j * ld;

    const double h_col = omega * (m + (t == kPlus ? 0.5 : -0.5));
    // Diagonal decay from the anticommutator terms, split by row spin.
    const double loss_col = t == kPlus ? 0.5 * rate_down : 0.5 * rate_up;
    const double loss_plus = 0.5 * rate_down + loss_col;
    const double loss_minus = 0.5 * rate_up + loss_col;
    const double cav_up = up ? two_kappa * sq[m + 1] : 0.0;
    const Complex a_up = up ? -alpha * sq[m + 1] : Complex(0.0);
    const Complex a_down = down ? alpha_c * sq[m] : Complex(0.0);
    const Complex sig = t == kPlus ? -beta_c : beta;

    for (int n = 0; n < nf; ++n) {
      const int i0 = 2 * n;
      const int i1 = i0 + 1;
      const Complex r0 = col[i0];
      const Complex r1 = col[i1];
      const double cav_diag = c.kappa * (n + m);
      const double h0 = omega * (n + 0.5) - h_col;
      const double h1 = omega * (n - 0.5) - h_col;
      Complex v0 = Complex(-(cav_diag + loss_plus), -h0) * r0 - beta * r1 + sig * partner[i0];
      Complex v1 = Complex(-(cav_diag + loss_minus), -h1) * r1 + beta_c * r0 + sig * partner[i1];
      if (t == kMinus) {
        v1 += rate_down * partner[i0];
      } else {
        v0 += rate_up * partner[i1];
      }
      if (n < n_max) {
        const double s1 = sq[n + 1];
        if (up) {
          v0 += (cav_up * s1) * up[i0 + 2];
          v1 += (cav_up * s1) * up[i1 + 2];
        }
        v0 -= (alpha_c * s1) * col[i0 + 2];
        v1 -= (alpha_c * s1) * col[i1 + 2];
      }
      if (n > 0) {
        v0 += (alpha * sq[n]) * col[i0 - 2];
        v1 += (alpha * sq[n]) * col[i1 - 2];
      }
      if (up) {
        v0 += a_up * up[i0];
        v1 += a_up * up[i1];
      }
      if (down) {
        v0 += a_down * down[i0];
        v1 += a_down * down[i1];
      }
      dst[i0] = v0;
      dst[i1] = v1;
    }
  }
}

Complex trace_a(const CMatrix& rho, const SpaceSpec& space) {
  Complex acc = 0.0;
  for (int n = 0; n < space.n_max; ++n) {
    const double w = std::sqrt(static_cast<double>(n + 1));
    for (int s = 0; s < 2; ++s) {
      acc += w * rho(SpaceSpec::index(n + 1, s), SpaceSpec::index(n, s));
    }
  }
  return acc;
}

Complex trace_sigma_minus(const CMatrix& rho, const SpaceSpec& space) {
  Complex acc = 0.0;
  for (int n = 0; n <= space.n_max; ++n) {
    acc += rho(SpaceSpec::index(n, kPlus), SpaceSpec::index(n, kMinus));
  }
  return acc;
}

void axpy(CMatrix& y, Complex h, const CMatrix& x) {
  const Eigen::Index cols = y.cols();
#pragma omp parallel for schedule(static) if (cols >= kParallelMinDim)
  for (Eigen::Index j = 0; j < cols; ++j) y.col(j) += h * x.col(j);
}

void set_thread_limit(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int thread_limit() { return omp_get_max_threads(); }

}  // namespace lasersim::kernels
