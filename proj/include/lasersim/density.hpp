#pragma once

#include <optional>

#include "lasersim/hilbert.hpp"
#include "lasersim/types.hpp"

namespace lasersim {

/// Density matrix on the truncated Fock (x) qubit space.
struct DensityMatrix {
  CMatrix entries;
  SpaceSpec space;
  std::optional<double> time_tag;

  static DensityMatrix from_pure(const StateVector& psi);
  /// rho_field (x) rho_atom.
  static DensityMatrix product(const CMatrix& field, const CMatrix& atom,
                               const SpaceSpec& space);
};

struct DensityTolerances {
  double hermiticity = 1e-12;  ///< max |rho - rho^dagger| entrywise
  double trace = 1e-10;        ///< |tr rho - 1|
  double min_eigenvalue = -1e-8;
  double leakage = 1e-8;       ///< population of the top two Fock levels
};

struct DensityDiagnostics {
  double hermiticity_error = 0.0;
  double trace_error = 0.0;
  double min_eigenvalue = 0.0;
  double top_leakage = 0.0;

  bool ok(const DensityTolerances& tol) const;
};

/// Population of the two highest retained Fock levels.
double top_level_population(const CMatrix& rho, const SpaceSpec& space);

/// Hermitian part's smallest eigenvalue; optional because it is the only
/// O(dim^3) check.
DensityDiagnostics diagnose(const CMatrix& rho, const SpaceSpec& space,
                            bool with_spectrum = true);

/// Throws TruncationError for leakage, InvariantError for the others.
void require_valid(const DensityMatrix& rho, const DensityTolerances& tol = {});

/// 2x2 atom state from the excited population p_plus and the coherence
/// <e_+|rho|e_->.
CMatrix atom_state(double p_plus, Complex coherence);

/// Field and atom marginals.
CMatrix partial_trace_atom(const CMatrix& rho, const SpaceSpec& space);
CMatrix partial_trace_field(const CMatrix& rho, const SpaceSpec& space);

}  // namespace lasersim
