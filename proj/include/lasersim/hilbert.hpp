#pragma once

#include <string>

#include "json.hpp"
#include "lasersim/types.hpp"

namespace lasersim {

/// Truncated Fock(n_max) (x) C^2 space.
///
/// Basis ordering is field-major and interleaved:
/// index(n, s) = 2 n + s with s = 0 for e_+ and s = 1 for e_-.
struct SpaceSpec {
  int n_max = 24;

  int fock_dim() const { return n_max + 1; }
  int dim() const { return 2 * (n_max + 1); }
  static int index(int n, int s) { return 2 * n + s; }

  bool operator==(const SpaceSpec&) const = default;
};

inline constexpr int kPlus = 0;
inline constexpr int kMinus = 1;

/// Rejects n_max < 1.
SpaceSpec make_space(int n_max);

/// Dense operator on the full space with a symbolic tag.
struct OperatorMatrix {
  CMatrix entries;
  SpaceSpec space;
  std::string label;
};

struct OperatorSet {
  OperatorMatrix a, a_dag, number, sigma_plus, sigma_minus, sigma_z;
  OperatorMatrix quad_q, quad_p;
};

// Field (Fock-only) and atom (2x2) building blocks.
CMatrix field_annihilation(int n_max);
CMatrix field_creation(int n_max);
CMatrix field_number(int n_max);
CMatrix atom_sigma_plus();
CMatrix atom_sigma_minus();
CMatrix atom_sigma_z();

/// a, a^dagger, N, sigma^+, sigma^-, sigma^3 (and the quadratures
/// Q = (a^dagger + a)/sqrt2, P = i (a^dagger - a)/sqrt2) embedded in the full
/// space. a^dagger annihilates the top Fock level.
OperatorSet make_operators(const SpaceSpec& space);

/// Kronecker embedding field_op (x) atom_op in the declared basis order.
OperatorMatrix tensor_embed(const CMatrix& field_op, const CMatrix& atom_op,
                            const SpaceSpec& space, std::string label = "custom");

/// Normalized-Poisson amplitudes restricted to n <= n_max.
struct FieldVector {
  CVector amplitudes;
  int n_max = 0;
  /// 1 - sum |amplitude|^2: probability lost above the cutoff.
  double leakage = 0.0;
};

/// Full-space pure state.
struct StateVector {
  CVector amplitudes;
  SpaceSpec space;
  double leakage = 0.0;
};

inline constexpr double kDefaultLeakageTolerance = 1e-10;

/// exp(-|z|^2/2) sum z^n / sqrt(n!) e_n truncated at n_max.
/// Throws TruncationError when the discarded mass exceeds `tolerance`.
FieldVector coherent_vector(Complex zeta, int n_max,
                            double tolerance = kDefaultLeakageTolerance);

/// Unnormalized exponential vector sum z^n / sqrt(n!) e_n (no leakage check).
CVector exponential_vector(Complex zeta, int n_max);

/// field (x) atom, with the field leakage carried over.
StateVector product_state(const FieldVector& field, const CVector& atom,
                          const SpaceSpec& space);

/// exp(u a^dagger - conj(u) a) on the Fock space, by scaling and squaring.
/// Throws TruncationError when the Poisson tail of W(u) e_0 beyond n_max
/// exceeds `tolerance`.
CMatrix field_weyl(Complex u, int n_max,
                   double tolerance = kDefaultLeakageTolerance);

/// W(u) (x) I_2 on the full space.
OperatorMatrix weyl(Complex u, const SpaceSpec& space,
                    double tolerance = kDefaultLeakageTolerance);

/// {space:{n_max}, label, entries:[[re,im],...]} row-major.
nlohmann::json to_json(const OperatorMatrix& op);
OperatorMatrix operator_from_json(const nlohmann::json& j);

}  // namespace lasersim
