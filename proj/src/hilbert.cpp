#include "lasersim/hilbert.hpp"

#include <cmath>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace lasersim {

namespace {

// Mass of Poisson(mean) above n_max, summed from the top so that tiny tails
// keep full relative precision.
double poisson_tail_above(double mean, int n_max) {
  if (mean == 0.0) return 0.0;
  double term = std::exp(-mean);  // P(0)
  for (int n = 1; n <= n_max + 1; ++n) term *= mean / n;
  double tail = 0.0;
  for (int n = n_max + 1; n < n_max + 2000; ++n) {
    tail += term;
    term *= mean / (n + 1);
    if (term < 1e-300 || term < tail * 1e-18) break;
  }
  return tail;
}

void check_leakage(double leakage, double tolerance, const char* what,
                   Complex z, int n_max) {
  if (leakage > tolerance) {
    std::ostringstream os;
    os << what << " with |z|^2 = " << std::norm(z) << " loses " << leakage
       << " probability above n_max = " << n_max << "; increase n_max";
    throw TruncationError(os.str());
  }
}

}  // namespace

SpaceSpec make_space(int n_max) {
  if (n_max < 1) throw ConfigError("n_max must be >= 1");
  return SpaceSpec{n_max};
}

CMatrix field_annihilation(int n_max) {
  CMatrix a = CMatrix::Zero(n_max + 1, n_max + 1);
  for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

CMatrix field_creation(int n_max) { return field_annihilation(n_max).adjoint(); }

CMatrix field_number(int n_max) {
  CMatrix num = CMatrix::Zero(n_max + 1, n_max + 1);
  for (int n = 0; n <= n_max; ++n) num(n, n) = static_cast<double>(n);
  return num;
}

CMatrix atom_sigma_plus() {
  CMatrix s = CMatrix::Zero(2, 2);
  s(kPlus, kMinus) = 1.0;
  return s;
}

CMatrix atom_sigma_minus() {
  CMatrix s = CMatrix::Zero(2, 2);
  s(kMinus, kPlus) = 1.0;
  return s;
}

CMatrix atom_sigma_z() {
  CMatrix s = CMatrix::Zero(2, 2);
  s(kPlus, kPlus) = 1.0;
  s(kMinus, kMinus) = -1.0;
  return s;
}

OperatorMatrix tensor_embed(const CMatrix& field_op, const CMatrix& atom_op,
                            const SpaceSpec& space, std::string label) {
  if (field_op.rows() != space.fock_dim() || field_op.cols() != space.fock_dim() ||
      atom_op.rows() != 2 || atom_op.cols() != 2) {
    std::ostringstream os;
    os << "tensor_embed: expected " << space.fock_dim() << "x" << space.fock_dim()
       << " (x) 2x2, got " << field_op.rows() << "x" << field_op.cols() << " (x) "
       << atom_op.rows() << "x" << atom_op.cols();
    throw DimensionError(os.str());
  }
  CMatrix full = Eigen::kroneckerProduct(field_op, atom_op).eval();
  return OperatorMatrix{std::move(full), space, std::move(label)};
}

OperatorSet make_operators(const SpaceSpec& space) {
  const int n = space.n_max;
  const CMatrix id_f = CMatrix::Identity(n + 1, n + 1);
  const CMatrix id_a = CMatrix::Identity(2, 2);
  const CMatrix a = field_annihilation(n);
  const CMatrix ad = field_creation(n);
  const double s2 = std::sqrt(2.0);

  OperatorSet ops{
      tensor_embed(a, id_a, space, "a"),
      tensor_embed(ad, id_a, space, "a_dag"),
      tensor_embed(field_number(n), id_a, space, "N"),
      tensor_embed(id_f, atom_sigma_plus(), space, "sigma_plus"),
      tensor_embed(id_f, atom_sigma_minus(), space, "sigma_minus"),
      tensor_embed(id_f, atom_sigma_z(), space, "sigma_z"),
      tensor_embed((ad + a) / s2, id_a, space, "Q"),
      tensor_embed(kI * (ad - a) / s2, id_a, space, "P"),
  };
  return ops;
}

CVector exponential_vector(Complex zeta, int n_max) {
  CVector v(n_max + 1);
  Complex term = 1.0;
  v(0) = term;
  for (int n = 1; n <= n_max; ++n) {
    term *= zeta / std::sqrt(static_cast<double>(n));
    v(n) = term;
  }
  return v;
}

FieldVector coherent_vector(Complex zeta, int n_max, double tolerance) {
  if (n_max < 1) throw ConfigError("n_max must be >= 1");
  FieldVector out;
  out.n_max = n_max;
  out.amplitudes = std::exp(-0.5 * std::norm(zeta)) * exponential_vector(zeta, n_max);
  out.leakage = poisson_tail_above(std::norm(zeta), n_max);
  check_leakage(out.leakage, tolerance, "coherent vector", zeta, n_max);
  return out;
}

StateVector product_state(const FieldVector& field, const CVector& atom,
                          const SpaceSpec& space) {
  if (field.n_max != space.n_max || atom.size() != 2) {
    throw DimensionError("product_state: field/atom sizes do not match the space");
  }
  StateVector s;
  s.space = space;
  s.leakage = field.leakage;
  s.amplitudes = Eigen::kroneckerProduct(field.amplitudes, atom).eval();
  return s;
}

CMatrix field_weyl(Complex u, int n_max, double tolerance) {
  check_leakage(poisson_tail_above(std::norm(u), n_max), tolerance,
                "Weyl operator", u, n_max);
  const CMatrix a = field_annihilation(n_max);
  const CMatrix gen = u * a.adjoint() - std::conj(u) * a;
  return gen.exp();
}

OperatorMatrix weyl(Complex u, const SpaceSpec& space, double tolerance) {
  std::ostringstream label;
  label << "W(" << u.real() << (u.imag() < 0 ? "" : "+") << u.imag() << "i)";
  return tensor_embed(field_weyl(u, space.n_max, tolerance),
                      CMatrix::Identity(2, 2), space, label.str());
}

nlohmann::json to_json(const OperatorMatrix& op) {
  nlohmann::json entries = nlohmann::json::array();
  for (Eigen::Index i = 0; i < op.entries.rows(); ++i) {
    for (Eigen::Index j = 0; j < op.entries.cols(); ++j) {
      const Complex z = op.entries(i, j);
      entries.push_back({z.real(), z.imag()});
    }
  }
  return nlohmann::json{{"space", {{"n_max", op.space.n_max}}},
                        {"label", op.label},
                        {"entries", std::move(entries)}};
}

OperatorMatrix operator_from_json(const nlohmann::json& j) {
  try {
    const SpaceSpec space = make_space(j.at("space").at("n_max").get<int>());
    const auto& entries = j.at("entries");
    const int dim = space.dim();
    if (!entries.is_array() || entries.size() != static_cast<std::size_t>(dim) * dim) {
      throw DimensionError("operator JSON: entry count does not match 2(n_max+1)^2");
    }
    CMatrix m(dim, dim);
    std::size_t k = 0;
    for (int i = 0; i < dim; ++i) {
      for (int c = 0; c < dim; ++c, ++k) {
        const auto& z = entries[k];
        m(i, c) = Complex(z.at(0).get<double>(), z.at(1).get<double>());
      }
    }
    return OperatorMatrix{std::move(m), space, j.value("label", std::string("custom"))};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("operator JSON: ") + e.what());
  }
}

}  // namespace lasersim
