#pragma once

// Multi-site Pauli strings, their weighted sums, and the model Hamiltonians built from them.
//
// Basis convention used throughout the toolkit: a basis index b has site 1 as its most
// significant bit, and a set bit means |up> = |1>. In that ordering (|0>=down, |1>=up):
//   X = [[0, 1], [1, 0]],  Y = [[0, i], [-i, 0]],  Z = [[-1, 0], [0, 1]],
// so Z|up> = +|up> and n = (Z + 1) / 2 counts excitations.

#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "rmkit/errors.hpp"

namespace rmkit {

using cplx = std::complex<double>;

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

char to_char(Pauli p);
Pauli pauli_from_char(char c);

/// Local measurement-basis rotation selected by a randomized-measurement label.
/// Label 1: exp(-i pi/4 X), label 2: exp(-i pi/4 Y), label 3: identity.
enum class CliffordLabel : std::uint8_t { RotX = 1, RotY = 2, Identity = 3 };

int to_int(CliffordLabel label);
CliffordLabel clifford_from_int(int value);
Eigen::Matrix2cd clifford_matrix(CliffordLabel label);

/// Human readable description of the rotation-set ordering, written into every output header.
inline constexpr std::string_view kRotationOrdering =
    "R1=exp(-i*pi/4*X),R2=exp(-i*pi/4*Y),R3=1";
inline constexpr std::string_view kBitConvention = "site1=MSB,bit1=up";

/// i^k * X^x * Z^z, with Y sites carried as (x=1, z=1) and an extra i per Y.
/// Concretely the operator is i^phase_power times the tensor product of the letters.
class PauliString {
public:
  static constexpr int kMaxSites = 64;

  explicit PauliString(int sites = 0);
  /// Letters left to right are sites 1..L, e.g. "XIZ".
  static PauliString from_letters(std::string_view letters, int phase_power = 0);
  /// Single letter at a 1-based site.
  static PauliString single(int sites, int site, Pauli p);

  int size() const noexcept { return sites_; }
  /// 1-based site access.
  Pauli at(int site) const;
  void set(int site, Pauli p);

  /// Overall phase is i^phase_power().
  int phase_power() const noexcept { return phase_; }
  cplx phase() const;
  PauliString without_phase() const;

  std::uint64_t x_mask() const noexcept { return x_; }
  std::uint64_t z_mask() const noexcept { return z_; }
  std::uint64_t bit(int site) const { return std::uint64_t{1} << (sites_ - site); }

  int weight() const;
  std::vector<int> support() const;
  /// True when only I and Z letters appear.
  bool is_diagonal() const noexcept { return x_ == 0; }
  bool is_identity() const noexcept { return x_ == 0 && z_ == 0; }
  int y_count() const;

  std::string letters() const;
  /// Letters prefixed with the phase, e.g. "-iXY".
  std::string to_string() const;

  /// Action on a basis state: P|b> = amplitude * |b ^ x_mask>.
  cplx amplitude(std::uint64_t basis) const;

  friend bool operator==(const PauliString& a, const PauliString& b) = default;

private:
  friend PauliString pauli_mul(const PauliString& a, const PauliString& b);
  friend PauliString conjugate_by_labels(const PauliString& p,
                                         std::span<const CliffordLabel> labels);

  int sites_ = 0;
  std::uint64_t x_ = 0;
  std::uint64_t z_ = 0;
  int phase_ = 0;
};

/// Canonical product a * b with accumulated phase. Throws StructuralError on length mismatch.
PauliString pauli_mul(const PauliString& a, const PauliString& b);
inline PauliString operator*(const PauliString& a, const PauliString& b) { return pauli_mul(a, b); }

/// U P U^dagger for U = tensor product of the label rotations. The result keeps a +-1 phase.
PauliString conjugate_by_labels(const PauliString& p, std::span<const CliffordLabel> labels);

/// Weighted sum of phase-free Pauli strings in canonical (merged, sorted) form.
class PauliStringSum {
public:
  struct Term {
    cplx coefficient;
    PauliString string;
  };

  static constexpr double kDropThreshold = 1e-13;

  explicit PauliStringSum(int sites = 0) : sites_(sites) {}
  static PauliStringSum identity(int sites, cplx coefficient = 1.0);

  int size() const noexcept { return sites_; }
  const std::vector<Term>& terms() const noexcept { return terms_; }
  bool empty() const noexcept { return terms_.empty(); }
  std::size_t term_count() const noexcept { return terms_.size(); }

  /// Adds coefficient * string, folding the string's phase into the coefficient.
  PauliStringSum& add(cplx coefficient, const PauliString& string);
  PauliStringSum& operator+=(const PauliStringSum& other);
  PauliStringSum& operator*=(cplx scale);

  /// Coefficient of a phase-free letter pattern, zero if absent.
  cplx coefficient(const PauliString& string) const;

  bool is_hermitian(double tol = 1e-12) const;
  /// Sum of |coefficient|, an upper bound on the operator norm.
  double one_norm() const;

  std::string to_string() const;

private:
  friend PauliStringSum operator*(const PauliStringSum& a, const PauliStringSum& b);
  void rebuild(std::map<std::pair<std::uint64_t, std::uint64_t>, cplx>&& merged);
  std::map<std::pair<std::uint64_t, std::uint64_t>, cplx> merged() const;

  int sites_ = 0;
  std::vector<Term> terms_;
};

PauliStringSum operator+(PauliStringSum a, const PauliStringSum& b);
PauliStringSum operator*(cplx scale, PauliStringSum a);
PauliStringSum operator*(const PauliStringSum& a, const PauliStringSum& b);

/// O^2 in merged canonical form.
PauliStringSum square_observable(const PauliStringSum& o);

/// Excitation number n_site = (Z + 1) / 2 at a 1-based site.
PauliStringSum number_operator(int sites, int site);
/// -J (s+_a s-_b + h.c.) = -(J/2)(X_a X_b + Y_a Y_b).
PauliStringSum hopping(int sites, int a, int b, double coupling);

/// Dimerized XY chain. Bonds (x, x+1) with even 1-based x carry j_even, odd x carry j_odd;
/// every (x, x+3) carries j_nnn; -mu_edge * n_1 breaks the edge degeneracy.
/// Coefficients are used as given (angular units expected).
PauliStringSum build_ssh(int sites, double j_even, double j_odd, double j_nnn, double mu_edge);
PauliStringSum build_staggered_xy(int sites, double coupling);

/// Hamiltonian parameter block as stored in configuration files.
/// Values are MHz unless `angular` is set, in which case they are already rad/us.
struct HamiltonianSpec {
  int sites = 0;
  double j_even = 0.0;
  double j_odd = 0.0;
  double j_nnn = 0.0;
  double mu_edge = 0.0;
  bool angular = false;

  double to_angular(double value) const;
  PauliStringSum build() const;
};

// ---------------------------------------------------------------------------
// Matrix forms
// ---------------------------------------------------------------------------

namespace detail {
template <typename Scalar>
Scalar narrow(cplx value) {
  if constexpr (Eigen::NumTraits<Scalar>::IsComplex) {
    return value;
  } else {
    if (std::abs(value.imag()) > 1e-12)
      throw NumericalContractError("operator has complex matrix elements; use a complex scalar");
    return value.real();
  }
}
}  // namespace detail

template <typename Scalar = cplx>
Eigen::SparseMatrix<Scalar, Eigen::RowMajor> to_sparse(const PauliStringSum& op) {
  const int sites = op.size();
  const std::uint64_t dim = std::uint64_t{1} << sites;
  std::vector<Eigen::Triplet<Scalar>> triplets;
  triplets.reserve(op.term_count() * dim);
  for (const auto& term : op.terms()) {
    const std::uint64_t flip = term.string.x_mask();
    for (std::uint64_t b = 0; b < dim; ++b) {
      const cplx value = term.coefficient * term.string.amplitude(b);
      triplets.emplace_back(static_cast<Eigen::Index>(b ^ flip), static_cast<Eigen::Index>(b),
                            detail::narrow<Scalar>(value));
    }
  }
  Eigen::SparseMatrix<Scalar, Eigen::RowMajor> m(dim, dim);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.prune(Scalar(0), 1e-300);
  return m;
}

template <typename Scalar = cplx>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> to_dense(const PauliStringSum& op) {
  return Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>(to_sparse<Scalar>(op));
}

Eigen::MatrixXcd to_dense(const PauliString& p);

/// True when every term has a real matrix in the computational basis (even number of Y).
bool has_real_matrix(const PauliStringSum& op);

}  // namespace rmkit
