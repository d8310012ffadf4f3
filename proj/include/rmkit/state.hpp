#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rmkit/pauli.hpp"
#include "rmkit/rng.hpp"

namespace rmkit {

/// Pure many-body state on `size()` sites, amplitudes ordered with site 1 as the most
/// significant bit of the basis index (bit 1 = up).
class StateVector {
public:
  static constexpr int kMaxSites = 14;
  static constexpr double kNormTolerance = 1e-9;

  StateVector() = default;
  /// Throws StructuralError on wrong dimension, NumericalContractError if not normalized.
  StateVector(int sites, Eigen::VectorXcd amplitudes);

  static StateVector normalized(int sites, Eigen::VectorXcd amplitudes);
  static StateVector basis_state(int sites, std::uint64_t index);
  /// "1010" -> |up down up down>.
  static StateVector from_bits(std::string_view bits);

  int size() const noexcept { return sites_; }
  Eigen::Index dimension() const noexcept { return amp_.size(); }
  const Eigen::VectorXcd& amplitudes() const noexcept { return amp_; }
  cplx operator[](std::uint64_t index) const { return amp_(static_cast<Eigen::Index>(index)); }

  Eigen::VectorXd probabilities() const { return amp_.cwiseAbs2(); }
  double norm() const { return amp_.norm(); }

private:
  int sites_ = 0;
  Eigen::VectorXcd amp_;
};

/// Bitstring outcome -> number of shots.
using Counts = std::map<std::uint64_t, int>;

std::string to_bitstring(std::uint64_t index, int sites);
std::uint64_t parse_bitstring(std::string_view bits);

double fidelity(const StateVector& a, const StateVector& b);

/// <psi|O|psi>. Throws NumericalContractError when the imaginary residue exceeds 1e-8.
double expectation(const PauliStringSum& op, const StateVector& psi);

/// Applies a 2x2 matrix to a 1-based site of an amplitude vector in place.
void apply_single_site(Eigen::Ref<Eigen::VectorXcd> amp, int sites, int site,
                       const Eigen::Matrix2cd& u);

StateVector apply_local_unitaries(const StateVector& psi, std::span<const CliffordLabel> labels);

/// Multinomial draw of `shots` outcomes from a probability vector.
Counts sample_counts(const Eigen::VectorXd& probabilities, int shots, Rng& rng);
Counts sample_bitstrings(const StateVector& psi, int shots, Rng& rng);

struct ReducedDensityMatrix {
  std::vector<int> sites;  ///< 1-based; the first listed site is the most significant bit.
  Eigen::MatrixXcd rho;

  double trace() const { return rho.trace().real(); }
  double purity() const { return rho.cwiseAbs2().sum(); }
};

ReducedDensityMatrix reduced_density(const StateVector& psi, std::span<const int> sites);
/// Tr[rho_A^2], evaluated on whichever side of the cut is smaller.
double exact_purity(const StateVector& psi, std::span<const int> sites);
/// Sites 1..ell.
std::vector<int> left_block(int ell);

/// Little-endian interleaved (re, im) doubles, no header.
void write_amplitudes(const std::filesystem::path& path, const StateVector& psi);
StateVector read_amplitudes(const std::filesystem::path& path, int sites);

}  // namespace rmkit
