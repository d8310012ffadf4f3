#include "rmkit/state.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

namespace rmkit {

namespace {

Eigen::Index dim_of(int sites) { return Eigen::Index{1} << sites; }

void check_sites(int sites) {
  if (sites < 1 || sites > StateVector::kMaxSites)
    throw DomainError("state vectors support 1.." + std::to_string(StateVector::kMaxSites) +
                      " sites, got " + std::to_string(sites));
}

// Splits the basis into (subsystem index, complement index); subsystem bits follow `sites` order.
struct CutIndexer {
  int total;
  std::vector<int> sub;
  std::vector<int> rest;

  CutIndexer(int total_sites, std::span<const int> sites) : total(total_sites) {
    std::vector<bool> used(total_sites + 1, false);
    for (int s : sites) {
      if (s < 1 || s > total_sites) throw DomainError("subsystem site outside chain");
      if (used[s]) throw StructuralError("subsystem lists a site twice");
      used[s] = true;
      sub.push_back(s);
    }
    for (int s = 1; s <= total_sites; ++s)
      if (!used[s]) rest.push_back(s);
  }

  static std::uint64_t gather(std::uint64_t b, int total, const std::vector<int>& order) {
    std::uint64_t out = 0;
    for (int s : order) out = (out << 1) | ((b >> (total - s)) & 1u);
    return out;
  }

  Eigen::MatrixXcd reshape(const Eigen::VectorXcd& amp) const {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(Eigen::Index{1} << sub.size(),
                                                Eigen::Index{1} << rest.size());
    for (Eigen::Index b = 0; b < amp.size(); ++b) {
      const auto ub = static_cast<std::uint64_t>(b);
      m(static_cast<Eigen::Index>(gather(ub, total, sub)),
        static_cast<Eigen::Index>(gather(ub, total, rest))) = amp(b);
    }
    return m;
  }
};

}  // namespace

StateVector::StateVector(int sites, Eigen::VectorXcd amplitudes) : sites_(sites), amp_(std::move(amplitudes)) {
  check_sites(sites);
  if (amp_.size() != dim_of(sites)) throw StructuralError("amplitude vector has wrong dimension");
  if (std::abs(amp_.norm() - 1.0) > kNormTolerance)
    throw NumericalContractError("state vector is not normalized (norm " + std::to_string(amp_.norm()) + ")");
}

StateVector StateVector::normalized(int sites, Eigen::VectorXcd amplitudes) {
  const double n = amplitudes.norm();
  if (n == 0.0) throw NumericalContractError("cannot normalize the zero vector");
  amplitudes /= n;
  return StateVector(sites, std::move(amplitudes));
}

StateVector StateVector::basis_state(int sites, std::uint64_t index) {
  check_sites(sites);
  Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(dim_of(sites));
  if (index >= static_cast<std::uint64_t>(amp.size())) throw DomainError("basis index out of range");
  amp(static_cast<Eigen::Index>(index)) = 1.0;
  return StateVector(sites, std::move(amp));
}

StateVector StateVector::from_bits(std::string_view bits) {
  return basis_state(static_cast<int>(bits.size()), parse_bitstring(bits));
}

std::string to_bitstring(std::uint64_t index, int sites) {
  std::string s(static_cast<std::size_t>(sites), '0');
  for (int site = 1; site <= sites; ++site)
    if ((index >> (sites - site)) & 1u) s[site - 1] = '1';
  return s;
}

std::uint64_t parse_bitstring(std::string_view bits) {
  std::uint64_t v = 0;
  for (char c : bits) {
    if (c != '0' && c != '1') throw StructuralError("bitstring may only contain 0 and 1");
    v = (v << 1) | static_cast<std::uint64_t>(c == '1');
  }
  return v;
}

double fidelity(const StateVector& a, const StateVector& b) {
  if (a.size() != b.size()) throw StructuralError("fidelity: size mismatch");
  return std::norm(a.amplitudes().dot(b.amplitudes()));
}

double expectation(const PauliStringSum& op, const StateVector& psi) {
  if (op.size() != psi.size()) throw StructuralError("expectation: operator and state sizes differ");
  const Eigen::VectorXcd& amp = psi.amplitudes();
  cplx total = 0.0;
  for (const auto& term : op.terms()) {
    const std::uint64_t flip = term.string.x_mask();
    cplx acc = 0.0;
    for (Eigen::Index b = 0; b < amp.size(); ++b) {
      const auto ub = static_cast<std::uint64_t>(b);
      acc += std::conj(amp(static_cast<Eigen::Index>(ub ^ flip))) * term.string.amplitude(ub) * amp(b);
    }
    total += term.coefficient * acc;
  }
  if (std::abs(total.imag()) >= 1e-8)
    throw NumericalContractError("expectation has imaginary residue " + std::to_string(total.imag()) +
                                 "; operator is not Hermitian");
  return total.real();
}

void apply_single_site(Eigen::Ref<Eigen::VectorXcd> amp, int sites, int site, const Eigen::Matrix2cd& u) {
  const Eigen::Index stride = Eigen::Index{1} << (sites - site);
  const Eigen::Index n = amp.size();
  for (Eigen::Index block = 0; block < n; block += 2 * stride) {
    for (Eigen::Index k = block; k < block + stride; ++k) {
      const cplx a0 = amp(k);
      const cplx a1 = amp(k + stride);
      amp(k) = u(0, 0) * a0 + u(0, 1) * a1;
      amp(k + stride) = u(1, 0) * a0 + u(1, 1) * a1;
    }
  }
}

StateVector apply_local_unitaries(const StateVector& psi, std::span<const CliffordLabel> labels) {
  if (static_cast<int>(labels.size()) != psi.size())
    throw StructuralError("apply_local_unitaries: one label per site required");
  Eigen::VectorXcd amp = psi.amplitudes();
  for (int site = 1; site <= psi.size(); ++site) {
    if (labels[site - 1] == CliffordLabel::Identity) continue;
    apply_single_site(amp, psi.size(), site, clifford_matrix(labels[site - 1]));
  }
  return StateVector::normalized(psi.size(), std::move(amp));
}

Counts sample_counts(const Eigen::VectorXd& probabilities, int shots, Rng& rng) {
  if (shots < 1) throw DomainError("sample_counts: need at least one shot");
  std::vector<double> cumulative(static_cast<std::size_t>(probabilities.size()));
  double running = 0.0;
  for (Eigen::Index k = 0; k < probabilities.size(); ++k) {
    running += std::max(probabilities(k), 0.0);
    cumulative[static_cast<std::size_t>(k)] = running;
  }
  std::uniform_real_distribution<double> uniform(0.0, running);
  Counts counts;
  for (int s = 0; s < shots; ++s) {
    const double u = uniform(rng);
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    // Skip zero-probability bins that share the same cumulative value.
    while (it != cumulative.begin() && *(it - 1) == *it) --it;
    ++counts[static_cast<std::uint64_t>(it - cumulative.begin())];
  }
  return counts;
}

Counts sample_bitstrings(const StateVector& psi, int shots, Rng& rng) {
  return sample_counts(psi.probabilities(), shots, rng);
}

ReducedDensityMatrix reduced_density(const StateVector& psi, std::span<const int> sites) {
  if (sites.empty()) throw DomainError("reduced_density: empty subsystem");
  if (sites.size() > 12) throw DomainError("reduced_density: subsystem larger than 12 sites");
  const CutIndexer cut(psi.size(), sites);
  const Eigen::MatrixXcd m = cut.reshape(psi.amplitudes());
  return {std::vector<int>(sites.begin(), sites.end()), m * m.adjoint()};
}

double exact_purity(const StateVector& psi, std::span<const int> sites) {
  if (sites.empty()) throw DomainError("exact_purity: empty subsystem");
  if (sites.size() > 12) throw DomainError("exact_purity: subsystem larger than 12 sites");
  const CutIndexer cut(psi.size(), sites);
  const Eigen::MatrixXcd m = cut.reshape(psi.amplitudes());
  if (m.rows() <= m.cols()) return (m * m.adjoint()).cwiseAbs2().sum();
  return (m.adjoint() * m).cwiseAbs2().sum();
}

std::vector<int> left_block(int ell) {
  std::vector<int> s(static_cast<std::size_t>(ell));
  for (int k = 0; k < ell; ++k) s[static_cast<std::size_t>(k)] = k + 1;
  return s;
}

void write_amplitudes(const std::filesystem::path& path, const StateVector& psi) {
  static_assert(std::endian::native == std::endian::little, "amplitude dumps assume a little-endian host");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (Eigen::Index k = 0; k < psi.dimension(); ++k) {
    const double re = psi.amplitudes()(k).real();
    const double im = psi.amplitudes()(k).imag();
    out.write(reinterpret_cast<const char*>(&re), sizeof re);
    out.write(reinterpret_cast<const char*>(&im), sizeof im);
  }
}

StateVector read_amplitudes(const std::filesystem::path& path, int sites) {
  check_sites(sites);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  Eigen::VectorXcd amp(dim_of(sites));
  for (Eigen::Index k = 0; k < amp.size(); ++k) {
    double re = 0.0, im = 0.0;
    in.read(reinterpret_cast<char*>(&re), sizeof re);
    in.read(reinterpret_cast<char*>(&im), sizeof im);
    if (!in) throw StructuralError("amplitude dump is truncated");
    amp(k) = {re, im};
  }
  return StateVector(sites, std::move(amp));
}

}  // namespace rmkit
