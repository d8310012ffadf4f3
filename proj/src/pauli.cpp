#include "rmkit/pauli.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

namespace rmkit {

namespace {

int mod4(int k) { return ((k % 4) + 4) % 4; }

cplx i_pow(int k) {
  switch (mod4(k)) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

void check_site(int sites, int site) {
  if (site < 1 || site > sites)
    throw DomainError("site " + std::to_string(site) + " outside [1, " + std::to_string(sites) + "]");
}

}  // namespace

char to_char(Pauli p) {
  switch (p) {
    case Pauli::I: return 'I';
    case Pauli::X: return 'X';
    case Pauli::Y: return 'Y';
    case Pauli::Z: return 'Z';
  }
  return '?';
}

Pauli pauli_from_char(char c) {
  switch (c) {
    case 'I': case 'i': return Pauli::I;
    case 'X': case 'x': return Pauli::X;
    case 'Y': case 'y': return Pauli::Y;
    case 'Z': case 'z': return Pauli::Z;
    default: throw StructuralError(std::string("unknown Pauli letter '") + c + "'");
  }
}

int to_int(CliffordLabel label) { return static_cast<int>(label); }

CliffordLabel clifford_from_int(int value) {
  if (value < 1 || value > 3) throw DomainError("Clifford label must be 1, 2 or 3");
  return static_cast<CliffordLabel>(value);
}

Eigen::Matrix2cd clifford_matrix(CliffordLabel label) {
  const double c = std::numbers::sqrt2 / 2.0;
  Eigen::Matrix2cd r;
  switch (label) {
    case CliffordLabel::RotX:  // (1 - iX)/sqrt2
      r << c, cplx(0, -c), cplx(0, -c), c;
      break;
    case CliffordLabel::RotY:  // (1 - iY)/sqrt2 with Y = [[0, i], [-i, 0]]
      r << c, c, -c, c;
      break;
    case CliffordLabel::Identity:
      r.setIdentity();
      break;
  }
  return r;
}

// ---------------------------------------------------------------------------
// PauliString
// ---------------------------------------------------------------------------

PauliString::PauliString(int sites) : sites_(sites) {
  if (sites < 0 || sites > kMaxSites) throw DomainError("PauliString supports 0..64 sites");
}

PauliString PauliString::from_letters(std::string_view letters, int phase_power) {
  PauliString p(static_cast<int>(letters.size()));
  for (std::size_t k = 0; k < letters.size(); ++k)
    p.set(static_cast<int>(k) + 1, pauli_from_char(letters[k]));
  p.phase_ = mod4(phase_power);
  return p;
}

PauliString PauliString::single(int sites, int site, Pauli letter) {
  PauliString p(sites);
  p.set(site, letter);
  return p;
}

Pauli PauliString::at(int site) const {
  check_site(sites_, site);
  const bool x = (x_ & bit(site)) != 0;
  const bool z = (z_ & bit(site)) != 0;
  if (x && z) return Pauli::Y;
  if (x) return Pauli::X;
  if (z) return Pauli::Z;
  return Pauli::I;
}

void PauliString::set(int site, Pauli letter) {
  check_site(sites_, site);
  const std::uint64_t m = bit(site);
  x_ &= ~m;
  z_ &= ~m;
  if (letter == Pauli::X || letter == Pauli::Y) x_ |= m;
  if (letter == Pauli::Z || letter == Pauli::Y) z_ |= m;
}

cplx PauliString::phase() const { return i_pow(phase_); }

PauliString PauliString::without_phase() const {
  PauliString p = *this;
  p.phase_ = 0;
  return p;
}

int PauliString::weight() const { return std::popcount(x_ | z_); }

int PauliString::y_count() const { return std::popcount(x_ & z_); }

std::vector<int> PauliString::support() const {
  std::vector<int> out;
  for (int site = 1; site <= sites_; ++site)
    if ((x_ | z_) & bit(site)) out.push_back(site);
  return out;
}

std::string PauliString::letters() const {
  std::string s;
  s.reserve(sites_);
  for (int site = 1; site <= sites_; ++site) s.push_back(to_char(at(site)));
  return s;
}

std::string PauliString::to_string() const {
  static constexpr const char* prefix[] = {"+", "+i", "-", "-i"};
  return prefix[phase_] + letters();
}

cplx PauliString::amplitude(std::uint64_t basis) const {
  const int minus = std::popcount(z_ & ~basis) & 1;
  return i_pow(phase_ + y_count() + 2 * minus);
}

PauliString pauli_mul(const PauliString& a, const PauliString& b) {
  if (a.sites_ != b.sites_)
    throw StructuralError("pauli_mul: length mismatch (" + std::to_string(a.sites_) + " vs " +
                          std::to_string(b.sites_) + ")");
  PauliString r(a.sites_);
  r.x_ = a.x_ ^ b.x_;
  r.z_ = a.z_ ^ b.z_;
  // Each operand is i^k i^{nY} X^x Z^z; moving Z^{z_a} past X^{x_b} costs (-1)^{|z_a & x_b|}.
  const int k = a.phase_ + b.phase_ + a.y_count() + b.y_count() +
                2 * std::popcount(a.z_ & b.x_) - r.y_count();
  r.phase_ = mod4(k);
  return r;
}

PauliString conjugate_by_labels(const PauliString& p, std::span<const CliffordLabel> labels) {
  if (static_cast<int>(labels.size()) != p.sites_)
    throw StructuralError("conjugate_by_labels: label count does not match string length");
  PauliString r = p;
  int sign = 0;  // number of -1 factors
  for (int site = 1; site <= p.sites_; ++site) {
    const Pauli letter = p.at(site);
    Pauli out = letter;
    switch (labels[site - 1]) {
      case CliffordLabel::RotX:  // X -> X, Y -> Z, Z -> -Y
        if (letter == Pauli::Y) out = Pauli::Z;
        if (letter == Pauli::Z) { out = Pauli::Y; ++sign; }
        break;
      case CliffordLabel::RotY:  // X -> -Z, Y -> Y, Z -> X
        if (letter == Pauli::X) { out = Pauli::Z; ++sign; }
        if (letter == Pauli::Z) out = Pauli::X;
        break;
      case CliffordLabel::Identity:
        break;
    }
    r.set(site, out);
  }
  r.phase_ = mod4(p.phase_ + 2 * sign);
  return r;
}

Eigen::MatrixXcd to_dense(const PauliString& p) {
  PauliStringSum s(p.size());
  s.add(1.0, p);
  return to_dense<cplx>(s);
}

// ---------------------------------------------------------------------------
// PauliStringSum
// ---------------------------------------------------------------------------

PauliStringSum PauliStringSum::identity(int sites, cplx coefficient) {
  PauliStringSum s(sites);
  s.add(coefficient, PauliString(sites));
  return s;
}

std::map<std::pair<std::uint64_t, std::uint64_t>, cplx> PauliStringSum::merged() const {
  std::map<std::pair<std::uint64_t, std::uint64_t>, cplx> m;
  for (const auto& t : terms_) m[{t.string.x_mask(), t.string.z_mask()}] += t.coefficient;
  return m;
}

void PauliStringSum::rebuild(std::map<std::pair<std::uint64_t, std::uint64_t>, cplx>&& merged) {
  terms_.clear();
  for (const auto& [key, c] : merged) {
    if (std::abs(c) < kDropThreshold) continue;
    PauliString p(sites_);
    for (int site = 1; site <= sites_; ++site) {
      const bool x = key.first & p.bit(site);
      const bool z = key.second & p.bit(site);
      p.set(site, x ? (z ? Pauli::Y : Pauli::X) : (z ? Pauli::Z : Pauli::I));
    }
    terms_.push_back({c, p});
  }
}

PauliStringSum& PauliStringSum::add(cplx coefficient, const PauliString& string) {
  if (string.size() != sites_) throw StructuralError("PauliStringSum::add: length mismatch");
  auto m = merged();
  m[{string.x_mask(), string.z_mask()}] += coefficient * string.phase();
  rebuild(std::move(m));
  return *this;
}

PauliStringSum& PauliStringSum::operator+=(const PauliStringSum& other) {
  if (other.sites_ != sites_) throw StructuralError("PauliStringSum: length mismatch");
  auto m = merged();
  for (const auto& t : other.terms_) m[{t.string.x_mask(), t.string.z_mask()}] += t.coefficient;
  rebuild(std::move(m));
  return *this;
}

PauliStringSum& PauliStringSum::operator*=(cplx scale) {
  auto m = merged();
  for (auto& [key, c] : m) c *= scale;
  rebuild(std::move(m));
  return *this;
}

cplx PauliStringSum::coefficient(const PauliString& string) const {
  for (const auto& t : terms_)
    if (t.string.x_mask() == string.x_mask() && t.string.z_mask() == string.z_mask())
      return t.coefficient;
  return 0.0;
}

bool PauliStringSum::is_hermitian(double tol) const {
  // Phase-free Pauli strings are Hermitian, so the sum is iff every coefficient is real.
  for (const auto& t : terms_)
    if (std::abs(t.coefficient.imag()) > tol) return false;
  return true;
}

double PauliStringSum::one_norm() const {
  double n = 0.0;
  for (const auto& t : terms_) n += std::abs(t.coefficient);
  return n;
}

std::string PauliStringSum::to_string() const {
  std::ostringstream os;
  os.precision(6);
  bool first = true;
  for (const auto& t : terms_) {
    if (!first) os << " + ";
    first = false;
    os << "(" << t.coefficient.real();
    if (t.coefficient.imag() != 0.0) os << (t.coefficient.imag() < 0 ? "-" : "+") << std::abs(t.coefficient.imag()) << "i";
    os << ")*" << t.string.letters();
  }
  if (first) os << "0";
  return os.str();
}

PauliStringSum operator+(PauliStringSum a, const PauliStringSum& b) {
  a += b;
  return a;
}

PauliStringSum operator*(cplx scale, PauliStringSum a) {
  a *= scale;
  return a;
}

PauliStringSum operator*(const PauliStringSum& a, const PauliStringSum& b) {
  if (a.size() != b.size()) throw StructuralError("PauliStringSum product: length mismatch");
  std::map<std::pair<std::uint64_t, std::uint64_t>, cplx> m;
  for (const auto& ta : a.terms())
    for (const auto& tb : b.terms()) {
      const PauliString p = pauli_mul(ta.string, tb.string);
      m[{p.x_mask(), p.z_mask()}] += ta.coefficient * tb.coefficient * p.phase();
    }
  PauliStringSum out(a.size());
  out.rebuild(std::move(m));
  return out;
}

PauliStringSum square_observable(const PauliStringSum& o) { return o * o; }

bool has_real_matrix(const PauliStringSum& op) {
  for (const auto& t : op.terms()) {
    const cplx c = t.coefficient * (t.string.y_count() % 2 ? cplx(0, 1) : cplx(1, 0));
    if (std::abs(c.imag()) > 1e-14) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Model Hamiltonians
// ---------------------------------------------------------------------------

PauliStringSum number_operator(int sites, int site) {
  PauliStringSum n(sites);
  n.add(0.5, PauliString(sites));
  n.add(0.5, PauliString::single(sites, site, Pauli::Z));
  return n;
}

PauliStringSum hopping(int sites, int a, int b, double coupling) {
  PauliStringSum h(sites);
  PauliString xx(sites), yy(sites);
  xx.set(a, Pauli::X);
  xx.set(b, Pauli::X);
  yy.set(a, Pauli::Y);
  yy.set(b, Pauli::Y);
  h.add(-coupling / 2.0, xx);
  h.add(-coupling / 2.0, yy);
  return h;
}

PauliStringSum build_ssh(int sites, double j_even, double j_odd, double j_nnn, double mu_edge) {
  if (sites < 2) throw DomainError("build_ssh: need at least 2 sites");
  if (sites > PauliString::kMaxSites) throw DomainError("build_ssh: too many sites");
  PauliStringSum h(sites);
  for (int x = 1; x + 1 <= sites; ++x) {
    const double j = (x % 2 == 0) ? j_even : j_odd;
    if (j != 0.0) h += hopping(sites, x, x + 1, j);
  }
  if (j_nnn != 0.0)
    for (int x = 1; x + 3 <= sites; ++x) h += hopping(sites, x, x + 3, j_nnn);
  if (mu_edge != 0.0) h += cplx(-mu_edge) * number_operator(sites, 1);
  return h;
}

PauliStringSum build_staggered_xy(int sites, double coupling) {
  return build_ssh(sites, coupling, -coupling, 0.0, 0.0);
}

double HamiltonianSpec::to_angular(double value) const {
  return angular ? value : 2.0 * std::numbers::pi * value;
}

PauliStringSum HamiltonianSpec::build() const {
  return build_ssh(sites, to_angular(j_even), to_angular(j_odd), to_angular(j_nnn),
                   to_angular(mu_edge));
}

}  // namespace rmkit
