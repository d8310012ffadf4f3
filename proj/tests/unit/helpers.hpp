#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "rmkit/pauli.hpp"
#include "rmkit/rng.hpp"
#include "rmkit/state.hpp"

namespace testing {

using rmkit::cplx;

inline Eigen::Matrix2cd letter_matrix(rmkit::Pauli p) {
  Eigen::Matrix2cd m;
  const cplx i(0.0, 1.0);
  switch (p) {
    case rmkit::Pauli::I: m << 1, 0, 0, 1; break;
    case rmkit::Pauli::X: m << 0, 1, 1, 0; break;
    case rmkit::Pauli::Y: m << 0, i, -i, 0; break;
    case rmkit::Pauli::Z: m << -1, 0, 0, 1; break;
  }
  return m;
}

inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) out.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
  return out;
}

/// Site 1 is the leftmost Kronecker factor.
inline Eigen::MatrixXcd kron_letters(const std::vector<rmkit::Pauli>& letters) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(1, 1);
  for (auto p : letters) m = kron(m, letter_matrix(p));
  return m;
}

inline Eigen::MatrixXcd two_site(int sites, int a, rmkit::Pauli pa, int b, rmkit::Pauli pb) {
  std::vector<rmkit::Pauli> letters(static_cast<std::size_t>(sites), rmkit::Pauli::I);
  letters[static_cast<std::size_t>(a - 1)] = pa;
  letters[static_cast<std::size_t>(b - 1)] = pb;
  return kron_letters(letters);
}

inline rmkit::StateVector random_state(int sites, rmkit::Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXcd v(Eigen::Index{1} << sites);
  for (auto& x : v) x = cplx(g(rng), g(rng));
  return rmkit::StateVector::normalized(sites, v);
}

inline rmkit::PauliString random_string(int sites, rmkit::Rng& rng) {
  std::uniform_int_distribution<int> pick(0, 3);
  std::string letters;
  for (int i = 0; i < sites; ++i) letters += "IXYZ"[pick(rng)];
  return rmkit::PauliString::from_letters(letters);
}

/// Random Hermitian sum with real coefficients on phase-free strings.
inline rmkit::PauliStringSum random_hermitian(int sites, int terms, rmkit::Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  rmkit::PauliStringSum out(sites);
  for (int t = 0; t < terms; ++t) out.add(g(rng), random_string(sites, rng));
  return out;
}

}  // namespace testing
