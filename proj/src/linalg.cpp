#include "rmkit/linalg.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

namespace rmkit {

void expm_multiply(const SparseOperator& a, double norm_bound, double t, Eigen::Ref<Eigen::VectorXcd> y) {
  if (t == 0.0 || norm_bound == 0.0) return;
  const int pieces = std::max(1, static_cast<int>(std::ceil(std::abs(t) * norm_bound / 0.5)));
  const double dt = t / pieces;
  const cplx factor(0.0, -dt);
  Eigen::VectorXcd term(y.size());
  Eigen::VectorXcd next(y.size());
  for (int p = 0; p < pieces; ++p) {
    term = y;
    const double scale = y.norm();
    for (int k = 1; k <= 40; ++k) {
      next.noalias() = a * term;
      term = next * (factor / static_cast<double>(k));
      y += term;
      if (term.norm() <= 1e-17 * scale) break;
    }
  }
}

bool conserves_excitations(const PauliStringSum& h) {
  const SparseOperator m = to_sparse<cplx>(h);
  for (Eigen::Index r = 0; r < m.outerSize(); ++r)
    for (SparseOperator::InnerIterator it(m, r); it; ++it)
      if (std::popcount(static_cast<std::uint64_t>(it.row())) != std::popcount(static_cast<std::uint64_t>(it.col())))
        return false;
  return true;
}

LanczosResult lanczos_lowest(const LinearMap& apply, Eigen::Index n, double tol, int max_iterations,
                             std::uint64_t seed) {
  const int m_max = static_cast<int>(std::min<Eigen::Index>(n, max_iterations));
  Eigen::MatrixXcd basis(n, m_max);
  std::vector<double> alpha;
  std::vector<double> beta;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXcd v(n);
  for (Eigen::Index k = 0; k < n; ++k) v(k) = cplx(normal(rng), normal(rng));
  v.normalize();

  Eigen::VectorXcd w(n);
  LanczosResult best;
  best.value = std::numeric_limits<double>::infinity();

  auto ritz = [&](int size) {
    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(size, size);
    for (int k = 0; k < size; ++k) {
      tri(k, k) = alpha[k];
      if (k + 1 < size) tri(k, k + 1) = tri(k + 1, k) = beta[k];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
    return std::make_pair(es.eigenvalues()(0), Eigen::VectorXd(es.eigenvectors().col(0)));
  };

  int j = 0;
  for (; j < m_max; ++j) {
    basis.col(j) = v;
    apply(v, w);
    const double a = basis.col(j).dot(w).real();
    alpha.push_back(a);
    w -= a * basis.col(j);
    if (j > 0) w -= beta[j - 1] * basis.col(j - 1);
    for (int pass = 0; pass < 2; ++pass) w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).adjoint() * w);
    const double b = w.norm();
    beta.push_back(b);

    const bool exhausted = b < 1e-13 || j + 1 == m_max;
    if (exhausted || (j + 1) % 10 == 0) {
      auto [theta, y] = ritz(j + 1);
      const double estimate = std::abs(b * y(j));
      if (estimate <= tol || exhausted) {
        best.value = theta;
        best.vector = basis.leftCols(j + 1) * y;
        best.vector.normalize();
        best.iterations = j + 1;
        break;
      }
    }
    v = w / b;
  }
  Eigen::VectorXcd hv(n);
  apply(best.vector, hv);
  best.residual = (hv - best.value * best.vector).norm();
  return best;
}

namespace {

struct BlockResult {
  double e0 = 0.0;
  double e1 = std::numeric_limits<double>::infinity();
  Eigen::VectorXcd vector;
};

template <typename Scalar>
BlockResult solve_dense_block(const SparseOperator& full, const std::vector<Eigen::Index>& index, bool want_vector) {
  const auto n = static_cast<Eigen::Index>(index.size());
  std::vector<Eigen::Index> position(static_cast<std::size_t>(full.rows()), -1);
  for (Eigen::Index k = 0; k < n; ++k) position[static_cast<std::size_t>(index[k])] = k;

  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Dense block = Dense::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (SparseOperator::InnerIterator it(full, index[r]); it; ++it)
      block(r, position[static_cast<std::size_t>(it.col())]) = detail::narrow<Scalar>(it.value());

  Eigen::SelfAdjointEigenSolver<Dense> es(block, want_vector ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConvergenceError("dense eigensolver failed");
  BlockResult out;
  out.e0 = es.eigenvalues()(0);
  if (n > 1) out.e1 = es.eigenvalues()(1);
  if (want_vector) out.vector = es.eigenvectors().col(0).template cast<cplx>();
  return out;
}

BlockResult solve_lanczos_block(const SparseOperator& full, const std::vector<Eigen::Index>& index, double tol) {
  const auto n = static_cast<Eigen::Index>(index.size());
  std::vector<Eigen::Index> position(static_cast<std::size_t>(full.rows()), -1);
  for (Eigen::Index k = 0; k < n; ++k) position[static_cast<std::size_t>(index[k])] = k;
  SparseOperator block(n, n);
  std::vector<Eigen::Triplet<cplx>> triplets;
  for (Eigen::Index r = 0; r < n; ++r)
    for (SparseOperator::InnerIterator it(full, index[r]); it; ++it)
      triplets.emplace_back(r, position[static_cast<std::size_t>(it.col())], it.value());
  block.setFromTriplets(triplets.begin(), triplets.end());

  const int max_iter = static_cast<int>(std::min<Eigen::Index>(n, 2000));
  LanczosResult first = lanczos_lowest(
      [&](const Eigen::VectorXcd& in, Eigen::VectorXcd& out) { out.noalias() = block * in; }, n, tol * 1e-2, max_iter);
  if (first.residual > tol) throw ConvergenceError("Lanczos did not reach the residual tolerance");

  double shift = 0.0;
  for (Eigen::Index k = 0; k < block.outerSize(); ++k)
    for (SparseOperator::InnerIterator it(block, k); it; ++it) shift += std::abs(it.value());
  shift = 2.0 * shift / static_cast<double>(n) + 1.0 + std::abs(first.value);
  const Eigen::VectorXcd& ground = first.vector;
  LanczosResult second = lanczos_lowest(
      [&](const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
        out.noalias() = block * in;
        out += (shift * ground.dot(in)) * ground;
      },
      n, 1e-7, max_iter, 11);

  BlockResult out;
  out.e0 = first.value;
  out.e1 = n > 1 ? second.value : std::numeric_limits<double>::infinity();
  out.vector = first.vector;
  return out;
}

}  // namespace

GroundState ground_state(const PauliStringSum& h, const EigenOptions& options) {
  if (!h.is_hermitian()) throw NumericalContractError("ground_state: operator is not Hermitian");
  const int sites = h.size();
  if (sites < 1 || sites > StateVector::kMaxSites) throw DomainError("ground_state: unsupported size");
  const SparseOperator full = to_sparse<cplx>(h);
  const Eigen::Index dim = full.rows();
  const bool real = has_real_matrix(h);

  std::vector<std::vector<Eigen::Index>> sectors;
  if (conserves_excitations(h)) {
    sectors.resize(static_cast<std::size_t>(sites) + 1);
    for (Eigen::Index b = 0; b < dim; ++b)
      sectors[static_cast<std::size_t>(std::popcount(static_cast<std::uint64_t>(b)))].push_back(b);
  } else {
    sectors.emplace_back(static_cast<std::size_t>(dim));
    for (Eigen::Index b = 0; b < dim; ++b) sectors[0][static_cast<std::size_t>(b)] = b;
  }

  std::vector<BlockResult> results;
  for (const auto& index : sectors) {
    const auto n = static_cast<Eigen::Index>(index.size());
    if (n <= options.dense_limit)
      results.push_back(real ? solve_dense_block<double>(full, index, true) : solve_dense_block<cplx>(full, index, true));
    else
      results.push_back(solve_lanczos_block(full, index, options.residual_tolerance));
  }

  std::size_t best = 0;
  for (std::size_t k = 1; k < results.size(); ++k)
    if (results[k].e0 < results[best].e0) best = k;
  double next = results[best].e1;
  for (std::size_t k = 0; k < results.size(); ++k)
    if (k != best) next = std::min(next, results[k].e0);

  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
  const auto& index = sectors[best];
  for (std::size_t k = 0; k < index.size(); ++k) psi(index[k]) = results[best].vector(static_cast<Eigen::Index>(k));
  psi.normalize();

  const double e0 = results[best].e0;
  const double residual = (full * psi - e0 * psi).norm();
  if (residual > options.residual_tolerance)
    throw ConvergenceError("ground_state residual " + std::to_string(residual) + " above tolerance");
  const double gap = next - e0;
  if (gap < options.degeneracy_threshold)
    throw DegeneracyError("ground state is degenerate (gap " + std::to_string(gap) + "); add an edge field", gap);
  return {e0, gap, StateVector(sites, std::move(psi))};
}

}  // namespace rmkit
