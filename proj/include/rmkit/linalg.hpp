#pragma once

#include <functional>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "rmkit/pauli.hpp"
#include "rmkit/state.hpp"

namespace rmkit {

using SparseOperator = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

/// y <- exp(-i * t * A) * y by a truncated Taylor series, splitting t so each piece has
/// ||A|| * dt <= 1/2. `norm_bound` must bound the operator norm of A (e.g. a one-norm).
void expm_multiply(const SparseOperator& a, double norm_bound, double t, Eigen::Ref<Eigen::VectorXcd> y);

struct GroundState {
  double energy = 0.0;
  /// Distance from E0 to the next eigenvalue, counting multiplicity.
  double gap = 0.0;
  StateVector state;
};

struct EigenOptions {
  double degeneracy_threshold = 1e-10;
  double residual_tolerance = 1e-8;
  /// Blocks up to this dimension are diagonalized densely, larger ones with Lanczos.
  Eigen::Index dense_limit = 1500;
};

/// Lowest eigenpair of a Hermitian sum. When the operator conserves the number of up spins the
/// search runs sector by sector. Throws DegeneracyError if the gap is below the threshold and
/// ConvergenceError if the residual cannot be brought below `residual_tolerance`.
GroundState ground_state(const PauliStringSum& h, const EigenOptions& options = {});

/// True when every matrix element connects basis states with equal numbers of set bits.
bool conserves_excitations(const PauliStringSum& h);

/// Lowest eigenpair of a Hermitian linear map on C^n by Lanczos with full reorthogonalization.
struct LanczosResult {
  double value = 0.0;
  Eigen::VectorXcd vector;
  double residual = 0.0;
  int iterations = 0;
};
using LinearMap = std::function<void(const Eigen::VectorXcd& in, Eigen::VectorXcd& out)>;
LanczosResult lanczos_lowest(const LinearMap& apply, Eigen::Index n, double tol, int max_iterations,
                             std::uint64_t seed = 7);

}  // namespace rmkit
