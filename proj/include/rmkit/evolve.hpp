#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "rmkit/linalg.hpp"
#include "rmkit/state.hpp"

namespace rmkit {

/// Site-resolved single-body fields h_m(t) = rabi_m(t)/2 X_m - detuning_m(t) n_m.
struct LocalFields {
  Eigen::VectorXd rabi;
  Eigen::VectorXd detuning;
};

/// Time-dependent local drive. `fill` writes the fields at time t; `knots` lists the times at
/// which the fields may have kinks or jumps (steps never straddle a knot).
struct Drive {
  int sites = 0;
  std::vector<double> knots;
  std::function<void(double t, LocalFields& out)> fill;
  /// Optional time-dependent factor multiplying the static part; unset means 1.
  std::function<double(double t)> static_scale;
};

/// Static interaction part, kept as a sparse matrix with a norm bound.
class StaticGenerator {
public:
  StaticGenerator() = default;
  explicit StaticGenerator(const PauliStringSum& h);

  int sites() const noexcept { return sites_; }
  bool empty() const noexcept { return empty_; }
  const SparseOperator& matrix() const noexcept { return matrix_; }
  double norm_bound() const noexcept { return norm_bound_; }
  /// Same operator with the opposite sign (backward evolution).
  StaticGenerator negated() const;

private:
  int sites_ = 0;
  bool empty_ = true;
  SparseOperator matrix_;
  double norm_bound_ = 0.0;
};

struct EvolveOptions {
  /// Bound on the change of final amplitudes when the step is halved.
  double tol = 1e-9;
  int max_refinements = 10;
  /// Initial step satisfies ||H_static|| * dt <= norm_dt.
  double norm_dt = 0.05;
  /// When set, skip step doubling and use this many steps per knot interval.
  std::optional<int> fixed_steps;
};

struct EvolveReport {
  int steps_per_interval = 0;
  double error_estimate = 0.0;
};

/// Integrates i d/dt psi = [H_drive(t) + H_static] psi from t0 to t1.
/// Fourth-order composition of symmetric splittings: local 2x2 factors are exponentiated exactly,
/// the static part by a Taylor action. Throws ConvergenceError if step doubling cannot meet tol.
StateVector evolve(const StateVector& psi, const Drive* drive, const StaticGenerator* h_static, double t0,
                   double t1, const EvolveOptions& options = {}, EvolveReport* report = nullptr);

StateVector evolve(const StateVector& psi, const Drive* drive, const PauliStringSum* h_static, double t0,
                   double t1, const EvolveOptions& options = {}, EvolveReport* report = nullptr);

/// exp(-i dt (rabi/2 X - detuning n)) in the index basis (0 = down, 1 = up).
Eigen::Matrix2cd local_propagator(double rabi, double detuning, double dt);

/// Drive running backwards over [t0, t1] with negated fields, so that evolving with it undoes
/// the forward evolution (pair with StaticGenerator::negated()).
Drive time_reversed(const Drive& drive, double t0, double t1);

}  // namespace rmkit
