#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "rmkit/evolve.hpp"
#include "rmkit/pauli.hpp"
#include "rmkit/rng.hpp"

namespace rmkit {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Hardware limits in angular units: 7 MHz peak amplitude, 35 MHz per 10 ns slew.
struct PulseLimits {
  double max_amplitude = kTwoPi * 7.0;
  double max_slew = kTwoPi * 3500.0;  ///< rad/us per us
};

/// Global waveforms Omega(t), Delta(t), f(t) sampled on a uniform grid and linearly interpolated,
/// plus the three light-shift amplitudes selected by the site labels. All rates in rad/us.
class PulseSchedule {
public:
  PulseSchedule() = default;
  PulseSchedule(double duration, Eigen::VectorXd omega, Eigen::VectorXd delta, Eigen::VectorXd f,
                std::array<double, 3> delta_amps);

  double duration() const noexcept { return duration_; }
  double grid_dt() const noexcept { return grid_dt_; }
  Eigen::Index intervals() const noexcept { return omega_.size() - 1; }
  const Eigen::VectorXd& omega() const noexcept { return omega_; }
  const Eigen::VectorXd& delta() const noexcept { return delta_; }
  const Eigen::VectorXd& f() const noexcept { return f_; }
  const std::array<double, 3>& delta_amps() const noexcept { return amps_; }
  double delta_amp(CliffordLabel label) const { return amps_[static_cast<std::size_t>(to_int(label) - 1)]; }

  struct Sample {
    double omega, delta, f;
  };
  Sample at(double t) const;
  std::vector<double> knots() const;

  /// Returns a copy with Omega, Delta and each light-shift amplitude scaled independently.
  PulseSchedule scaled(double omega_scale, double delta_scale, const std::array<double, 3>& amp_scales) const;

  /// Largest |value| and |slope| over Omega, Delta and every f * delta_alpha.
  double peak_amplitude() const;
  double peak_slew() const;
  /// Throws ConstraintError naming the first violated limit.
  void check(const PulseLimits& limits) const;

  nlohmann::json to_json() const;
  static PulseSchedule from_json(const nlohmann::json& j);

  friend bool operator==(const PulseSchedule&, const PulseSchedule&) = default;

private:
  double duration_ = 0.0;
  double grid_dt_ = 0.0;
  Eigen::VectorXd omega_;
  Eigen::VectorXd delta_;
  Eigen::VectorXd f_;
  std::array<double, 3> amps_{0.0, 0.0, 0.0};
};

/// Local drive realizing the schedule on every site, site m using the light shift of labels[m].
Drive make_drive(const PulseSchedule& schedule, std::vector<CliffordLabel> labels);

enum class FluctuationScope { PerUnitary, PerShot };

struct FluctuationModel {
  double eps_percent = 0.0;
  FluctuationScope scope = FluctuationScope::PerUnitary;
};

std::string to_string(FluctuationScope scope);
FluctuationScope fluctuation_scope_from_string(const std::string& s);

/// Multiplies Omega, Delta and each delta_alpha by an independent (1 + g), g ~ N(0, eps/100).
/// eps = 0 returns the schedule unchanged and consumes no random numbers.
PulseSchedule perturb(const PulseSchedule& schedule, const FluctuationModel& model, Rng& rng);

/// Square-pulse reference: Omega T / 2 = pi/2, Delta = 0 then f*delta_2, light shifts scaled by `ratio`.
/// `intervals` must be odd so that the jump at T/2 falls in the middle of one grid interval.
PulseSchedule ideal_schedule(double duration, double ratio, int intervals = 2001);

/// Trapezoidal two-level realistic schedule. Each waveform rises from 0 to its first level over
/// `ramp`, switches to its second level over `ramp` centred on `switch_time`, and falls back to 0.
struct RealisticParams {
  double duration = 0.15;
  double grid_dt = 5e-4;
  double ramp = 0.01;
  double switch_time = 0.075;
  double omega1 = std::numbers::pi / 0.15;
  double omega2 = std::numbers::pi / 0.15;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double f2 = 1.0;
  std::array<double, 3> amps{0.0, 0.0, 0.0};

  nlohmann::json to_json() const;
  static RealisticParams from_json(const nlohmann::json& j);
  friend bool operator==(const RealisticParams&, const RealisticParams&) = default;
};

/// Throws ConstraintError when the parameters break the limits (zero ramp, amplitude, slew).
PulseSchedule realistic_schedule(const RealisticParams& params, const PulseLimits& limits = {});

struct PropagatorOptions {
  double tol = 1e-10;
  int max_refinements = 12;
  /// When set, skip step doubling and use this many steps per grid interval.
  std::optional<int> fixed_steps;
};

/// 2x2 propagator of one site driven by the schedule with light shift delta_label.
Eigen::Matrix2cd single_qubit_propagator(const PulseSchedule& schedule, CliffordLabel label,
                                         const PropagatorOptions& options = {});

/// Steps per grid interval for which single_qubit_propagator meets options.tol on every label.
int converged_steps(const PulseSchedule& schedule, const PropagatorOptions& options = {});

/// max over z-phases phi of |Tr[diag(1, e^{i phi}) U R^dagger] / 2|^2 = ((|M00| + |M11|) / 2)^2.
double rotation_fidelity(const Eigen::Matrix2cd& u, CliffordLabel label);

/// Bloch vector of U^dagger Z U, i.e. the axis actually read out by the measurement.
Eigen::Vector3d measured_axis(const Eigen::Matrix2cd& u);

/// A_alpha = sum over the two ordered pairs (beta, gamma) with eps_{alpha beta gamma} != 0 of
/// |<up| R_beta R_gamma^dagger |up>|^2. The ideal rotation set gives (1, 1, 1).
std::array<double, 3> figure_of_merit(const std::array<Eigen::Matrix2cd, 3>& r);
/// |sum_{beta gamma} eps_{alpha beta gamma} <up| R_beta R_gamma^dagger |up>|^2, kept for auditing.
std::array<double, 3> figure_of_merit_literal(const std::array<Eigen::Matrix2cd, 3>& r);

std::array<Eigen::Matrix2cd, 3> ideal_rotations();

struct FigureOfMeritStats {
  std::array<double, 3> mean{};
  std::array<double, 3> std{};
  std::size_t draws = 0;
};

/// Monte Carlo statistics of A_alpha / 2 over perturbed schedules (one perturbation per draw shared
/// by the three rotations). Independent of `threads`.
FigureOfMeritStats figure_of_merit_statistics(const PulseSchedule& schedule, double eps_percent, std::size_t draws,
                                              std::uint64_t seed, int threads = 1);

struct CalibrationOptions {
  PulseLimits limits;
  double fidelity_floor = 0.995;
  int restarts = 6;
  int max_evaluations = 4000;
  std::uint64_t seed = 1;
};

struct CalibrationResult {
  RealisticParams params;
  std::array<double, 3> fidelities{};
  int evaluations = 0;
};

/// Nelder-Mead search over levels, light shifts and switch time maximizing the smallest noiseless
/// rotation fidelity under the limits. Throws CalibrationError (with the best report in the message)
/// when the floor is not reached.
CalibrationResult calibrate(const RealisticParams& start, const CalibrationOptions& options = {});

/// Best-effort projection of the square-pulse reference onto the hardware limits.
RealisticParams default_realistic_params(const PulseLimits& limits = {});

}  // namespace rmkit
