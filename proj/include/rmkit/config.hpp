#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rmkit/estimators.hpp"
#include "rmkit/protocol.hpp"
#include "rmkit/pulses.hpp"
#include "rmkit/scenarios.hpp"

namespace rmkit {

enum class ScenarioKind { SshGroundState, Antiferromagnet, Adiabatic, Quench };
std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& s);

struct ScenarioConfig {
  std::string label;
  ScenarioKind kind = ScenarioKind::SshGroundState;
  int sites = 8;
  SshPhase phase = SshPhase::Topological;
  SshCouplings couplings;
  /// Adiabatic preparation time in us.
  double t_p = 10.0;
  RampConfig ramp;
  /// Staggered XY coupling (MHz) and quench duration (us).
  double quench_j = 0.18;
  double quench_t = 1.0;

  /// Model Hamiltonian in rad/us: the SSH chain, or the staggered XY chain for quenches.
  PauliStringSum model() const;
  StateVector prepare() const;
};

struct ProtocolConfig {
  RecordMode mode = RecordMode::Ideal;
  std::vector<int> n_u{100};
  /// 0 means exact probabilities.
  int n_meas = 0;
  int n_ave = 20;
  double eps_percent = 0.0;
  ReadoutErrorModel readout;
  FluctuationScope scope = FluctuationScope::PerUnitary;
  /// "ideal" or a path (relative to the config file) to a calibrated schedule file.
  std::string schedule = "ideal";
  /// Keep H_mod on during the rotation window.
  bool interactions = true;
  double evolve_tol = 1e-9;
};

struct ObservableConfig {
  std::string name;
  PauliStringSum op;
};

struct EstimatorConfig {
  std::vector<std::vector<int>> purity;
  bool energy = false;
  bool variance = false;
  std::vector<ObservableConfig> observables;
  BiasCorrection correction = BiasCorrection::ClosedForm;
};

enum class RecordPolicy { None, First, All };

struct OutputConfig {
  std::string dir = "out";
  RecordPolicy records = RecordPolicy::First;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 1;
  std::vector<ScenarioConfig> scenarios;
  ProtocolConfig protocol;
  EstimatorConfig estimators;
  OutputConfig output;
  std::filesystem::path base_dir = ".";
  std::string hash;
};

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const noexcept { return errors.empty(); }
};

/// Parses a config document. Unknown keys and wrongly typed values are collected into `report`
/// rather than thrown; the returned config is only meaningful when report.ok().
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                              ValidationReport& report);

/// Cross-field checks: site ranges, N_U * N_meas budget, interaction phase during the rotation window.
void validate_config(const ExperimentConfig& config, bool allow_large, ValidationReport& report);

/// Reads, parses and validates; throws ConfigError listing every violation.
ExperimentConfig load_config(const std::filesystem::path& path, bool allow_large, ValidationReport* report = nullptr);

/// 64-bit FNV-1a of the compact JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& doc);

/// Nominal rotation schedule for the configured protocol.
PulseSchedule load_schedule(const ExperimentConfig& config);

}  // namespace rmkit
