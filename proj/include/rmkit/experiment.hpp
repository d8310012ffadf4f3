#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rmkit/config.hpp"
#include "rmkit/estimators.hpp"

namespace rmkit {

struct RunOptions {
  int threads = 1;
  /// Overrides the configured output directory when not empty.
  std::filesystem::path out_dir;
};

/// One randomized-measurement record of `state` for the configured protocol.
MeasurementRecord run_protocol(const ExperimentConfig& config, const StateVector& state, const PauliStringSum& h_mod,
                               const PulseSchedule& schedule, int n_u, std::uint64_t seed, int threads);

/// Row labels of the configured estimates, in evaluation order.
struct TargetList {
  std::vector<std::string> quantity;
  std::vector<std::string> target;
};
TargetList estimator_targets(const ExperimentConfig& config, const ScenarioConfig& scenario);
/// Estimates from one record, in the order of estimator_targets.
std::vector<double> evaluate_targets(const ExperimentConfig& config, const MeasurementRecord& record,
                                     const PauliStringSum& h_mod, const PauliStringSum& h_squared);

/// Scenario -> protocol -> estimators -> aggregate over N_ave for each N_U. Results depend only on the config
/// and its seed.
std::vector<CsvRow> run_experiment(const ExperimentConfig& config, const RunOptions& options,
                                   const std::filesystem::path& records_dir = {});

/// Exact values of the same targets from the state vector.
std::vector<CsvRow> oracle_rows(const ExperimentConfig& config);

CsvMetadata csv_metadata(const ExperimentConfig& config);

/// run_experiment plus file output: <dir>/results.csv and NDJSON records under <dir>/records.
std::filesystem::path run_to_directory(const ExperimentConfig& config, const RunOptions& options);
std::filesystem::path oracle_to_directory(const ExperimentConfig& config, const RunOptions& options);

}  // namespace rmkit
